"""Terminal output of long runs: log records and progress bars share stderr."""

import logging
import sys

import coloredlogs
from tqdm import tqdm

LOG_FORMAT = (
    "%(asctime)s %(filename)s:%(lineno)d %(name)s[%(process)d] "
    "%(levelname)s %(message)s"
)
_HANDLER_MARKER = "_sped_select_tqdm_handler"


class TqdmHandler(logging.StreamHandler):
    """
    Stream handler that prints above an active tqdm bar instead of through it.

    Writes to stderr unless another stream is given, so stdout only carries
    command results.
    """

    def __init__(self, stream=None):
        super().__init__(sys.stderr if stream is None else stream)

    def emit(self, record):
        try:
            tqdm.write(self.format(record), file=self.stream, end=self.terminator)
        except Exception:
            self.handleError(record)


def managed_handler(root=None):
    """
    The TqdmHandler owned by this module, created and attached on first use.

    Args:
        root (logging.Logger, optional): Logger to inspect. Defaults to the root
            logger.

    Returns:
        TqdmHandler: The single managed handler of ``root``.
    """
    root = logging.getLogger() if root is None else root
    for handler in root.handlers:
        if getattr(handler, _HANDLER_MARKER, False):
            return handler
    handler = TqdmHandler()
    setattr(handler, _HANDLER_MARKER, True)
    root.addHandler(handler)
    return handler


def setup_logging(log_level: str = "WARN"):
    """
    Route the root logger through one colored TqdmHandler.

    Repeated calls change the level and refresh the formatter; they never add a
    second managed handler, and handlers installed by other code are kept.

    Args:
        log_level (str, optional): Minimum level of handled messages.
            Defaults to "WARN".

    Returns:
        logging.Logger: The root logger.
    """
    root = logging.getLogger()
    managed_handler(root).setFormatter(coloredlogs.ColoredFormatter(LOG_FORMAT))
    root.setLevel(log_level)
    return root


def current_level():
    """Name of the root logger's level, for handing to worker processes."""
    return logging.getLevelName(logging.getLogger().getEffectiveLevel())


def init_worker(log_level):
    """Pool initializer: spawned workers start with an unconfigured root logger."""
    setup_logging(log_level)


def progress_bar(total, desc, enabled=True):
    """
    Replicate counter drawn on stderr.

    Args:
        total (int): Number of replicates.
        desc (str): Label shown left of the bar.
        enabled (bool): False returns a silent bar with the same interface.

    Returns:
        tqdm: The bar, usable as a context manager.
    """
    return tqdm(
        total=total, desc=desc, unit="replicate", file=sys.stderr, disable=not enabled
    )


def get_logger():
    """
    Return the root logger, configuring it first if this module has not yet.

    Returns:
        logging.Logger: The root logger.
    """
    root = logging.getLogger()
    if not any(getattr(h, _HANDLER_MARKER, False) for h in root.handlers):
        setup_logging()
    return root
