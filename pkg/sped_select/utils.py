import logging
import math
import sys

import numpy as np

from .errors import DataError, DomainError
from .sped import Sample

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def setting_to_filename(density_index, n, p, prefix="records"):
    """
    Build the file name of one study cell, e.g. ``records_d1_n500_p0.1.csv``.

    Args:
        density_index (int): Target density number.
        n (int): Sample size.
        p (float): Noise share.
        prefix (str): Leading word of the name.

    Returns:
        str: A file name made of ``[A-Za-z0-9_.-]`` only.
    """
    raw = f"{prefix}_d{density_index}_n{n}_p{p:g}.csv"
    valid_chars = "-_."
    return "".join(c for c in raw if c.isalnum() or c in valid_chars)


def manifest_path(output_path):
    """Companion manifest path of an output file."""
    return f"{output_path}{MANIFEST_SUFFIX}"


def deduplicate_list(input_list):
    """
    Deduplicates a list while preserving the original order of elements.

    Args:
        input_list (list): The input list to be deduplicated.

    Returns:
        list: The deduplicated list.
    """
    seen = set()
    deduplicated_list = [x for x in input_list if not (x in seen or seen.add(x))]
    return deduplicated_list


def parse_sample_lines(lines):
    """
    Parse one decimal real per line.

    Blank lines are skipped and ``#`` starts a comment.

    Args:
        lines (Iterable[str]): Input lines.

    Returns:
        Sample: The parsed observations.

    Raises:
        DataError: Naming the first line that is not a finite real.
    """
    values = []
    for number, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError:
            raise DataError(f"not a number: {text!r}", line=number) from None
        if not math.isfinite(value):
            raise DataError(f"non-finite value: {text!r}", line=number)
        values.append(value)
    if not values:
        raise DataError("input contains no observations")
    logger.debug(f"Parsed {len(values)} observations")
    return Sample(np.array(values))


def read_sample(path):
    """
    Read observations from a file, or from stdin when ``path`` is ``-``.

    Raises:
        DataError: If the file cannot be read or a line is not a finite real.
    """
    if path == "-":
        return parse_sample_lines(sys.stdin)
    try:
        with open(path, "r", encoding="utf-8") as file:
            return parse_sample_lines(file)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc


def parse_xgrid(text):
    """
    Parse ``min,max,count`` into evenly spaced evaluation points.

    Raises:
        DomainError: On malformed text, min >= max or count < 2.
    """
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 3:
        raise DomainError(f"x grid must be 'min,max,count', got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise DomainError(f"x grid must be 'min,max,count', got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError(f"x grid needs finite min < max, got {text!r}")
    if count < 2:
        raise DomainError(f"x grid needs count >= 2, got {count}")
    return np.linspace(lo, hi, count)


def parse_list(text, convert=str, name="value"):
    """
    Split a comma separated option into converted, deduplicated items.

    Args:
        text (str): e.g. ``"1,2,3"``.
        convert (Callable[[str], Any]): Applied to every stripped item.
        name (str): Used in error messages.

    Returns:
        list: The items in first-seen order.

    Raises:
        DomainError: If an item is empty or cannot be converted.
    """
    items = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise DomainError(f"empty {name} in {text!r}")
        try:
            items.append(convert(part))
        except ValueError:
            raise DomainError(f"invalid {name}: {part!r}") from None
    return deduplicate_list(items)
