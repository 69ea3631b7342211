import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import mdformat  # noqa: E402
import pandas as pd  # noqa: E402

from .errors import DataError, MissingCompanionError  # noqa: E402
from .selection import Method  # noqa: E402
from .simulation import SimRecord  # noqa: E402
from .utils import manifest_path  # noqa: E402

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "replicate",
    "method",
    "alpha_hat",
    "ise",
    "ise_oracle",
    "loss_ratio",
]

# fixed salt and no date keep SVG output byte-stable between runs
_SVG_SETTINGS = {"svg.hashsalt": "sped-select", "svg.fonttype": "none"}
_SVG_METADATA = {"Date": None, "Creator": None}


def tool_version():
    """Installed version of the package, or ``0+unknown`` from a source tree."""
    try:
        return version("sped-select")
    except PackageNotFoundError:
        return "0+unknown"


def utc_now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """
    Everything needed to re-run a command and reproduce its outputs.

    Attributes:
        command (str): Sub-command name.
        parameters (dict): Parsed command parameters, echoed verbatim.
        version (str): Tool version.
        seed (int, optional): Root seed of random draws.
        started (str): UTC start time.
        finished (str, optional): UTC end time.
        quadrature (list[dict]): Settings of every frequency grid used.
        setting (dict, optional): Study cell of simulation outputs.
        outputs (list[str]): Files written by the command.
    """

    command: str
    parameters: dict
    version: str = field(default_factory=tool_version)
    seed: int = None
    started: str = field(default_factory=utc_now)
    finished: str = None
    quadrature: list = field(default_factory=list)
    setting: dict = None
    outputs: list = field(default_factory=list)

    def add_grid(self, grid, role):
        self.quadrature.append({"role": role, **grid.describe()})

    def finish(self):
        self.finished = utc_now()
        return self


class ExportManager:
    def __init__(self, manifest=None):
        """
        Initialize the ExportManager.

        Args:
            manifest (RunManifest, optional): Every written file is added to its
                ``outputs``.
        """
        self.manifest = manifest
        logger.debug("ExportManager initialized.")

    def _prepare(self, output_path):
        folder = os.path.dirname(output_path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        if self.manifest is not None:
            self.manifest.outputs.append(output_path)

    def export_csv(self, frame, output_path):
        """
        Write a table as UTF-8 CSV with ``\\n`` line endings and round-trip floats.

        Args:
            frame (pandas.DataFrame | dict): Columns in output order.
            output_path (str): Destination file.
        """
        if not isinstance(frame, pd.DataFrame):
            frame = pd.DataFrame(frame)
        self._prepare(output_path)
        frame.to_csv(
            output_path,
            index=False,
            float_format="%.17g",
            lineterminator="\n",
            encoding="utf-8",
        )
        logger.info(f"Exported {len(frame)} rows to CSV file: {output_path}")

    def export_records(self, records, output_path):
        """Write simulation records with the fixed record header."""
        rows = [record.as_row() for record in records]
        frame = pd.DataFrame(rows, columns=RECORD_COLUMNS)
        self.export_csv(frame, output_path)

    def export_manifest(self, output_path):
        """
        Write the manifest next to ``output_path``.

        Returns:
            str: The manifest path.
        """
        path = manifest_path(output_path)
        self.manifest.finish()
        with open(path, "w", encoding="utf-8") as json_file:
            json.dump(asdict(self.manifest), json_file, ensure_ascii=False, indent=4)
        logger.info(f"Exported manifest to JSON file: {path}")
        return path

    def export_markdown(self, title, tables, output_path):
        """
        Write titled markdown tables, normalised by mdformat.

        Args:
            title (str): Document heading.
            tables (list[tuple[str, pandas.DataFrame]]): Section heading and table.
            output_path (str): Destination file.
        """
        parts = [f"# {title}\n"]
        for heading, frame in tables:
            parts.append(f"## {heading}\n")
            parts.append(_markdown_table(frame))
        content = mdformat.text("\n".join(parts), extensions={"tables"})
        self._prepare(output_path)
        with open(output_path, "w", encoding="utf-8", newline="\n") as md_file:
            md_file.write(content)
        logger.info(f"Exported report to markdown file: {output_path}")

    def plot_lines(self, output_path, series, xlabel, ylabel, logx=False, vlines=()):
        """
        Static SVG line plot.

        Args:
            output_path (str): Destination ``.svg`` file.
            series (list[tuple[str | None, Sequence, Sequence, dict]]): One
                (label, x, y, line style) tuple per curve.
            xlabel (str): Horizontal axis label.
            ylabel (str): Vertical axis label.
            logx (bool): Logarithmic horizontal axis.
            vlines (Iterable[tuple[float, dict]]): Vertical reference lines.
        """
        with plt.rc_context(_SVG_SETTINGS):
            fig, ax = plt.subplots(figsize=(7, 4.5))
            for label, x, y, style in series:
                ax.plot(x, y, label=label, **style)
            for x, style in vlines:
                ax.axvline(x, **style)
            if logx:
                ax.set_xscale("log")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if any(label for label, *_ in series):
                ax.legend(frameon=False)
            self._save(fig, output_path)

    def plot_scatter(self, output_path, x, y, xlabel, ylabel, vline=None, hline=None):
        """Static SVG scatter plot on log-log axes with optional reference lines."""
        with plt.rc_context(_SVG_SETTINGS):
            fig, ax = plt.subplots(figsize=(6, 4.5))
            ax.scatter(x, y, s=8, alpha=0.6, color="tab:blue")
            if vline is not None:
                ax.axvline(vline, color="black", linestyle="--", linewidth=1)
            if hline is not None:
                ax.axhline(hline, color="gray", linestyle=":", linewidth=1)
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            self._save(fig, output_path)

    def plot_errorbars(self, output_path, groups, xlabel, ylabel):
        """
        Static SVG chart of means with one standard error, one series per group.

        Args:
            groups (dict[str, tuple[Sequence, Sequence, Sequence]]): label to
                (x, mean, se).
        """
        with plt.rc_context(_SVG_SETTINGS):
            fig, ax = plt.subplots(figsize=(6, 4.5))
            for label, (x, mean, se) in groups.items():
                ax.errorbar(x, mean, yerr=se, marker="o", capsize=3, label=label)
            ax.set_xscale("log")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            ax.legend(frameon=False)
            self._save(fig, output_path)

    def _save(self, fig, output_path):
        self._prepare(output_path)
        try:
            fig.savefig(output_path, format="svg", metadata=_SVG_METADATA)
        finally:
            plt.close(fig)
        logger.info(f"Exported plot to SVG file: {output_path}")


def _markdown_table(frame):
    header = "| " + " | ".join(str(c) for c in frame.columns) + " |"
    rule = "| " + " | ".join("---" for _ in frame.columns) + " |"
    rows = [
        "| " + " | ".join(_format_cell(v) for v in row) + " |"
        for row in frame.itertuples(index=False)
    ]
    return "\n".join([header, rule, *rows]) + "\n"


def _format_cell(value):
    if isinstance(value, float):
        return f"{value:.3g}"
    return str(value)


def load_manifest(records_path):
    """
    Read the manifest of a results file.

    Raises:
        MissingCompanionError: If the manifest does not exist.
        DataError: If it is not valid JSON.
    """
    path = manifest_path(records_path)
    if not os.path.exists(path):
        raise MissingCompanionError(f"missing manifest for {records_path}: {path}")
    try:
        with open(path, "r", encoding="utf-8") as json_file:
            return json.load(json_file)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid manifest {path}: {exc.msg}", line=exc.lineno) from exc


def read_records(records_path):
    """
    Load a records CSV written by ``export_records``.

    Returns:
        list[SimRecord]: The records, in file order.

    Raises:
        DataError: If the file is unreadable or its header is not the record header.
    """
    try:
        frame = pd.read_csv(
            records_path, dtype={"method": str}, float_precision="round_trip"
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read records {records_path}: {exc}") from exc
    if list(frame.columns) != RECORD_COLUMNS:
        raise DataError(f"{records_path} does not have the record header", line=1)
    try:
        return [
            SimRecord(
                int(row.replicate),
                Method(row.method),
                float(row.alpha_hat),
                float(row.ise),
                float(row.ise_oracle),
                float(row.loss_ratio),
            )
            for row in frame.itertuples(index=False)
        ]
    except ValueError as exc:
        raise DataError(f"bad record in {records_path}: {exc}") from exc
