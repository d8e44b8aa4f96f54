"""Result files: CSV, JSON and plain-text plot data, each with a provenance header.

A command produces a :class:`Report`: named tables (CSV), named plot series
(whitespace separated columns), a JSON document and a short text summary.
:func:`emit_outputs` writes the formats selected in the run configuration.
"""
from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from dynloc import __version__, _backend
from dynloc.errors import OutputError

JSON_SCHEMA_VERSION = 1


@dataclass
class Table:
    columns: tuple
    rows: list


@dataclass
class Report:
    """Everything a command wants to persist."""

    name: str
    tables: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    document: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)


def provenance(config) -> dict:
    s = config.settings
    return {
        "program": "dynloc",
        "version": __version__,
        "command": config.command,
        "config_sha256": config.digest(),
        "rel_tol": s.rel_tol,
        "abs_tol": s.abs_tol,
        "max_step": s.max_step,
        "backend": _backend.resolve(config.backend),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _header_lines(prov: dict) -> list:
    return [f"# {k}: {v}" for k, v in prov.items()]


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        x = float(value)
        return x if math.isfinite(x) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": _jsonable(value.real), "im": _jsonable(value.imag)}
    if isinstance(value, Path):
        return str(value)
    return value


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, table: Table, prov: dict):
    with open(path, "w", newline="") as fh:
        for line in _header_lines(prov):
            fh.write(line + "\n")
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_fmt(x) for x in row])


def write_plot_data(path: Path, table: Table, prov: dict):
    with open(path, "w") as fh:
        for line in _header_lines(prov):
            fh.write(line + "\n")
        fh.write("# columns: " + " ".join(table.columns) + "\n")
        for row in table.rows:
            fh.write(" ".join(_fmt(x) for x in row) + "\n")


def write_json(path: Path, document: dict, prov: dict):
    payload = {"schema_version": JSON_SCHEMA_VERSION, "provenance": prov, "result": _jsonable(document)}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")


def emit_outputs(report: Report, config) -> list:
    """Write the formats selected in ``config``; returns the written paths.

    Raises
    ------
    OutputError
        If the directory or a file cannot be written.
    """
    if not config.formats:
        return []
    out = Path(config.output_dir)
    prov = provenance(config)
    written = []
    target = out
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in config.formats:
            for name, table in report.tables.items():
                target = out / f"{name}.csv"
                write_csv(target, table, prov)
                written.append(target)
        if "plot-data" in config.formats:
            for name, table in report.plots.items():
                target = out / f"{name}.dat"
                write_plot_data(target, table, prov)
                written.append(target)
        if "json" in config.formats:
            target = out / f"{report.name}.json"
            write_json(target, report.document, prov)
            written.append(target)
    except OSError as exc:
        raise OutputError(f"cannot write {target}: {exc.strerror or exc}") from None
    return written


def read_table(path) -> tuple:
    """Read a result file back, skipping the header comments.

    CSV gives ``(columns, rows of strings)``; plot data gives ``(columns, float array)``.
    """
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]
    if path.suffix == ".csv":
        rows = list(csv.reader(lines))
        return tuple(rows[0]), rows[1:]
    cols = ()
    for ln in path.read_text().splitlines():
        if ln.startswith("# columns:"):
            cols = tuple(ln.split(":", 1)[1].split())
    return cols, np.loadtxt(lines, ndmin=2) if lines else np.empty((0, len(cols)))
