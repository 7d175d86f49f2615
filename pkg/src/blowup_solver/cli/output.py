#!/usr/bin/env python3  src/blowup_solver/cli/output.py
"""
Result Files
============
Trajectory tables (CSV or JSON lines), the run summary, comparison/sweep
tables and an optional plotting script. Numbers are written with 17
significant digits and '.' as decimal separator, so reruns reproduce files
byte for byte.
"""

import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Sequence, TextIO

import numpy as np

from blowup_solver.core.errors import ConfigurationError, OutputError
from blowup_solver.logging_config import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"


@contextmanager
def _open_text(path: Optional[str]) -> Iterator[TextIO]:
    """Open ``path`` for writing, or yield stdout for None / "-"."""
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        target = Path(path)
        if target.parent and not target.parent.exists():
            raise OutputError(f"directory {target.parent} does not exist")
        with target.open("w", encoding="utf-8", newline="\n") as handle:
            yield handle
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def thin_rows(count: int, every: int) -> np.ndarray:
    """Row indices 0, every, 2*every, ... plus the last row."""
    if every < 1:
        raise ConfigurationError(f"every must be >= 1, got {every}")
    rows = np.arange(0, count, every)
    if count and rows[-1] != count - 1:
        rows = np.append(rows, count - 1)
    return rows


def write_trajectory(
    columns: Mapping[str, np.ndarray],
    path: Optional[str] = None,
    fmt: str = "csv",
    every: int = 1,
) -> int:
    """Write one row per sample with the columns in insertion order.

    Returns the number of rows written.
    """
    names = list(columns)
    table = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    table = table[thin_rows(len(table), every)]
    with _open_text(path) as handle:
        if fmt == "csv":
            np.savetxt(
                handle, table, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(names), comments=""
            )
        elif fmt in ("json-lines", "jsonl"):
            for row in table:
                handle.write(json.dumps(dict(zip(names, map(float, row)))) + "\n")
        else:
            raise ConfigurationError(f"unknown output format '{fmt}'")
    logger.debug("output.trajectory", path=path or "-", rows=len(table), format=fmt)
    return len(table)


def write_summary(record: Mapping[str, object], path: Optional[str] = None) -> None:
    """Write a single JSON object with sorted keys and a trailing newline."""
    with _open_text(path) as handle:
        handle.write(json.dumps(dict(record), sort_keys=True) + "\n")


def write_table(
    rows: Sequence[Mapping[str, object]],
    columns: Sequence[str],
    path: Optional[str] = None,
) -> None:
    """CSV table for comparison and sweep results; empty cells for None."""

    def cell(value: object) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return FLOAT_FORMAT % value
        return str(value)

    with _open_text(path) as handle:
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(cell(row.get(c)) for c in columns) + "\n")


_PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot {data} (generated by blowup-solver)."""

import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt({data!r}, delimiter=",", names=True)
figure, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
left.plot(data["x"], data["y"], "o-", markersize=2)
left.set_xlabel("x")
left.set_ylabel("y")
left.set_yscale("log")
right.plot(data["param"], data["x"], "o-", markersize=2)
right.set_xlabel({param!r})
right.set_ylabel("x")
{x_star_line}figure.tight_layout()
plt.show()
'''


def write_plot_script(
    data_path: str, script_path: str, param_name: str = "param", x_star: Optional[float] = None
) -> None:
    """Write a matplotlib script that plots y(x) and x(param) from a CSV table."""
    x_star_line = ""
    if x_star is not None:
        x_star_line = f'right.axhline({x_star!r}, linestyle="--", color="gray")\n'
    text = _PLOT_TEMPLATE.format(data=data_path, param=param_name, x_star_line=x_star_line)
    with _open_text(script_path) as handle:
        handle.write(text)


def summary_record(estimate: Dict[str, object], steps: int, reason: str) -> Dict[str, object]:
    record = dict(estimate)
    record.update({"steps": steps, "reason": reason})
    return record
