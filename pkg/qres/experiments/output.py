"""Result files: CSV tables, JSON reports and the rich summary table."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from qres.utils.helpers import ensure_dir

Row = Sequence[Any]


def format_cell(value: Any) -> str:
    """repr for floats so that re-runs reproduce files byte for byte."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(float(value))
    if hasattr(value, "item"):
        return format_cell(value.item())
    if value is None:
        return ""
    return str(value)


def write_rows(path: Path, header: Sequence[str], rows: Sequence[Row]) -> Path:
    """Write a comma-separated table with a single header line."""
    ensure_dir(path.parent)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def write_json(path: Path, data: BaseModel | list[BaseModel] | dict[str, Any]) -> Path:
    ensure_dir(path.parent)
    if isinstance(data, BaseModel):
        payload: Any = data.model_dump(mode="json")
    elif isinstance(data, list):
        payload = [item.model_dump(mode="json") for item in data]
    else:
        payload = data
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, allow_nan=True)
        f.write("\n")
    return path


def summary_table(title: str, header: Sequence[str], rows: Sequence[Row], limit: int = 20) -> Table:
    table = Table(title=title)
    for name in header:
        table.add_column(name, justify="right")
    for row in rows[:limit]:
        table.add_row(*[_short(v) for v in row])
    if len(rows) > limit:
        table.caption = f"{len(rows) - limit} more rows in the CSV"
    return table


def _short(value: Any) -> str:
    if isinstance(value, float) and math.isfinite(value):
        return f"{value:.6g}"
    return format_cell(value)


def print_summary(console: Console, title: str, header: Sequence[str], rows: Sequence[Row]) -> None:
    console.print(summary_table(title, header, rows))
