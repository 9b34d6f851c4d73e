"""Deterministic CSV / markdown report tables.

Cells are formatted once, at write time: None becomes "-", floats go through
repr (shortest round-trip form), strings pass through untouched. Reading a
report back therefore yields raw strings, and writing those strings again
reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..errors import ContractError

REPORT_COLUMNS = [
    "run",
    "split",
    "mode",
    "embedding",
    "wer_non_dominant",
    "wer_novel",
    "wer_dominant",
]

ABLATION_COLUMNS = [
    "corruption_rate",
    "wer_non_dominant",
    "wer_novel_untrained",
    "wer_novel_dominant",
    "wer_dominant",
]


def format_cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    Path(path).write_text(render_csv(rows, columns))


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Columns and rows, every cell kept as its raw string."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise ContractError(f"report {path} is empty") from None
        rows = [dict(zip(columns, line)) for line in reader]
    return columns, rows


def parse_cell(text: str):
    """Best-effort typed view of a cell ("-" -> None, numeric -> float)."""
    if text == "-":
        return None
    try:
        return float(text)
    except ValueError:
        return text


def render_markdown(rows: list[dict], columns: list[str], title: str | None = None) -> str:
    lines = []
    if title:
        lines += [f"# {title}", ""]
    lines.append("| " + " | ".join(columns) + " |")
    lines.append("| " + " | ".join("---" for _ in columns) + " |")
    for row in rows:
        lines.append("| " + " | ".join(format_cell(row.get(col)) for col in columns) + " |")
    return "\n".join(lines) + "\n"


def write_markdown(path, rows, columns, title=None) -> None:
    Path(path).write_text(render_markdown(rows, columns, title))


def merge_reports(tables: list[tuple[list[str], list[dict]]]) -> tuple[list[str], list[dict]]:
    """Concatenate report tables; columns are the union in first-seen order.

    Rows missing a column get a gap ("-" on write). At least one table is
    required.
    """
    if not tables:
        raise ContractError("need at least one report to merge")
    columns: list[str] = []
    for cols, _ in tables:
        for col in cols:
            if col not in columns:
                columns.append(col)
    rows = [row for _, table_rows in tables for row in table_rows]
    return columns, rows
