"""Shared loader for the packaged tabular text data files.

Format rules (all data files follow them):
- lines are whitespace-separated columns
- blank lines and lines starting with '#' are ignored
- parsing is bit-exact: unknown or malformed rows raise DataFileError with
  the file name and line number
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path


class DataFileError(ValueError):
    """Malformed data file content."""


def data_path(name: str) -> Path:
    """Path of a packaged data file."""
    return Path(str(resources.files("textrts") / "data" / name))


def load_rows(path: str | Path) -> list[tuple[int, list[str]]]:
    """Read a tabular file into (line_number, columns) rows."""
    p = Path(path)
    if not p.exists():
        raise DataFileError(f"data file not found: {p}")
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append((lineno, line.split()))
    return rows


def display_name(raw: str) -> str:
    """Data-file display column: underscores are word separators."""
    return raw.replace("_", " ")
