"""Parsing of the simulation CSV files: '#'-JSON metadata line, then columns.

This package is strictly a view layer: it consumes the documented file
formats and computes no model quantities.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input file does not match the documented format."""


class Table:
    def __init__(self, path: Path, metadata: dict, columns: list[str],
                 cells: list[list[str]]):
        self.path = path
        self.metadata = metadata
        self.columns = columns
        self.cells = cells

    def __len__(self) -> int:
        return len(self.cells)

    def require(self, *names: str) -> None:
        for name in names:
            if name not in self.columns:
                raise SchemaError(f"{self.path}: missing column {name!r}")

    def column(self, name: str) -> np.ndarray:
        """Numeric column; empty cells become NaN."""
        if name not in self.columns:
            raise SchemaError(f"{self.path}: missing column {name!r}")
        i = self.columns.index(name)
        return np.array([float(row[i]) if row[i] != "" else np.nan
                         for row in self.cells])

    def state_columns(self, prefix: str = "x") -> list[str]:
        """Level-major state columns like x_0_0, sorted by (level, subpop)."""
        names = []
        for c in self.columns:
            parts = c.split("_")
            if len(parts) == 3 and parts[0] == prefix:
                try:
                    names.append((int(parts[1]), int(parts[2]), c))
                except ValueError:
                    continue
        return [c for _, _, c in sorted(names)]


def read_table(path: Path | str) -> Table:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise SchemaError(f"{path}: missing '#' JSON metadata line")
        try:
            metadata = json.loads(first.lstrip("#").strip())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: bad metadata JSON: {exc}") from exc
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        cells = [row for row in reader if row]
    return Table(path, metadata, columns, cells)
