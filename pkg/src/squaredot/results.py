"""Rectangular result tables and their CSV form.

A file starts with ``# key: value`` metadata lines (JSON-encoded values,
keys sorted), then one header row of ``name[unit]`` columns, then numeric
rows.  Floats are written with ``repr`` so the text is deterministic and
round-trips exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass
class ResultTable:
    columns: list[tuple[str, str]]
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if self.rows.size == 0:
            self.rows = self.rows.reshape(0, len(self.columns))
        if self.rows.shape[1] != len(self.columns):
            raise ValueError(f"{self.rows.shape[1]} values per row but {len(self.columns)} columns")

    @classmethod
    def from_columns(cls, columns: Sequence[tuple[str, str, Sequence[float]]], metadata: dict | None = None):
        data = np.column_stack([np.asarray(c[2], dtype=float) for c in columns])
        return cls([(c[0], c[1]) for c in columns], data, dict(metadata or {}))

    def column(self, name: str) -> np.ndarray:
        names = [c[0] for c in self.columns]
        return self.rows[:, names.index(name)]

    def to_csv(self) -> str:
        lines = [f"# {k}: {json.dumps(self.metadata[k], sort_keys=True)}" for k in sorted(self.metadata)]
        lines.append(",".join(f"{name}[{unit}]" if unit else name for name, unit in self.columns))
        for row in self.rows:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path

    @classmethod
    def read(cls, path: str | Path) -> ResultTable:
        metadata = {}
        header = None
        rows = []
        for line in Path(path).read_text().splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                metadata[key] = json.loads(value)
            elif header is None:
                header = line
            elif line:
                rows.append([float(v) for v in line.split(",")])
        columns = []
        for item in header.split(","):
            name, _, unit = item.partition("[")
            columns.append((name, unit.rstrip("]")))
        return cls(columns, np.array(rows).reshape(len(rows), len(columns)), metadata)
