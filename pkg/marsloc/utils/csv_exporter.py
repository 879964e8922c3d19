from __future__ import annotations

from typing import Any
from collections.abc import Sequence
import csv
from enum import Enum
import math
from pathlib import Path

import numpy as np

from .base_exporter import AttrField, BaseExporter

__all__ = ("CSVExporter", "read_csv")


class CSVExporter(BaseExporter):
    """
    CSV exporter with a frozen column list.

    Floats are written with a fixed format so identical inputs produce
    byte-identical files. Infinite values are written as ``inf``.

    Parameters
    ----------
    columns: Sequence[AttrField]
        Column specifications, in output order.
    float_format: str
        ``str.format`` specification used for floats. Defaults to ``".6f"``.
    """

    __slots__ = ("_columns", "_float_format")

    def __init__(self, columns: Sequence[AttrField], *, float_format: str = ".6f") -> None:
        super().__init__(include_empty=True)
        self._columns: tuple[AttrField, ...] = tuple(columns)
        self._float_format: str = float_format

    @property
    def header(self) -> list[str]:
        return [c.label for c in self._columns]

    def export(self, path: Path, objects: Sequence[object]) -> None:
        """
        Write a header row and one row per object.

        Parameters
        ----------
        path: Path
            Output file path.
        objects: Sequence[object]
            Objects to export.
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.header)
            writer.writerows(self.row(obj) for obj in objects)

    def row(self, obj: object) -> list[str]:
        return [self._format_cell(column.extract(obj)) for column in self._columns]

    def _format_cell(self, value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, Enum):
            return str(self._convert_enum(value))
        if isinstance(value, np.generic):
            value = value.item()
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            if math.isnan(value):
                return ""
            if math.isinf(value):
                return "inf" if value > 0 else "-inf"
            return format(value, self._float_format)
        return str(value)


def read_csv(path: Path) -> list[dict[str, str]]:
    """Read a CSV file with a header row into dictionaries."""

    with path.open("r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))

