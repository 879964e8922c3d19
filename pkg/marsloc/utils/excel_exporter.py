from __future__ import annotations

from typing import Any, NamedTuple
from collections.abc import Sequence
from enum import Enum
import math
from pathlib import Path

import numpy as np
import xlsxwriter
import xlsxwriter.worksheet

from .base_exporter import AttrField, BaseExporter

__all__ = ("ExcelExporter", "Sheet")


class Sheet(NamedTuple):
    """One worksheet of a workbook export."""

    name: str
    title: str | None
    columns: Sequence[AttrField]
    objects: Sequence[object]


class ExcelExporter(BaseExporter):
    """
    Excel exporter using xlsxwriter.

    Each sheet gets an optional merged title row, a bold header row and frozen
    panes below the header.

    Parameters
    ----------
    constant_memory: bool
        If True, enable xlsxwriter constant memory mode for streaming large
        files efficiently. Defaults to True.
    """

    __slots__ = ("_constant_memory",)

    def __init__(self, *, constant_memory: bool = True) -> None:
        super().__init__(include_empty=True)
        self._constant_memory = constant_memory

    def export(self, path: Path, sheets: Sequence[Sheet]) -> None:
        """
        Export one or more sheets to an Excel file.

        Parameters
        ----------
        path: Path
            Output file path.
        sheets: Sequence[Sheet]
            Worksheets to write, in order.
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        workbook = xlsxwriter.Workbook(str(path), {"constant_memory": self._constant_memory})
        header_format = workbook.add_format({"bold": True})
        title_format = workbook.add_format({"bold": True, "align": "center"})

        for sheet in sheets:
            worksheet = workbook.add_worksheet(sheet.name)
            headers = [c.label for c in sheet.columns]

            current_row = 0
            if sheet.title:
                if len(headers) > 1:
                    worksheet.merge_range(current_row, 0, current_row, len(headers) - 1, sheet.title, title_format)
                else:
                    worksheet.write(current_row, 0, sheet.title, title_format)
                current_row += 1

            worksheet.write_row(current_row, 0, headers, header_format)
            current_row += 1
            worksheet.freeze_panes(current_row, 0)

            for row_idx, obj in enumerate(sheet.objects, start=current_row):
                self._write_row(worksheet, row_idx, [self._convert_cell_value(c.extract(obj)) for c in sheet.columns])

        workbook.close()

    def _convert_cell_value(self, val: Any) -> Any:
        """
        Convert a value into something xlsxwriter can write.

        Parameters
        ----------
        val: Any
            The raw value.

        Returns
        -------
        Any
            A value suitable for xlsxwriter.
        """
        if isinstance(val, np.generic):
            val = val.item()
        if isinstance(val, Enum):
            return self._convert_enum(val)
        if isinstance(val, float) and not math.isfinite(val):
            return str(val)
        if val is None or isinstance(val, (str, int, float, bool)):
            return val
        return str(self._convert(val))

    def _write_row(self, worksheet: xlsxwriter.worksheet.Worksheet, row_idx: int, data: list[Any]) -> None:
        for col_idx, val in enumerate(data):
            if val is None:
                continue
            worksheet.write(row_idx, col_idx, val)

