from .base_exporter import AttrField
from .csv_exporter import CSVExporter, read_csv
from .excel_exporter import ExcelExporter, Sheet
from .formats import *
from .json_exporter import JSONExporter, JSONLinesWriter, read_json, read_json_lines, to_json

__all__ = (
    "AttrField",
    "CSVExporter",
    "ExcelExporter",
    "JSONExporter",
    "JSONLinesWriter",
    "Sheet",
    "read_csv",
    "read_grid_header",
    "read_json",
    "read_json_lines",
    "read_pfm",
    "read_pgm",
    "read_raw",
    "sidecar_path",
    "to_json",
    "write_grid_header",
    "write_pfm",
    "write_pgm",
    "write_raw",
)
