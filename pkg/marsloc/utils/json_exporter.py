from __future__ import annotations

from typing import TYPE_CHECKING, Any, Self
import json
from pathlib import Path
import threading

from .base_exporter import BaseExporter

if TYPE_CHECKING:
    from types import TracebackType

    from _typeshed import SupportsWrite

__all__ = ("JSONExporter", "JSONLinesWriter", "read_json", "read_json_lines", "to_json")

# Type aliases for clarity
type JSONPrimitive = str | int | float | bool | None
type JSONValue = JSONPrimitive | dict[str, Any] | list[Any]


class JSONExporter(BaseExporter):
    """
    JSON exporter for marsloc domain objects.

    Handles slotted models (through their payloads), enums and numpy values.
    Non-finite floats are written as ``null``.

    Parameters
    ----------
    include_empty: bool
        If True, include empty values (None, empty strings, empty containers)
        in the output. Defaults to True.
    indent: int | None
        Indentation level for pretty-printed JSON. If None, output is compact.
        Defaults to 2.
    """

    __slots__ = ("_indent",)

    def __init__(self, *, include_empty: bool = True, indent: int | None = 2) -> None:
        super().__init__(include_empty=include_empty)
        self._indent: int | None = indent

    def write_document(self, path: Path, obj: object) -> None:
        """Write a single object as one JSON document."""

        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as f:
            self._dump(self._convert(obj), f)
            f.write("\n")

    def serialize(self, obj: Any) -> JSONValue:
        """Serialize a single object to a JSON-compatible value (primitive, dict or list)."""

        return self._convert(obj)

    def lines(self, path: Path, *, append: bool = False) -> JSONLinesWriter:
        """Open a JSON Lines writer on `path`."""

        return JSONLinesWriter(self, path, append=append)

    def _dump(self, data: JSONValue, fp: SupportsWrite[str]) -> None:
        json.dump(data, fp, indent=self._indent, allow_nan=False)


class JSONLinesWriter:
    """
    Append-only JSON Lines writer shared by concurrent producers.

    Every :meth:`write` call emits exactly one line under a lock, so rows from
    different threads never interleave.

    Examples
    --------
    >>> with JSONExporter().lines(Path("manifest.jsonl")) as writer:
    ...     writer.write(row)
    """

    __slots__ = ("_exporter", "_fp", "_lock", "count", "path")

    def __init__(self, exporter: JSONExporter, path: Path, *, append: bool = False) -> None:
        self._exporter = exporter
        self.path: Path = path
        self.count: int = 0
        self._lock = threading.Lock()
        path.parent.mkdir(parents=True, exist_ok=True)
        self._fp = path.open("a" if append else "w", encoding="utf-8", newline="\n")

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} path={self.path.as_posix()!r} count={self.count}>"

    def __enter__(self) -> Self:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()

    def write(self, obj: object) -> None:
        line = json.dumps(self._exporter.serialize(obj), separators=(",", ":"), allow_nan=False)
        with self._lock:
            self._fp.write(line)
            self._fp.write("\n")
            self.count += 1

    def close(self) -> None:
        with self._lock:
            if not self._fp.closed:
                self._fp.close()


def read_json(path: Path) -> Any:
    """Read one JSON document."""

    with path.open("r", encoding="utf-8") as f:
        return json.load(f)


def read_json_lines(path: Path) -> list[Any]:
    """Read a JSON Lines file; blank lines are skipped."""

    with path.open("r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def to_json(
    *,
    path: Path,
    obj: object,
    include_empty: bool = True,
    indent: int | None = 2,
) -> None:
    """
    Write an object to a JSON file.

    Convenience wrapper around JSONExporter.

    Parameters
    ----------
    path: Path
        The file path to write to.
    obj: object
        Object or list of objects to serialize.
    include_empty: bool
        Whether to include empty values. Default is True.
    indent: int | None
        Indentation for pretty-printing. Default is 2.
    """
    JSONExporter(include_empty=include_empty, indent=indent).write_document(path, obj)
