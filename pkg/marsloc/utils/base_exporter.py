from __future__ import annotations

from typing import Any, Final
from collections.abc import Callable, Iterable, Mapping
from enum import Enum
from itertools import chain
import math
from pathlib import PurePath

import numpy as np

__all__ = (
    "AttrField",
    "BaseExporter",
)


class AttrField:
    """
    Fluent builder for one exported column or key.

    Examples
    --------
    Simple attribute:
        >>> AttrField("query_id", "query.id")

    Auto-label from attribute name:
        >>> AttrField(None, "estimate.status")  # Label becomes "status"

    With transformer:
        >>> AttrField("err_m").transform(lambda row: row.error_m)
    """

    __slots__ = ("_transformer", "label", "path")

    def __init__(self, label: str | None, path: str | None = None) -> None:
        """
        Create a new attribute specification.

        Parameters
        ----------
        label: str | None
            Output label. If None, the last segment of `path` is used.
        path: str | None
            Dotted attribute path, e.g. ``"estimate.status"``. If omitted the
            label doubles as the path.
        """
        if label is None and path is None:
            raise ValueError("AttrField needs a label or a path")
        self.path: str | None = path if path is not None else label
        self.label: str = label if label is not None else BaseExporter._get_attr_key(path or "")
        self._transformer: Callable[[Any], Any] | None = None

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} label={self.label!r} path={self.path!r}>"

    def transform(self, func: Callable[[Any], Any]) -> AttrField:
        """
        Compute the value from the whole object instead of a path.

        Parameters
        ----------
        func: Callable[[Any], Any]
            Called with the exported object.

        Returns
        -------
        AttrField
            This instance, for chaining.
        """
        self._transformer = func
        return self

    def extract(self, obj: Any) -> Any:
        if self._transformer is not None:
            return self._transformer(obj)
        return BaseExporter._resolve_attribute(obj, self.path or self.label)


def _get_all_slots(cls: type) -> frozenset[str]:
    """
    Collect all __slots__ entries of a class hierarchy.

    Parameters
    ----------
    cls: type
        Class to collect slots for.

    Returns
    -------
    frozenset[str]
        A set of all slot names found in `cls.__mro__`.
    """

    slot_iterables = (getattr(klass, "__slots__", ()) for klass in cls.__mro__)
    return frozenset(chain.from_iterable(slot_iterables))


class BaseExporter:
    """
    Base class with shared helpers for exporter implementations.

    Turns domain objects, enums and numpy values into plain Python values so
    the JSON, CSV and Excel exporters write the same thing for the same object.
    Objects providing ``to_payload()`` are exported through it; other slotted
    objects export their public slots.
    """

    __slots__ = ("_include_empty", "_slots_cache")

    _PRIMITIVES: Final[tuple[type, ...]] = (str, int, bool, type(None))

    def __init__(self, *, include_empty: bool = True) -> None:
        """
        Initialize the exporter base.

        Parameters
        ----------
        include_empty: bool
            If True, include empty values (None, empty strings, empty
            containers) in the export output. Defaults to True.
        """
        self._include_empty = include_empty
        self._slots_cache: dict[type, frozenset[str]] = {}

    def _get_slots_cached(self, cls: type) -> frozenset[str]:
        if cls not in self._slots_cache:
            self._slots_cache[cls] = _get_all_slots(cls)
        return self._slots_cache[cls]

    @staticmethod
    def _is_empty(value: Any) -> bool:
        if value is None:
            return True
        if isinstance(value, (str, list, dict, tuple, set, frozenset)):
            return len(value) == 0
        return False

    @staticmethod
    def _resolve_attribute(obj: Any, attr: str) -> Any:
        """
        Resolve a (possibly nested) attribute or mapping key from an object.

        Returns None if any part of the path is missing or None.

        Parameters
        ----------
        obj: Any
            The object to resolve the attribute from.
        attr: str
            Dotted path, e.g. ``"estimate.status"``.

        Returns
        -------
        Any
            The resolved value, or None if any part is missing.
        """
        current = obj
        for part in attr.split("."):
            if current is None:
                return None
            if isinstance(current, Mapping):
                current = current.get(part)
            else:
                current = getattr(current, part, None)
        return current

    @staticmethod
    def _get_attr_key(path: str) -> str:
        return path.rsplit(".", maxsplit=1)[-1]

    def _convert_enum(self, obj: Enum) -> Any:
        return obj.value

    @staticmethod
    def _convert_float(obj: float) -> float | None:
        """Finite floats pass through; JSON has no representation for inf or NaN."""
        value = float(obj)
        return value if math.isfinite(value) else None

    def _convert(self, obj: Any) -> Any:
        """
        Convert any object to a JSON-compatible value.

        Parameters
        ----------
        obj: Any
            Object to convert.

        Returns
        -------
        Any
            A primitive, list or dict.
        """
        if isinstance(obj, self._PRIMITIVES):
            return obj

        if isinstance(obj, float):
            return self._convert_float(obj)

        if isinstance(obj, Enum):
            return self._convert_enum(obj)

        if isinstance(obj, np.generic):
            return self._convert(obj.item())

        if isinstance(obj, np.ndarray):
            return [self._convert(v) for v in obj.tolist()] if obj.ndim else self._convert(obj.item())

        if isinstance(obj, PurePath):
            return obj.as_posix()

        if isinstance(obj, Mapping):
            return self._filter_dict({str(k): self._convert(v) for k, v in obj.items()})

        if isinstance(obj, Iterable):
            converted = [self._convert(v) for v in obj]
            return converted if self._include_empty else [v for v in converted if not self._is_empty(v)]

        to_payload = getattr(obj, "to_payload", None)
        if callable(to_payload):
            return self._convert(to_payload())

        slots = self._get_slots_cached(type(obj))
        if slots:
            public = sorted(s for s in slots if not s.startswith("_"))
            return self._filter_dict({s: self._convert(getattr(obj, s, None)) for s in public})

        return str(obj)

    def _filter_dict(self, data: dict[str, Any]) -> dict[str, Any]:
        if self._include_empty:
            return data
        return {k: v for k, v in data.items() if not self._is_empty(v)}
