from __future__ import annotations

from typing import Any
import logging

from ..errors import UnknownMatcherError
from .base import Matcher

__all__ = ("available_matchers", "get_matcher", "register_matcher")

_log = logging.getLogger(__name__)

_MATCHERS: dict[str, type[Matcher]] = {}


def register_matcher[M: type[Matcher]](cls: M) -> M:
    """
    Class decorator making a matcher selectable by its ``name``.

    Registering a second class under an existing name replaces the first.
    """
    if cls.name in _MATCHERS and _MATCHERS[cls.name] is not cls:
        _log.warning("matcher %r re-registered by %s", cls.name, cls.__qualname__)
    _MATCHERS[cls.name] = cls
    return cls


def get_matcher(name: str, **options: Any) -> Matcher:
    """
    Instantiate the matcher registered under `name`.

    Raises
    ------
    UnknownMatcherError
        No matcher has that name.
    """
    try:
        cls = _MATCHERS[name]
    except KeyError:
        raise UnknownMatcherError(f"unknown matcher {name!r}, available: {', '.join(available_matchers())}") from None
    return cls(**options)


def available_matchers() -> list[str]:
    return sorted(_MATCHERS)
