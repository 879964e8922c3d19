from __future__ import annotations

from collections.abc import Iterable
import logging

from ..models.matching import Match, MatchSet

__all__ = ("filter_matches",)

_log = logging.getLogger(__name__)


def filter_matches(sets: Iterable[MatchSet], top_k: int = 500, conf_threshold: float = 0.95) -> list[Match]:
    """
    Keep the `top_k` best matches of every window, then those at or above `conf_threshold`.

    Parameters
    ----------
    sets: Iterable[:class:`MatchSet`]
        Per-window match sets, in window order.
    top_k: int
        Matches retained per window, in set order.
    conf_threshold: float
        Smallest confidence kept across the whole search area.

    Returns
    -------
    list[:class:`Match`]
        Surviving matches, grouped by window in input order, each group in set order.
    """
    kept: list[Match] = []
    raw = 0
    for match_set in sets:
        raw += len(match_set)
        kept.extend(m for m in match_set.top(top_k).matches if m.confidence >= conf_threshold)
    _log.debug("filtered %d raw matches down to %d", raw, len(kept))
    return kept
