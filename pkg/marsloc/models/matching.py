"""Pixel correspondences between a query and a map window."""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

from ..errors import ShapeMismatchError

__all__ = ("Match", "MatchSet")


class Match:
    """One query to window correspondence.

    Attributes
    ----------
    query_uv: tuple[float, float]
        Sub-pixel position in the query image.
    window_uv: tuple[float, float]
        Sub-pixel position in the window crop.
    confidence: float
        Matcher confidence in ``[0, 1]``.
    window_id: int
        Window the match belongs to.
    offset: tuple[int, int]
        ``(u0, v0)`` of the window inside its parent map.
    """

    __slots__ = ("confidence", "offset", "query_uv", "window_id", "window_uv")

    def __init__(
        self,
        query_uv: tuple[float, float],
        window_uv: tuple[float, float],
        confidence: float,
        *,
        window_id: int = 0,
        offset: tuple[int, int] = (0, 0),
    ) -> None:
        self.query_uv: tuple[float, float] = query_uv
        self.window_uv: tuple[float, float] = window_uv
        self.confidence: float = confidence
        self.window_id: int = window_id
        self.offset: tuple[int, int] = offset

    def __repr__(self) -> str:
        qu, qv = self.query_uv
        wu, wv = self.window_uv
        return (
            f"<{self.__class__.__name__} query=({qu:.2f}, {qv:.2f}) window=({wu:.2f}, {wv:.2f}) "
            f"confidence={self.confidence:.4f}>"
        )

    @property
    def map_uv(self) -> tuple[float, float]:
        """tuple[float, float]: position in the parent map."""

        return (self.window_uv[0] + self.offset[0], self.window_uv[1] + self.offset[1])


class MatchSet:
    """Matches of one matcher invocation on one window.

    Rows are kept sorted by confidence descending, ties broken by query ``u``
    then query ``v`` ascending.

    Attributes
    ----------
    window_id: int
        Window the set was computed on.
    query_uv: numpy.ndarray
        ``(n, 2)`` query positions.
    window_uv: numpy.ndarray
        ``(n, 2)`` window positions.
    confidence: numpy.ndarray
        ``(n,)`` confidences.
    matcher: str
        Name of the matcher.
    scale: float | None
        Recovered query scale, window pixels per query pixel.
    translation: tuple[float, float] | None
        Recovered query to window translation, if the matcher has one.
    offset: tuple[int, int]
        ``(u0, v0)`` of the window inside its parent map.
    """

    __slots__ = (
        "_matches",
        "confidence",
        "matcher",
        "offset",
        "query_uv",
        "scale",
        "translation",
        "window_id",
        "window_uv",
    )

    def __init__(
        self,
        window_id: int,
        query_uv: npt.ArrayLike,
        window_uv: npt.ArrayLike,
        confidence: npt.ArrayLike,
        *,
        matcher: str,
        scale: float | None = None,
        translation: tuple[float, float] | None = None,
        offset: tuple[int, int] = (0, 0),
    ) -> None:
        q = np.asarray(query_uv, dtype=np.float64).reshape(-1, 2)
        w = np.asarray(window_uv, dtype=np.float64).reshape(-1, 2)
        c = np.asarray(confidence, dtype=np.float64).reshape(-1)
        if not len(q) == len(w) == len(c):
            raise ShapeMismatchError(f"match arrays disagree in length ({len(q)}, {len(w)}, {len(c)})")
        order = np.lexsort((q[:, 1], q[:, 0], -c))
        self.window_id: int = window_id
        self.query_uv: np.ndarray = q[order]
        self.window_uv: np.ndarray = w[order]
        self.confidence: np.ndarray = c[order]
        self.matcher: str = matcher
        self.scale: float | None = scale
        self.translation: tuple[float, float] | None = translation
        self.offset: tuple[int, int] = offset
        self._matches: list[Match] | None = None

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} window={self.window_id} matcher={self.matcher!r} n={len(self)}>"

    def __len__(self) -> int:
        return len(self.confidence)

    @classmethod
    def empty(cls, window_id: int, *, matcher: str, offset: tuple[int, int] = (0, 0)) -> MatchSet:
        return cls(window_id, np.empty((0, 2)), np.empty((0, 2)), np.empty(0), matcher=matcher, offset=offset)

    @property
    def matches(self) -> list[Match]:
        """list[:class:`Match`]: rows as objects, in set order."""

        if self._matches is None:
            self._matches = [
                Match(
                    (float(q[0]), float(q[1])),
                    (float(w[0]), float(w[1])),
                    float(c),
                    window_id=self.window_id,
                    offset=self.offset,
                )
                for q, w, c in zip(self.query_uv, self.window_uv, self.confidence, strict=True)
            ]
        return self._matches

    def top(self, k: int) -> MatchSet:
        """The first `k` rows as a new set."""

        return MatchSet(
            self.window_id,
            self.query_uv[:k],
            self.window_uv[:k],
            self.confidence[:k],
            matcher=self.matcher,
            scale=self.scale,
            translation=self.translation,
            offset=self.offset,
        )
