"""Matcher interface and helpers shared by the classical matchers."""

from __future__ import annotations

from typing import ClassVar
from abc import ABC, abstractmethod

import numpy as np
from scipy import ndimage

from ..errors import EmptyInputError
from ..models.matching import MatchSet

__all__ = ("Matcher",)


class Matcher(ABC):
    """Produces confidence-scored correspondences between a query and a map window.

    Implementations receive the window's normalized depth so a learned matcher
    can use it; the classical matchers ignore it.
    """

    __slots__ = ()

    name: ClassVar[str]
    default_threshold: ClassVar[float]

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} name={self.name!r}>"

    @abstractmethod
    def match(
        self,
        query: np.ndarray,
        window: np.ndarray,
        depth: np.ndarray | None = None,
        *,
        window_id: int = 0,
        offset: tuple[int, int] = (0, 0),
        scale_hint: float | None = None,
    ) -> MatchSet:
        """
        Match a query gray image against one map window.

        Parameters
        ----------
        query: numpy.ndarray
            Query gray image.
        window: numpy.ndarray
            Window gray crop.
        depth: numpy.ndarray | None
            Window normalized depth crop.
        window_id: int
            Identifier stored on the result.
        offset: tuple[int, int]
            ``(u0, v0)`` of the window in its parent map, stored on the result.
        scale_hint: float | None
            Expected query-to-window scale; restricts the scale search.

        Returns
        -------
        :class:`MatchSet`
            Possibly empty set of matches.
        """


def _check_images(query: np.ndarray, window: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if query.size == 0 or window.size == 0:
        raise EmptyInputError("matcher inputs must be non-empty images")
    return np.asarray(query, dtype=np.float64), np.asarray(window, dtype=np.float64)


def _parabolic_offset(left: float, center: float, right: float) -> float:
    """Vertex of the parabola through three equally spaced samples, in ``[-0.5, 0.5]``."""

    denom = left - 2.0 * center + right
    if denom >= 0 or not np.isfinite(denom):
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def _peak_2d(surface: np.ndarray, *, wrap: bool = False) -> tuple[float, float, float]:
    """Sub-pixel ``(x, y)`` of the maximum of `surface` and the maximum itself."""

    iy, ix = np.unravel_index(int(np.argmax(surface)), surface.shape)
    h, w = surface.shape
    peak = float(surface[iy, ix])

    def axis_offset(line: np.ndarray, idx: int, n: int) -> float:
        if wrap:
            return _parabolic_offset(line[(idx - 1) % n], line[idx], line[(idx + 1) % n])
        if 0 < idx < n - 1:
            return _parabolic_offset(line[idx - 1], line[idx], line[idx + 1])
        return 0.0

    dx = axis_offset(surface[iy, :], ix, w)
    dy = axis_offset(surface[:, ix], iy, h)
    return ix + dx, iy + dy, peak


def _scaled_template(query: np.ndarray, scale: float, size: tuple[int, int]) -> np.ndarray:
    """
    Resample the query onto window pixels at `scale`, centered on the query center.

    Template pixel ``a`` samples query coordinate ``cq + (a - (T - 1) / 2) / scale``.
    """
    tw, th = size
    cq_u = (query.shape[1] - 1) / 2
    cq_v = (query.shape[0] - 1) / 2
    us = cq_u + (np.arange(tw) - (tw - 1) / 2) / scale
    vs = cq_v + (np.arange(th) - (th - 1) / 2) / scale
    vv, uu = np.meshgrid(vs, us, indexing="ij")
    return ndimage.map_coordinates(query, [vv, uu], order=1, mode="nearest")


def _grid_points(shape: tuple[int, ...], step: int, margin: float = 0.0) -> np.ndarray:
    """``(n, 2)`` query pixel positions on a regular grid, at least `margin` from the border."""

    h, w = shape[:2]
    start = step // 2
    us = np.arange(start, w, step, dtype=np.float64)
    vs = np.arange(start, h, step, dtype=np.float64)
    us = us[(us >= margin) & (us <= w - 1 - margin)]
    vs = vs[(vs >= margin) & (vs <= h - 1 - margin)]
    vv, uu = np.meshgrid(vs, us, indexing="ij")
    return np.column_stack([uu.ravel(), vv.ravel()])
