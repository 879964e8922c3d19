"""Phase-correlation translation estimate and the matcher built on it."""

from __future__ import annotations

from collections.abc import Sequence
import logging

import numpy as np

from ..errors import QueryTooLargeError, ShapeMismatchError, ZeroVarianceError
from ..models.matching import MatchSet
from .base import Matcher, _check_images, _grid_points, _peak_2d, _scaled_template
from .ncc import DEFAULT_SCALES, _template_size, normxcorr2_valid
from .registry import register_matcher

__all__ = ("PhaseMatcher", "phase_correlate")

_log = logging.getLogger(__name__)

_SPECTRUM_FLOOR = 1e-12


def _apodize(patch: np.ndarray, taper: np.ndarray) -> np.ndarray:
    return (patch - patch.mean()) * taper


def phase_correlate(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    """
    Translation of `b` relative to `a` from the normalized cross-power spectrum.

    With ``b = np.roll(a, (dy, dx), axis=(0, 1))`` the result is ``(dx, dy, ~1)``.

    Parameters
    ----------
    a: numpy.ndarray
        Reference image.
    b: numpy.ndarray
        Shifted image, same shape as `a`.

    Returns
    -------
    tuple[float, float, float]
        Sub-pixel shift ``(dx, dy)`` in ``(-N/2, N/2]`` per axis, and the
        correlation peak value in ``[0, 1]``.

    Raises
    ------
    ShapeMismatchError
        The images are not 2-D or differ in shape.
    ZeroVarianceError
        Either image is constant.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ShapeMismatchError(f"phase correlation needs equal 2-D images, got {a.shape} and {b.shape}")
    if a.std() == 0 or b.std() == 0:
        raise ZeroVarianceError("phase correlation of a constant image")

    fa = np.fft.fft2(a - a.mean())
    fb = np.fft.fft2(b - b.mean())
    cross = np.conj(fa) * fb
    magnitude = np.abs(cross)
    keep = magnitude > _SPECTRUM_FLOOR * magnitude.max()
    normalized = np.zeros_like(cross)
    normalized[keep] = cross[keep] / magnitude[keep]
    surface = np.fft.ifft2(normalized).real

    x, y, peak = _peak_2d(surface, wrap=True)
    h, w = surface.shape
    dx = x - w if x > w / 2 else x
    dy = y - h if y > h / 2 else y
    return float(dx), float(dy), float(np.clip(peak, 0.0, 1.0))


@register_matcher
class PhaseMatcher(Matcher):
    """
    Matcher estimating a global query to window translation by phase correlation.

    For every scale hypothesis the resampled query is located in the window at
    whole pixels by normalized cross-correlation. The Hann-tapered template and
    the window patch under it are then phase-correlated for the sub-pixel shift
    and the response. The strongest response wins; grid points of the query
    are mapped through the recovered scale and translation and share its
    response as confidence.
    """

    __slots__ = ("allow_crop", "grid_step", "scales")

    name = "phase"
    default_threshold = 0.05

    def __init__(
        self,
        *,
        scales: Sequence[float] = DEFAULT_SCALES,
        grid_step: int = 16,
        allow_crop: bool = True,
    ) -> None:
        self.scales: tuple[float, ...] = tuple(scales)
        self.grid_step: int = grid_step
        self.allow_crop: bool = allow_crop

    def _correlate_at(self, query: np.ndarray, window: np.ndarray, scale: float) -> tuple[float, float, float] | None:
        size = _template_size(query.shape, window.shape, scale, allow_crop=self.allow_crop)
        if size is None:
            return None
        template = _scaled_template(query, scale, size)
        if template.std() == 0:
            return None
        tw, th = size
        # coarse origin from the correlation surface, sub-pixel shift from the spectra of equal-size patches
        pu, pv, _ = _peak_2d(normxcorr2_valid(template, window))
        wh, ww = window.shape
        iu = min(max(int(np.rint(pu)), 0), ww - tw)
        iv = min(max(int(np.rint(pv)), 0), wh - th)
        crop = window[iv : iv + th, iu : iu + tw]
        if crop.std() == 0:
            response, u0, v0 = 0.0, pu, pv
        else:
            taper = np.outer(np.hanning(th), np.hanning(tw))
            dx, dy, response = phase_correlate(_apodize(template, taper), _apodize(crop, taper))
            if abs(dx) <= 1.0 and abs(dy) <= 1.0:
                u0, v0 = iu + dx, iv + dy
            else:
                u0, v0 = pu, pv
        cq_u = (query.shape[1] - 1) / 2
        cq_v = (query.shape[0] - 1) / 2
        return u0 + (tw - 1) / 2 - scale * cq_u, v0 + (th - 1) / 2 - scale * cq_v, response

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
        q, w = _check_images(query, window)
        if w.std() == 0:
            return MatchSet.empty(window_id, matcher=self.name, offset=offset)

        scales = (scale_hint,) if scale_hint is not None else self.scales
        best: tuple[float, float, float, float] | None = None
        any_fit = False
        for scale in scales:
            result = self._correlate_at(q, w, scale)
            if result is None:
                continue
            any_fit = True
            if best is None or result[2] > best[3]:
                best = (scale, *result)
        if not any_fit:
            raise QueryTooLargeError(f"query {q.shape} does not fit window {w.shape} at any scale")
        assert best is not None

        scale, tx, ty, response = best
        points = _grid_points(q.shape, self.grid_step)
        mapped = scale * points + np.array([tx, ty])
        wh, ww = w.shape
        inside = (mapped[:, 0] >= 0) & (mapped[:, 0] <= ww - 1) & (mapped[:, 1] >= 0) & (mapped[:, 1] <= wh - 1)
        _log.debug("window %d: phase response %.3f at scale %.3f", window_id, response, scale)
        return MatchSet(
            window_id,
            points[inside],
            mapped[inside],
            np.full(int(inside.sum()), response),
            matcher=self.name,
            scale=scale,
            translation=(tx, ty),
            offset=offset,
        )
