"""Scale-searching normalized cross-correlation matcher."""

from __future__ import annotations

from collections.abc import Sequence
import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage
from scipy.signal import fftconvolve

from ..errors import InvalidParameterError, QueryTooLargeError, ShapeMismatchError
from ..models.matching import MatchSet
from .base import Matcher, _check_images, _grid_points, _parabolic_offset, _peak_2d, _scaled_template
from .registry import register_matcher

__all__ = ("DEFAULT_SCALES", "NCCMatcher", "ncc_match", "normxcorr2_valid")

_log = logging.getLogger(__name__)

DEFAULT_SCALES: tuple[float, ...] = tuple(float(s) for s in np.geomspace(1.0, 3.12, 7))
"""Query-to-map scale hypotheses covering query GSDs of 0.25 to 0.78 m/px on a 0.25 m/px map."""

_CROP_FRACTION = 0.6
_MIN_TEMPLATE_PX = 8
_CHUNK = 32


def _box_sum(image: np.ndarray, th: int, tw: int) -> np.ndarray:
    """Sums over every ``th x tw`` box fully inside `image`, from an integral image."""

    s = np.pad(image.cumsum(axis=0).cumsum(axis=1), ((1, 0), (1, 0)))
    return s[th:, tw:] - s[:-th, tw:] - s[th:, :-tw] + s[:-th, :-tw]


def normxcorr2_valid(template: np.ndarray, image: np.ndarray) -> np.ndarray:
    """
    Normalized cross-correlation of `template` at every fully-overlapping offset.

    Parameters
    ----------
    template: numpy.ndarray
        2-D template, no larger than `image`.
    image: numpy.ndarray
        2-D search image.

    Returns
    -------
    numpy.ndarray
        ``(H - h + 1, W - w + 1)`` coefficients in ``[-1, 1]``; offsets where
        either side has no variance hold 0.
    """
    if template.ndim != 2 or image.ndim != 2:
        raise ShapeMismatchError("normxcorr2_valid needs 2-D arrays")
    th, tw = template.shape
    if th > image.shape[0] or tw > image.shape[1]:
        raise ShapeMismatchError(f"template {template.shape} larger than image {image.shape}")
    t0 = template - template.mean()
    t_energy = float(np.sum(t0 * t0))
    numerator = fftconvolve(image, t0[::-1, ::-1], mode="valid")
    n = th * tw
    local_sum = _box_sum(image, th, tw)
    local_var = _box_sum(image * image, th, tw) - local_sum * local_sum / n
    local_var[local_var < 0] = 0
    denom = np.sqrt(local_var * t_energy)
    out = np.zeros_like(numerator)
    ok = denom > 1e-12 * max(1.0, float(denom.max(initial=0.0)))
    out[ok] = numerator[ok] / denom[ok]
    return np.clip(out, -1.0, 1.0)


def _template_size(
    query_shape: tuple[int, int],
    window_shape: tuple[int, int],
    scale: float,
    *,
    allow_crop: bool,
) -> tuple[int, int] | None:
    qh, qw = query_shape
    wh, ww = window_shape
    tw, th = math.floor(qw * scale + 1e-9), math.floor(qh * scale + 1e-9)
    if tw > ww or th > wh:
        if not allow_crop:
            return None
        tw = min(tw, math.floor(_CROP_FRACTION * ww))
        th = min(th, math.floor(_CROP_FRACTION * wh))
    if tw < _MIN_TEMPLATE_PX or th < _MIN_TEMPLATE_PX:
        return None
    return tw, th


def _correlate_at(
    query: np.ndarray,
    window: np.ndarray,
    scale: float,
    *,
    allow_crop: bool,
) -> tuple[float, float, float] | None:
    """Best ``(tx, ty, peak)`` of the query to window translation at one scale."""

    size = _template_size(query.shape, window.shape, scale, allow_crop=allow_crop)
    if size is None:
        return None
    template = _scaled_template(query, scale, size)
    if template.std() == 0:
        return None
    surface = normxcorr2_valid(template, window)
    pu, pv, peak = _peak_2d(surface)
    tw, th = size
    cq_u = (query.shape[1] - 1) / 2
    cq_v = (query.shape[0] - 1) / 2
    # window position of query pixel q is scale * q + t
    return pu + (tw - 1) / 2 - scale * cq_u, pv + (th - 1) / 2 - scale * cq_v, peak


def _refine_points(
    query: np.ndarray,
    window: np.ndarray,
    points: np.ndarray,
    predicted: np.ndarray,
    scale: float,
    patch_half: int,
    radius: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Refine predicted window positions by local NCC around each point.

    Returns the kept query points, their window positions and the peak local
    correlation coefficients.
    """
    h, r = patch_half, radius
    side = 2 * h + 1
    centers = np.rint(predicted).astype(np.int64)
    wh, ww = window.shape
    inside = (
        (centers[:, 0] - h - r >= 0)
        & (centers[:, 0] + h + r <= ww - 1)
        & (centers[:, 1] - h - r >= 0)
        & (centers[:, 1] + h + r <= wh - 1)
    )
    points, centers = points[inside], centers[inside]
    if len(points) == 0:
        return np.empty((0, 2)), np.empty((0, 2)), np.empty(0)

    offsets = np.arange(-h, h + 1) / scale
    region_offsets = np.arange(-h - r, h + r + 1)
    kept_q, kept_w, kept_rho = [], [], []
    for start in range(0, len(points), _CHUNK):
        pts = points[start : start + _CHUNK]
        ctr = centers[start : start + _CHUNK]
        vv = pts[:, 1, None, None] + offsets[None, :, None]
        uu = pts[:, 0, None, None] + offsets[None, None, :]
        vv, uu = np.broadcast_arrays(vv, uu)
        patches = ndimage.map_coordinates(query, [vv, uu], order=1, mode="nearest")
        patches = patches - patches.mean(axis=(1, 2), keepdims=True)
        p_energy = np.sum(patches * patches, axis=(1, 2))

        rows = ctr[:, 1, None, None] + region_offsets[None, :, None]
        cols = ctr[:, 0, None, None] + region_offsets[None, None, :]
        regions = window[rows, cols]
        views = sliding_window_view(regions, (side, side), axis=(1, 2))
        numerator = np.einsum("nij,nabij->nab", patches, views)
        r_sum = views.sum(axis=(3, 4))
        r_var = np.sum(views * views, axis=(3, 4)) - r_sum * r_sum / (side * side)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = numerator / np.sqrt(np.clip(r_var, 0, None) * p_energy[:, None, None])

        for k in range(len(pts)):
            surface = rho[k]
            if not np.all(np.isfinite(surface)) or p_energy[k] <= 1e-12:
                continue
            du, dv, peak = _peak_2d(surface)
            kept_q.append(pts[k])
            kept_w.append((ctr[k, 0] + du - r, ctr[k, 1] + dv - r))
            kept_rho.append(min(1.0, peak))

    if not kept_q:
        return np.empty((0, 2)), np.empty((0, 2)), np.empty(0)
    return np.asarray(kept_q), np.asarray(kept_w, dtype=np.float64), np.asarray(kept_rho)


def ncc_match(
    query: np.ndarray,
    window: np.ndarray,
    *,
    scales: Sequence[float] = DEFAULT_SCALES,
    grid_step: int = 16,
    min_peak: float = 0.5,
    patch_half: int = 10,
    search_radius: int = 8,
    allow_crop: bool = True,
    window_id: int = 0,
    offset: tuple[int, int] = (0, 0),
) -> MatchSet:
    """
    Match a query to a window by normalized cross-correlation over a scale pyramid.

    The query is resampled onto window pixels for every scale hypothesis and
    correlated with the whole window; the best peak is refined to sub-pixel
    accuracy and, between scales, by a parabola in log-scale. Grid points of
    the query are then mapped through the recovered scale and translation and
    each is refined by a local correlation search.

    Parameters
    ----------
    query: numpy.ndarray
        Query gray image.
    window: numpy.ndarray
        Window gray crop.
    scales: Sequence[float]
        Query-to-window scale hypotheses (window pixels per query pixel).
    grid_step: int
        Spacing of emitted query points.
    min_peak: float
        Smallest global correlation accepted; weaker windows yield no matches.
    patch_half: int
        Half size of the local refinement patch, in window pixels.
    search_radius: int
        Local search radius around each predicted position.
    allow_crop: bool
        Center-crop the rescaled query to fit the window when it is too large.
    window_id: int
        Identifier stored on the result.
    offset: tuple[int, int]
        Window position in its parent map, stored on the result.

    Returns
    -------
    :class:`MatchSet`
        Matches with confidence ``(1 + rho) / 2``.

    Raises
    ------
    QueryTooLargeError
        The query fits the window at no scale.
    """
    q, w = _check_images(query, window)
    if grid_step < 1 or patch_half < 1 or search_radius < 0:
        raise InvalidParameterError("grid step, patch size and search radius must be positive")
    std = w.std()
    if std > 0:
        w = (w - w.mean()) / std

    scales = sorted(float(s) for s in scales)
    results = [_correlate_at(q, w, s, allow_crop=allow_crop) for s in scales]
    usable = [i for i, res in enumerate(results) if res is not None]
    if not usable:
        raise QueryTooLargeError(f"query {q.shape} does not fit window {w.shape} at any scale in {scales}")

    best = max(usable, key=lambda i: results[i][2])  # type: ignore[index]
    scale = scales[best]
    tx, ty, peak = results[best]  # type: ignore[misc]
    if 0 < best < len(scales) - 1 and results[best - 1] is not None and results[best + 1] is not None:
        step = math.log(scales[best + 1]) - math.log(scales[best])
        frac = _parabolic_offset(results[best - 1][2], peak, results[best + 1][2])  # type: ignore[index]
        if frac != 0.0 and math.isclose(step, math.log(scales[best]) - math.log(scales[best - 1]), rel_tol=1e-6):
            refined_scale = math.exp(math.log(scale) + frac * step)
            refined = _correlate_at(q, w, refined_scale, allow_crop=allow_crop)
            if refined is not None and refined[2] > peak:
                scale, (tx, ty, peak) = refined_scale, refined

    name = NCCMatcher.name
    if peak < min_peak:
        _log.debug("window %d: correlation peak %.3f below %.3f", window_id, peak, min_peak)
        return MatchSet.empty(window_id, matcher=name, offset=offset)

    margin = patch_half / scale
    points = _grid_points(q.shape, grid_step, margin)
    predicted = scale * points + np.array([tx, ty])
    q_pts, w_pts, rho = _refine_points(q, w, points, predicted, scale, patch_half, search_radius)
    confidence = np.clip((1.0 + rho) / 2.0, 0.0, 1.0)
    _log.debug("window %d: scale %.3f peak %.3f, %d matches", window_id, scale, peak, len(confidence))
    return MatchSet(
        window_id,
        q_pts,
        w_pts,
        confidence,
        matcher=name,
        scale=scale,
        translation=(tx, ty),
        offset=offset,
    )


@register_matcher
class NCCMatcher(Matcher):
    """Normalized cross-correlation matcher; see :func:`ncc_match`."""

    __slots__ = ("allow_crop", "grid_step", "min_peak", "patch_half", "scales", "search_radius")

    name = "ncc"
    default_threshold = 0.95

    def __init__(
        self,
        *,
        scales: Sequence[float] = DEFAULT_SCALES,
        grid_step: int = 16,
        min_peak: float = 0.5,
        patch_half: int = 10,
        search_radius: int = 8,
        allow_crop: bool = True,
    ) -> None:
        self.scales: tuple[float, ...] = tuple(scales)
        self.grid_step: int = grid_step
        self.min_peak: float = min_peak
        self.patch_half: int = patch_half
        self.search_radius: int = search_radius
        self.allow_crop: bool = allow_crop

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
        return ncc_match(
            query,
            window,
            scales=self.scales if scale_hint is None else (scale_hint,),
            grid_step=self.grid_step,
            min_peak=self.min_peak,
            patch_half=self.patch_half,
            search_radius=self.search_radius,
            allow_crop=self.allow_crop,
            window_id=window_id,
            offset=offset,
        )
