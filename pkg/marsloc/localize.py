"""
Localization of a query image against an orthographic map.

The map around a position prior is tiled into overlapping windows, the query
is matched against every window, the most confident matches are lifted to 3-D
through the map depth and the query pose is solved by RANSAC over minimal
three-point solutions, then refined on the inliers.
"""

from __future__ import annotations

from typing import TYPE_CHECKING
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
import logging
import math
import time

import numpy as np
import numpy.polynomial.polynomial as npoly
from scipy.spatial.transform import Rotation

from .constants import SEARCH_AREA_SIDE_M, WINDOW_OVERLAP, WINDOW_SIZE_PX
from .dataset import crop_window, tile_rects
from .enums import CameraKind, PoseStatus
from .errors import AllNodataError, OutOfBoundsError, UnsupportedError
from .geometry import backproject_ortho, ground_sample_distance, project_points
from .matchers.filtering import filter_matches
from .models.camera import Pose
from .models.localization import (
    Correspondence2D3D,
    LocalizationDiagnostics,
    PoseEstimate,
    RansacParams,
    SearchArea,
)
from .models.matching import MatchSet

if TYPE_CHECKING:
    from .matchers.base import Matcher
    from .models.camera import PerspectiveIntrinsics
    from .models.dataset import WindowRect
    from .models.image import RenderedImage
    from .models.matching import Match

__all__ = (
    "backproject_matches",
    "dlt_pose",
    "localize",
    "ransac_pnp",
    "refine_pose",
    "reprojection_errors",
    "scale_hint",
    "search_area",
    "solve_p3p",
    "tile_windows",
)

_log = logging.getLogger(__name__)

_MIN_POINTS = 4
_SAMPLE_SIZE = 4


def search_area(map_image: RenderedImage, center: tuple[float, float], side_m: float = SEARCH_AREA_SIDE_M) -> SearchArea:
    """
    Square map region of side `side_m` centered on a position prior.

    Raises
    ------
    UnsupportedError
        The map is not a nadir orthographic render.
    OutOfBoundsError
        The area does not intersect the map.
    """
    if map_image.kind is not CameraKind.ORTHO or not map_image.pose.is_nadir:
        raise UnsupportedError("search areas need a nadir orthographic map")
    oi = map_image.intrinsics
    p = oi.pixel_size  # type: ignore[union-attr]
    tx, ty, _ = map_image.pose.translation
    uc = oi.cx + (center[0] - tx) / p
    vc = oi.cy - (center[1] - ty) / p
    side_px = max(1, round(side_m / p))
    u0 = round(uc - side_px / 2)
    v0 = round(vc - side_px / 2)
    u1, v1 = u0 + side_px, v0 + side_px
    cu0, cv0 = max(0, u0), max(0, v0)
    cu1, cv1 = min(map_image.width, u1), min(map_image.height, v1)
    if cu1 <= cu0 or cv1 <= cv0:
        raise OutOfBoundsError(f"search area around ({center[0]:.1f}, {center[1]:.1f}) misses the map")
    clipped = (cu0, cv0, cu1, cv1) != (u0, v0, u1, v1)
    if clipped:
        _log.warning("search area around (%.1f, %.1f) clipped to the map border", center[0], center[1])
    return SearchArea(center, side_m, cu0, cv0, cu1 - cu0, cv1 - cv0, clipped=clipped)


def tile_windows(
    area: SearchArea,
    window: tuple[int, int] = WINDOW_SIZE_PX,
    overlap: float = WINDOW_OVERLAP,
) -> list[WindowRect]:
    """Overlapping windows covering `area`; see :func:`~marsloc.dataset.tile_rects`."""

    return tile_rects(area.u0, area.v0, area.width, area.height, window, overlap)


def backproject_matches(matches: Sequence[Match], map_image: RenderedImage) -> tuple[Correspondence2D3D, int]:
    """
    Lift matches to world points through the map depth.

    Window positions are moved to map pixels and the depth of the nearest map
    pixel is used; matches without a valid depth there are dropped.

    Returns
    -------
    tuple[:class:`Correspondence2D3D`, int]
        The correspondences and the number of dropped matches.
    """
    if not matches:
        return Correspondence2D3D(np.empty((0, 2)), np.empty((0, 3))), 0
    map_uv = np.array([m.map_uv for m in matches], dtype=np.float64)
    query_uv = np.array([m.query_uv for m in matches], dtype=np.float64)
    confidence = np.array([m.confidence for m in matches], dtype=np.float64)

    ui = np.rint(map_uv[:, 0]).astype(np.int64)
    vi = np.rint(map_uv[:, 1]).astype(np.int64)
    inside = (ui >= 0) & (ui < map_image.width) & (vi >= 0) & (vi < map_image.height)
    depth = np.full(len(matches), map_image.depth_nodata, dtype=np.float64)
    depth[inside] = map_image.depth[vi[inside], ui[inside]]
    keep = inside & (depth != map_image.depth_nodata) & np.isfinite(depth) & (depth > 0)
    dropped = int(len(matches) - keep.sum())
    if dropped:
        _log.warning("dropped %d of %d matches without map depth", dropped, len(matches))
    if not keep.any():
        return Correspondence2D3D(np.empty((0, 2)), np.empty((0, 3))), dropped

    world = backproject_ortho(
        map_image.intrinsics,  # type: ignore[arg-type]
        map_image.pose,
        map_uv[keep, 0],
        map_uv[keep, 1],
        depth[keep],
    )
    return Correspondence2D3D(query_uv[keep], world, confidence[keep]), dropped


def _bearings(K: np.ndarray, uv: np.ndarray) -> np.ndarray:
    rays = np.linalg.solve(K, np.column_stack([uv, np.ones(len(uv))]).T).T
    return rays / np.linalg.norm(rays, axis=1, keepdims=True)


def _rigid_transform(world: np.ndarray, camera: np.ndarray) -> Pose:
    """Pose mapping `world` points onto `camera`-frame points in the least-squares sense."""

    mw = world.mean(axis=0)
    mc = camera.mean(axis=0)
    h = (world - mw).T @ (camera - mc)
    u, _, vt = np.linalg.svd(h)
    fix = np.diag([1.0, 1.0, np.sign(np.linalg.det(vt.T @ u.T)) or 1.0])
    rotation = vt.T @ fix @ u.T
    # camera = R @ world + b, with b = -R @ t
    b = mc - rotation @ mw
    return Pose(rotation, -rotation.T @ b)


def solve_p3p(bearings: np.ndarray, world: np.ndarray) -> list[Pose]:
    """
    All poses placing three world points on three unit bearing rays.

    With the distances ``s1, s2, s3`` along the rays written as ``s2 = u * s1``
    and ``s3 = v * s1``, the three law-of-cosines constraints reduce to a
    quartic in ``v``; every positive real root yields a candidate.

    Parameters
    ----------
    bearings: numpy.ndarray
        ``(3, 3)`` unit rays in the camera frame.
    world: numpy.ndarray
        ``(3, 3)`` world points.

    Returns
    -------
    list[:class:`Pose`]
        Up to four candidate poses; empty for degenerate samples.
    """
    p1, p2, p3 = world
    f1, f2, f3 = bearings
    a = float(np.linalg.norm(p2 - p3))
    b = float(np.linalg.norm(p1 - p3))
    c = float(np.linalg.norm(p1 - p2))
    longest = max(a, b, c)
    if longest == 0 or np.linalg.norm(np.cross(p2 - p1, p3 - p1)) <= 1e-9 * longest * longest:
        return []
    cos_a = float(f2 @ f3)
    cos_b = float(f1 @ f3)
    cos_g = float(f1 @ f2)

    k = (a * a - c * c) / (b * b)
    ratio_c = c * c / (b * b)
    # u(v) = num(v) / den(v); coefficients in increasing degree
    num = np.array([1.0 + k, -2.0 * k * cos_b, k - 1.0])
    den = np.array([2.0 * cos_g, -2.0 * cos_a])
    rest = np.array([1.0 - ratio_c, 2.0 * ratio_c * cos_b, -ratio_c])
    quartic = npoly.polyadd(
        npoly.polysub(npoly.polymul(num, num), 2.0 * cos_g * npoly.polymul(num, den)),
        npoly.polymul(npoly.polymul(den, den), rest),
    )
    quartic = npoly.polytrim(quartic, 1e-14 * float(np.max(np.abs(quartic))))
    if len(quartic) < 2:
        return []

    poses = []
    for root in npoly.polyroots(quartic):
        if abs(root.imag) > 1e-6 * (1.0 + abs(root.real)):
            continue
        v = float(root.real)
        d = float(npoly.polyval(v, den))
        q = 1.0 + v * v - 2.0 * v * cos_b
        if v <= 0 or abs(d) < 1e-12 or q <= 0:
            continue
        u = float(npoly.polyval(v, num)) / d
        if u <= 0:
            continue
        s1 = b / math.sqrt(q)
        camera = np.array([s1 * f1, u * s1 * f2, v * s1 * f3])
        try:
            poses.append(_rigid_transform(world, camera))
        except ValueError:
            continue
    return poses


def reprojection_errors(K: np.ndarray, pose: Pose, corrs: Correspondence2D3D) -> np.ndarray:
    """Pixel distance between observed and projected points; ``inf`` behind the camera."""

    uv, z = project_points(K, pose, corrs.world)
    err = np.linalg.norm(uv - corrs.query_uv, axis=1)
    err[~(z > 0)] = np.inf
    return err


def dlt_pose(corrs: Correspondence2D3D, K: np.ndarray) -> Pose | None:
    """
    Linear pose by direct linear transform of the 3 x 4 projection.

    Needs six or more correspondences whose world points are not coplanar;
    a plane leaves the projection matrix underdetermined and the result is
    ``None``. :func:`ransac_pnp` only falls back to this solver when no
    minimal sample yields a hypothesis, so flat scenes are handled by P3P.
    """
    n = len(corrs)
    if n < 6:
        return None
    rays = np.linalg.solve(K, np.column_stack([corrs.query_uv, np.ones(n)]).T).T
    center = corrs.world.mean(axis=0)
    spread = float(np.sqrt(np.mean(np.sum((corrs.world - center) ** 2, axis=1))))
    if spread == 0:
        return None
    xw = np.column_stack([(corrs.world - center) / spread, np.ones(n)])
    zeros = np.zeros_like(xw)
    a = np.vstack(
        [
            np.hstack([xw, zeros, -rays[:, [0]] * xw]),
            np.hstack([zeros, xw, -rays[:, [1]] * xw]),
        ]
    )
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-9 * sv[0]:
        return None
    normalize = np.eye(4)
    normalize[:3, :3] /= spread
    normalize[:3, 3] = -center / spread
    proj = vt[-1].reshape(3, 4) @ normalize
    u, dv, vt3 = np.linalg.svd(proj[:, :3])
    if np.linalg.det(u @ vt3) < 0:
        proj = -proj
        u, dv, vt3 = np.linalg.svd(proj[:, :3])
    rotation = u @ vt3
    b = proj[:, 3] / dv.mean()
    return Pose(rotation, -rotation.T @ b)


def _skew(v: np.ndarray) -> np.ndarray:
    out = np.zeros((*v.shape[:-1], 3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _cost(K: np.ndarray, rotation: np.ndarray, translation: np.ndarray, corrs: Correspondence2D3D) -> float:
    cam = (corrs.world - translation) @ rotation.T
    if np.any(cam[:, 2] <= 0):
        return math.inf
    uv = cam @ K.T
    uv = uv[:, :2] / uv[:, 2:]
    return float(np.sum((uv - corrs.query_uv) ** 2))


def refine_pose(
    corrs: Correspondence2D3D,
    K: np.ndarray,
    pose: Pose,
    *,
    max_iters: int = 50,
    tol: float = 1e-12,
) -> Pose:
    """
    Minimize the total squared reprojection error over `corrs` by damped Gauss-Newton.

    Rotation updates are applied on the left, ``R <- exp(w) @ R``; the damping
    factor shrinks after every accepted step and grows after every rejected one.

    Parameters
    ----------
    corrs: :class:`Correspondence2D3D`
        Correspondences to fit, usually the RANSAC inliers.
    K: numpy.ndarray
        Query intrinsics matrix.
    pose: :class:`Pose`
        Starting pose.
    max_iters: int
        Accepted-step cap.
    tol: float
        Relative cost decrease below which iteration stops.

    Returns
    -------
    :class:`Pose`
        Refined pose; `pose` itself if no step improves on it.
    """
    rotation = pose.rotation.copy()
    translation = pose.translation.copy()
    cost = _cost(K, rotation, translation, corrs)
    if not math.isfinite(cost) or len(corrs) < 3:
        return pose
    damping = 1e-3
    fx, skew, fy = K[0, 0], K[0, 1], K[1, 1]
    for _ in range(max_iters):
        cam = (corrs.world - translation) @ rotation.T
        x, y, z = cam.T
        proj = cam @ K.T
        residual = (proj[:, :2] / proj[:, 2:] - corrs.query_uv).reshape(-1)
        jp = np.zeros((len(cam), 2, 3))
        jp[:, 0, 0] = fx / z
        jp[:, 0, 1] = skew / z
        jp[:, 0, 2] = -(fx * x + skew * y) / (z * z)
        jp[:, 1, 1] = fy / z
        jp[:, 1, 2] = -fy * y / (z * z)
        # d cam / d w = -[cam]x, d cam / d t = -R
        jac = np.concatenate([jp @ -_skew(cam), jp @ -rotation], axis=2).reshape(-1, 6)
        normal = jac.T @ jac
        gradient = jac.T @ residual
        accepted = False
        while damping < 1e12:
            lhs = normal + damping * (np.diag(np.diag(normal)) + 1e-12 * np.eye(6))
            try:
                step = np.linalg.solve(lhs, -gradient)
            except np.linalg.LinAlgError:
                damping *= 10
                continue
            new_rotation = Rotation.from_rotvec(step[:3]).as_matrix() @ rotation
            new_translation = translation + step[3:]
            new_cost = _cost(K, new_rotation, new_translation, corrs)
            if new_cost < cost:
                accepted = True
                break
            damping *= 10
        if not accepted:
            break
        decrease = cost - new_cost
        rotation, translation, cost = new_rotation, new_translation, new_cost
        damping = max(damping / 10, 1e-12)
        if decrease <= tol * max(cost, 1e-300) or np.linalg.norm(step) < 1e-15:
            break
    u, _, vt = np.linalg.svd(rotation)
    return Pose(u @ vt, translation)


def ransac_pnp(
    corrs: Correspondence2D3D,
    K: np.ndarray,
    threshold_px: float = 3.0,
    max_iters: int = 2000,
    confidence: float = 0.999,
    seed: int = 0,
) -> PoseEstimate:
    """
    Robust pose from 2D-3D correspondences.

    Every iteration draws four correspondences: three feed :func:`solve_p3p`
    and the fourth selects among its solutions. A hypothesis scores by its
    number of correspondences reprojecting closer than `threshold_px`, and
    the iteration budget shrinks as the best inlier ratio grows. When no
    sample yields a solution a linear estimate over all correspondences is
    tried. The winner is refined on its inliers by :func:`refine_pose`.

    Parameters
    ----------
    corrs: :class:`Correspondence2D3D`
        Correspondences.
    K: numpy.ndarray
        Query intrinsics matrix.
    threshold_px: float
        Inlier reprojection threshold.
    max_iters: int
        Iteration cap.
    confidence: float
        Desired probability of drawing one all-inlier sample.
    seed: int
        Seed of the sampling generator.

    Returns
    -------
    :class:`PoseEstimate`
        ``INSUFFICIENT_MATCHES`` for fewer than four correspondences or
        inliers, ``DEGENERATE`` when no pose hypothesis could be formed.
    """
    n = len(corrs)
    if n < _MIN_POINTS:
        return PoseEstimate.failure(PoseStatus.INSUFFICIENT_MATCHES)
    rng = np.random.default_rng(seed)
    bearings = _bearings(K, corrs.query_uv)

    best_pose: Pose | None = None
    best_inliers = np.empty(0, dtype=np.int64)
    best_score = math.inf
    required = max_iters
    iterations = 0
    hypotheses = 0
    while iterations < min(required, max_iters):
        iterations += 1
        sample = rng.choice(n, _SAMPLE_SIZE, replace=False)
        candidates = solve_p3p(bearings[sample[:3]], corrs.world[sample[:3]])
        if not candidates:
            continue
        check = corrs.subset(sample[3:])
        pose = min(candidates, key=lambda p: float(reprojection_errors(K, p, check)[0]))
        hypotheses += 1
        errors = reprojection_errors(K, pose, corrs)
        inliers = np.flatnonzero(errors < threshold_px)
        score = float(np.sum(errors[inliers]))
        if len(inliers) > len(best_inliers) or (len(inliers) == len(best_inliers) and score < best_score):
            best_pose, best_inliers, best_score = pose, inliers, score
            ratio = len(inliers) / n
            all_good = ratio**_SAMPLE_SIZE
            if all_good >= 1.0 - 1e-12:
                required = iterations
            elif all_good > 0:
                required = math.ceil(math.log(1.0 - confidence) / math.log(1.0 - all_good))

    if hypotheses == 0:
        best_pose = dlt_pose(corrs, K)
        if best_pose is None:
            _log.debug("ransac: every sample of %d correspondences was degenerate", n)
            return PoseEstimate.failure(PoseStatus.DEGENERATE, iterations=iterations)
        best_inliers = np.flatnonzero(reprojection_errors(K, best_pose, corrs) < threshold_px)
    _log.debug("ransac: %d iterations, %d hypotheses, %d/%d inliers", iterations, hypotheses, len(best_inliers), n)
    if len(best_inliers) < _MIN_POINTS or best_pose is None:
        return PoseEstimate.failure(PoseStatus.INSUFFICIENT_MATCHES, iterations=iterations)

    pose = best_pose
    inliers = best_inliers
    for _ in range(2):
        pose = refine_pose(corrs.subset(inliers), K, pose)
        errors = reprojection_errors(K, pose, corrs)
        updated = np.flatnonzero(errors < threshold_px)
        if len(updated) < _MIN_POINTS:
            return PoseEstimate.failure(PoseStatus.INSUFFICIENT_MATCHES, iterations=iterations)
        if np.array_equal(updated, inliers):
            break
        inliers = updated
    errors = reprojection_errors(K, pose, corrs)
    inliers = np.flatnonzero(errors < threshold_px)
    if len(inliers) < _MIN_POINTS:
        return PoseEstimate.failure(PoseStatus.INSUFFICIENT_MATCHES, iterations=iterations)
    return PoseEstimate(pose, PoseStatus.OK, inliers=inliers, residuals_px=errors[inliers], iterations=iterations)


def scale_hint(altitude_m: float, intrinsics: PerspectiveIntrinsics, map_pixel_size_m: float) -> float:
    """Expected window pixels per query pixel for a nadir query at `altitude_m`."""

    return ground_sample_distance(altitude_m, intrinsics) / map_pixel_size_m


def localize(
    query: np.ndarray,
    map_image: RenderedImage,
    matcher: Matcher,
    prior_center: tuple[float, float],
    K: np.ndarray,
    *,
    side_m: float = SEARCH_AREA_SIDE_M,
    window: tuple[int, int] = WINDOW_SIZE_PX,
    overlap: float = WINDOW_OVERLAP,
    top_k: int = 500,
    conf_threshold: float | None = None,
    ransac: RansacParams | None = None,
    seed: int = 0,
    threads: int = 1,
    window_scale: float | None = None,
    query_id: str = "",
) -> PoseEstimate:
    """
    Estimate the pose of a query image from a rendered orthographic map.

    Parameters
    ----------
    query: numpy.ndarray
        Query gray image.
    map_image: :class:`RenderedImage`
        Nadir orthographic map with gray and depth.
    matcher: :class:`Matcher`
        Matcher run on every window.
    prior_center: tuple[float, float]
        Position prior ``(x, y)`` the search area is centered on.
    K: numpy.ndarray
        Query intrinsics matrix.
    side_m: float
        Search area side.
    window: tuple[int, int]
        Window ``(width, height)`` in pixels.
    overlap: float
        Window overlap fraction.
    top_k: int
        Matches kept per window.
    conf_threshold: float | None
        Confidence threshold over the search area; defaults to the matcher's.
    ransac: :class:`RansacParams` | None
        RANSAC settings.
    seed: int
        RANSAC seed.
    threads: int
        Windows matched concurrently.
    window_scale: float | None
        Expected window pixels per query pixel, e.g. from :func:`scale_hint`.
    query_id: str
        Identifier recorded in the diagnostics.

    Returns
    -------
    :class:`PoseEstimate`
        Estimate with :attr:`~PoseEstimate.diagnostics` filled in.
    """
    ransac = ransac or RansacParams()
    threshold = matcher.default_threshold if conf_threshold is None else conf_threshold
    diag = LocalizationDiagnostics(query_id)
    start = time.perf_counter()

    def lap(stage: str, since: float) -> float:
        now = time.perf_counter()
        diag.timings_ms[stage] = (now - since) * 1000.0
        return now

    area = search_area(map_image, prior_center, side_m)
    rects = tile_windows(area, window, overlap)
    diag.area_clipped = area.clipped
    diag.window_count = len(rects)
    mark = lap("tile", start)

    def match_window(rect: WindowRect) -> MatchSet:
        try:
            crop = crop_window(map_image, rect)
        except AllNodataError:
            _log.debug("window %d has no map depth, skipped", rect.id)
            return MatchSet.empty(rect.id, matcher=matcher.name, offset=(rect.u0, rect.v0))
        return matcher.match(
            query,
            crop.gray,
            crop.depth_norm,
            window_id=rect.id,
            offset=crop.offset,
            scale_hint=window_scale,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sets = list(pool.map(match_window, rects))
    else:
        sets = [match_window(rect) for rect in rects]
    diag.raw_matches = sum(len(s) for s in sets)
    for s in sets:
        _log.debug("window %d: %d matches", s.window_id, len(s))
    mark = lap("match", mark)

    matches = filter_matches(sets, top_k, threshold)
    diag.filtered_matches = len(matches)
    mark = lap("filter", mark)

    corrs, dropped = backproject_matches(matches, map_image)
    diag.correspondences = len(corrs)
    diag.dropped_nodata = dropped
    mark = lap("backproject", mark)

    estimate = ransac_pnp(corrs, K, ransac.threshold_px, ransac.max_iters, ransac.confidence, seed)
    lap("pnp", mark)
    diag.timings_ms["total"] = (time.perf_counter() - start) * 1000.0

    diag.status = estimate.status
    diag.inliers = len(estimate.inliers)
    diag.ransac_iterations = estimate.iterations
    diag.mean_reproj_px = estimate.mean_reproj_px
    diag.residuals_px = [float(r) for r in estimate.residuals_px]
    estimate.diagnostics = diag
    _log.info(
        "query %s: %s with %d inliers from %d windows, %d raw and %d filtered matches",
        query_id or "-",
        estimate.status.value,
        diag.inliers,
        diag.window_count,
        diag.raw_matches,
        diag.filtered_matches,
    )
    return estimate
