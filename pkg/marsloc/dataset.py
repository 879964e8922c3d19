"""Query sampling, footprints, map windows and triplet manifests."""

from __future__ import annotations

from typing import TYPE_CHECKING
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
import logging
import math
from pathlib import Path

import numpy as np

from .constants import (
    ALTITUDE_RANGE_M,
    MIN_TRAINING_OVERLAP,
    QUERY_FOCAL_MM,
    QUERY_HEIGHT_PX,
    QUERY_LIGHTING,
    QUERY_SENSOR_WIDTH_MM,
    QUERY_WIDTH_PX,
    WINDOW_OVERLAP,
    WINDOW_SIZE_PX,
)
from .enums import CameraKind, OverlapReference
from .errors import (
    AllNodataError,
    FootprintMarginError,
    InvalidParameterError,
    MissingMapError,
    OutOfBoundsError,
    PlacementError,
    UnsupportedError,
)
from .models.camera import PerspectiveIntrinsics
from .models.dataset import GroundRect, MapWindow, QuerySpec, Triplet, WindowRect
from .models.sun import SunConfig
from .render import place_camera, render_perspective, save_rendered
from .utils.formats import write_pfm, write_pgm
from .utils.json_exporter import JSONExporter

if TYPE_CHECKING:
    from .models.image import RenderedImage, RenderSettings
    from .models.terrain import TerrainAccel, TerrainModel

__all__ = (
    "QUERY_OPTICS",
    "build_triplets",
    "crop_window",
    "footprint",
    "make_dataset",
    "map_windows",
    "normalize_depth",
    "overlap_fraction",
    "render_queries",
    "sample_queries",
    "tile_rects",
    "window_ground_rect",
)

_log = logging.getLogger(__name__)

QUERY_OPTICS = PerspectiveIntrinsics(QUERY_FOCAL_MM, QUERY_SENSOR_WIDTH_MM, QUERY_WIDTH_PX, QUERY_HEIGHT_PX)

type Lighting = tuple[float, float]


def _footprint_size(altitude: float, intrinsics: PerspectiveIntrinsics) -> tuple[float, float]:
    width = altitude * intrinsics.sensor_width_mm / intrinsics.focal_mm
    return width, width * intrinsics.height / intrinsics.width / intrinsics.aspect


def sample_queries(
    terrain: TerrainModel,
    n: int,
    alt_range: tuple[float, float] = ALTITUDE_RANGE_M,
    seed: int = 0,
    *,
    intrinsics: PerspectiveIntrinsics = QUERY_OPTICS,
    sun: SunConfig | None = None,
) -> list[QuerySpec]:
    """
    Draw nadir query cameras uniformly over the terrain.

    The sampling area is the terrain extent shrunk by the half footprint at
    the highest altitude, so every footprint stays on the map.

    Parameters
    ----------
    terrain: :class:`TerrainModel`
        Terrain the queries observe.
    n: int
        Number of queries.
    alt_range: tuple[float, float]
        Altitude range above ground, sampled uniformly.
    seed: int
        Seed; equal seeds give equal queries.
    intrinsics: :class:`PerspectiveIntrinsics`
        Query optics.
    sun: :class:`SunConfig` | None
        Query lighting, AZ 180 / EL 40 when omitted.

    Returns
    -------
    list[:class:`QuerySpec`]
        Queries ``q00000``, ``q00001``, ... without poses.

    Raises
    ------
    FootprintMarginError
        The terrain cannot hold a footprint at the highest altitude.
    """
    if n < 1:
        raise InvalidParameterError(f"at least one query is required, got {n}")
    lo, hi = alt_range
    if not 0 < lo <= hi:
        raise InvalidParameterError(f"invalid altitude range {alt_range}")
    half_w, half_h = (s / 2 for s in _footprint_size(hi, intrinsics))
    xmin, xmax, ymin, ymax = terrain.extent
    if xmax - xmin <= 2 * half_w or ymax - ymin <= 2 * half_h:
        raise FootprintMarginError(
            f"a {2 * half_w:.1f} x {2 * half_h:.1f} m footprint does not fit in {xmax - xmin:.1f} x {ymax - ymin:.1f} m"
        )
    sun = sun or SunConfig(*QUERY_LIGHTING)

    rng = np.random.default_rng(seed)
    xs = rng.uniform(xmin + half_w, xmax - half_w, n)
    ys = rng.uniform(ymin + half_h, ymax - half_h, n)
    alts = rng.uniform(lo, hi, n)
    queries = [
        QuerySpec(f"q{i:05d}", float(x), float(y), float(h), sun, intrinsics)
        for i, (x, y, h) in enumerate(zip(xs, ys, alts, strict=True))
    ]
    _log.info("sampled %d queries (seed %d, altitude %.0f-%.0f m)", n, seed, lo, hi)
    return queries


def footprint(query: QuerySpec) -> GroundRect:
    """
    Ground rectangle seen by a nadir query.

    Width is ``h * s / f`` and height ``h * (s * H / W) / f``.

    Raises
    ------
    UnsupportedError
        The query has a pose that is not nadir.
    """
    if query.pose is not None and not query.pose.is_nadir:
        raise UnsupportedError(f"footprint of non-nadir query {query.id!r}")
    width, height = _footprint_size(query.altitude_agl, query.intrinsics)
    return GroundRect.centered(query.x, query.y, width, height)


def overlap_fraction(
    fp: GroundRect,
    rect: GroundRect,
    reference: OverlapReference = OverlapReference.QUERY,
) -> float:
    """
    Intersection area relative to the query footprint (or the window).

    A zero-area reference rectangle gives 0.
    """
    base = fp.area if reference is OverlapReference.QUERY else rect.area
    if base <= 0:
        return 0.0
    return min(1.0, max(0.0, fp.intersection_area(rect) / base))


def tile_rects(
    u0: int,
    v0: int,
    width: int,
    height: int,
    window: tuple[int, int] = WINDOW_SIZE_PX,
    overlap: float = WINDOW_OVERLAP,
    *,
    first_id: int = 0,
) -> list[WindowRect]:
    """
    Cover a pixel rectangle with overlapping windows, row-major.

    Windows advance by ``floor(size * (1 - overlap))``; the last column and row
    are moved inward to end on the rectangle's edge. A rectangle smaller than
    the window gets a single window clipped to it.
    """
    if not 0 <= overlap < 1:
        raise InvalidParameterError(f"window overlap must be in [0, 1), got {overlap}")
    if width <= 0 or height <= 0:
        raise InvalidParameterError(f"cannot tile an empty {width}x{height} rectangle")
    win_w = min(window[0], width)
    win_h = min(window[1], height)
    cols = _axis_starts(width, win_w, max(1, math.floor(window[0] * (1 - overlap))))
    rows = _axis_starts(height, win_h, max(1, math.floor(window[1] * (1 - overlap))))
    rects = []
    for r in rows:
        for c in cols:
            rects.append(WindowRect(first_id + len(rects), u0 + c, v0 + r, win_w, win_h))
    return rects


def _axis_starts(length: int, size: int, stride: int) -> list[int]:
    starts = [0]
    while starts[-1] + size < length:
        nxt = starts[-1] + stride
        if nxt + size >= length:
            starts.append(length - size)
            break
        starts.append(nxt)
    return starts


def map_windows(
    map_image: RenderedImage,
    window: tuple[int, int] = WINDOW_SIZE_PX,
    overlap: float = WINDOW_OVERLAP,
) -> list[WindowRect]:
    """Window grid over a whole map."""

    return tile_rects(0, 0, map_image.width, map_image.height, window, overlap)


def window_ground_rect(map_image: RenderedImage, rect: WindowRect) -> GroundRect:
    """Ground area covered by `rect`, pixel edges included."""

    if map_image.kind is not CameraKind.ORTHO or not map_image.pose.is_nadir:
        raise UnsupportedError("ground rectangles need a nadir orthographic map")
    oi = map_image.intrinsics
    p = oi.pixel_size  # type: ignore[union-attr]
    tx, ty, _ = map_image.pose.translation
    return GroundRect(
        tx + p * (rect.u0 - 0.5 - oi.cx),
        tx + p * (rect.u1 - 0.5 - oi.cx),
        ty - p * (rect.v1 - 0.5 - oi.cy),
        ty - p * (rect.v0 - 0.5 - oi.cy),
    )


def normalize_depth(depth: np.ndarray, nodata: float) -> np.ndarray:
    """
    Divide valid depths by their maximum.

    The largest valid depth maps to exactly 1; nodata pixels keep the marker.

    Raises
    ------
    AllNodataError
        No pixel has a valid depth.
    """
    valid = (depth != nodata) & np.isfinite(depth) & (depth > 0)
    if not valid.any():
        raise AllNodataError("depth crop has no valid value")
    out = np.full(depth.shape, nodata, dtype=np.float32)
    values = depth[valid].astype(np.float32)
    out[valid] = values / values.max()
    return out


def crop_window(map_image: RenderedImage, rect: WindowRect) -> MapWindow:
    """
    Cut a window out of a rendered map and normalize its depth.

    Raises
    ------
    OutOfBoundsError
        The rectangle leaves the map.
    AllNodataError
        The crop holds no valid depth.
    """
    if rect.u0 < 0 or rect.v0 < 0 or rect.u1 > map_image.width or rect.v1 > map_image.height:
        raise OutOfBoundsError(f"{rect!r} outside the {map_image.width}x{map_image.height} map")
    gray = map_image.gray[rect.slices].copy()
    depth = map_image.depth[rect.slices].copy()
    return MapWindow(
        rect,
        window_ground_rect(map_image, rect),
        gray,
        depth,
        normalize_depth(depth, map_image.depth_nodata),
        map_image.depth_nodata,
    )


def _lighting_key(sun: SunConfig) -> str:
    return f"az{sun.azimuth_deg:g}_el{sun.elevation_deg:g}"


def _query_image_path(query: QuerySpec) -> str:
    return f"queries/{query.id}.pgm"


def _window_gray_path(sun: SunConfig, rect: WindowRect) -> str:
    return f"maps/{_lighting_key(sun)}/w{rect.id:05d}.pgm"


def _window_depth_path(rect: WindowRect) -> str:
    return f"windows/w{rect.id:05d}_depth.pfm"


def build_triplets(
    queries: Sequence[QuerySpec],
    maps: Mapping[Lighting, RenderedImage],
    windows: Sequence[WindowRect],
    lightings: Sequence[Lighting] | None = None,
    *,
    min_overlap: float = MIN_TRAINING_OVERLAP,
    reference: OverlapReference = OverlapReference.QUERY,
) -> list[Triplet]:
    """
    Pair queries with overlapping map windows under every map lighting.

    Every ``(query, window)`` pair whose overlap reaches `min_overlap` appears
    once per lighting. Order is query, then window, then lighting.

    Parameters
    ----------
    queries: Sequence[:class:`QuerySpec`]
        Queries with ground-truth poses.
    maps: Mapping[tuple[float, float], :class:`RenderedImage`]
        Rendered maps keyed by ``(az, el)``; all share one camera.
    windows: Sequence[:class:`WindowRect`]
        Window grid over the maps.
    lightings: Sequence[tuple[float, float]] | None
        Map lightings to use; all keys of `maps` when omitted.
    min_overlap: float
        Smallest accepted overlap fraction.
    reference: :class:`OverlapReference`
        Rectangle the overlap is relative to.

    Returns
    -------
    list[:class:`Triplet`]
        Triplets with deterministic identifiers and relative paths.

    Raises
    ------
    MissingMapError
        A requested lighting has no rendered map.
    PlacementError
        A query has no ground-truth pose.
    """
    combos = list(maps) if lightings is None else list(lightings)
    missing = [c for c in combos if c not in maps]
    if missing:
        raise MissingMapError(f"no rendered map for lightings {missing}")
    if not combos:
        return []

    reference_map = maps[combos[0]]
    grounds = [window_ground_rect(reference_map, w) for w in windows]
    triplets: list[Triplet] = []
    for query in queries:
        if query.pose is None:
            raise PlacementError(f"query {query.id!r} has not been placed on the terrain")
        fp = footprint(query)
        for rect, ground in zip(windows, grounds, strict=True):
            overlap = overlap_fraction(fp, ground, reference)
            if overlap < min_overlap:
                continue
            for combo in combos:
                map_sun = maps[combo].sun
                triplets.append(
                    Triplet(
                        f"t{len(triplets):07d}",
                        query,
                        rect,
                        map_sun,
                        overlap,
                        query_image=_query_image_path(query),
                        window_gray=_window_gray_path(map_sun, rect),
                        window_depth_norm=_window_depth_path(rect),
                    )
                )
    _log.info(
        "built %d triplets from %d queries, %d windows, %d lightings",
        len(triplets),
        len(queries),
        len(windows),
        len(combos),
    )
    return triplets


def render_queries(
    accel: TerrainAccel,
    queries: Sequence[QuerySpec],
    settings: RenderSettings | None = None,
) -> list[tuple[QuerySpec, RenderedImage]]:
    """
    Place every query camera on the terrain and render it.

    Returns
    -------
    list[tuple[:class:`QuerySpec`, :class:`RenderedImage`]]
        Queries with their ground-truth poses, paired with the perspective
        gray and depth renders, in input order.
    """
    rendered = []
    for query in queries:
        placed = query.with_pose(place_camera(accel, query.x, query.y, query.altitude_agl))
        image = render_perspective(accel, placed.intrinsics, placed.pose, placed.sun, settings)  # type: ignore[arg-type]
        rendered.append((placed, image))
    return rendered


def make_dataset(
    out: Path,
    rendered_queries: Sequence[tuple[QuerySpec, RenderedImage]],
    maps: Mapping[Lighting, RenderedImage],
    *,
    window: tuple[int, int] = WINDOW_SIZE_PX,
    window_overlap: float = WINDOW_OVERLAP,
    min_overlap: float = MIN_TRAINING_OVERLAP,
    reference: OverlapReference = OverlapReference.QUERY,
    threads: int = 1,
) -> Path:
    """
    Write query images, window crops and the triplet manifest under `out`.

    Crops are cut in parallel per window; the manifest is written by a single
    JSON Lines writer in triplet order.

    Returns
    -------
    Path
        Path of ``manifest.jsonl``.
    """
    if not maps:
        raise MissingMapError("no rendered maps given")
    queries = [q for q, _ in rendered_queries]
    windows = map_windows(next(iter(maps.values())), window, window_overlap)
    triplets = build_triplets(queries, maps, windows, min_overlap=min_overlap, reference=reference)

    used_queries = {t.query.id for t in triplets}
    for query, image in rendered_queries:
        if query.id in used_queries:
            save_rendered(image, out / _query_image_path(query).removesuffix(".pgm"))

    used_windows = sorted({t.window.id for t in triplets})
    by_id = {w.id: w for w in windows}

    def write_window(window_id: int) -> int | None:
        rect = by_id[window_id]
        for idx, map_image in enumerate(maps.values()):
            try:
                crop = crop_window(map_image, rect)
            except AllNodataError:
                _log.warning("window %d has no valid depth, skipped", window_id)
                return None
            write_pgm(out / _window_gray_path(map_image.sun, rect), crop.gray)
            # every map shares one camera, so one depth crop serves all lightings
            if idx == 0:
                write_pfm(out / _window_depth_path(rect), crop.depth_norm)
        return window_id

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        written = {w for w in pool.map(write_window, used_windows) if w is not None}

    manifest = out / "manifest.jsonl"
    with JSONExporter().lines(manifest) as writer:
        for triplet in triplets:
            if triplet.window.id in written:
                writer.write(triplet.to_payload())
    _log.info("wrote %d triplets over %d windows to %s", writer.count, len(written), manifest)
    return manifest
