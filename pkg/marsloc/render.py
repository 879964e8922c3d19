"""Ray-traced gray and depth rendering for orthographic and perspective cameras."""

from __future__ import annotations

from typing import TYPE_CHECKING
import logging
import math
from pathlib import Path

import numpy as np

from .constants import DEPTH_NODATA, MAP_ALTITUDE_M, MAP_PIXEL_SIZE_M
from .enums import CameraKind
from .errors import OutOfBoundsError, PlacementError
from .geometry import nadir_pose
from .internals import raycast
from .lighting import SHADOW_OFFSET_FACTOR
from .models.camera import OrthoIntrinsics, PerspectiveIntrinsics, Pose
from .models.image import RenderedImage, RenderSettings
from .terrain import ray_intersect
from .utils.formats import read_pfm, read_pgm, write_pfm, write_pgm
from .utils.json_exporter import JSONExporter, read_json

if TYPE_CHECKING:
    from .models.sun import SunConfig
    from .models.terrain import TerrainAccel, TerrainModel

__all__ = (
    "default_map_camera",
    "load_rendered",
    "place_camera",
    "render_ortho",
    "render_perspective",
    "save_rendered",
)

_log = logging.getLogger(__name__)

_PLACEMENT_CLEARANCE_M = 10.0


def _render(
    accel: TerrainAccel,
    kind: CameraKind,
    intrinsics: OrthoIntrinsics | PerspectiveIntrinsics,
    pose: Pose,
    sun: SunConfig,
    settings: RenderSettings,
) -> RenderedImage:
    width, height = settings.resolve_size(intrinsics)
    samples = settings.samples_for(sun)
    if isinstance(intrinsics, OrthoIntrinsics):
        code, fx, fy, pixel_size = raycast.KIND_ORTHO, 1.0, 1.0, intrinsics.pixel_size
    else:
        code, fx, fy, pixel_size = raycast.KIND_PERSPECTIVE, intrinsics.fx, intrinsics.fy, 0.0

    gray, depth = raycast.render_kernel(
        *accel.kernel_args(),
        code,
        np.ascontiguousarray(pose.rotation),
        np.ascontiguousarray(pose.translation),
        fx,
        fy,
        intrinsics.cx,
        intrinsics.cy,
        pixel_size,
        width,
        height,
        sun.direction,
        math.radians(sun.diameter_deg / 2),
        samples,
        settings.seed,
        sun.irradiance,
        settings.exposure,
        SHADOW_OFFSET_FACTOR * accel.terrain.spacing,
        DEPTH_NODATA,
    )
    image = RenderedImage(
        gray,
        depth,
        kind,
        intrinsics,
        pose,
        sun,
        exposure=settings.exposure,
        shadow_samples=samples,
        seed=settings.seed,
    )
    misses = int(np.count_nonzero(~image.valid))
    _log.info("rendered %r (%d missed pixels)", image, misses)
    return image


def render_ortho(
    accel: TerrainAccel,
    oi: OrthoIntrinsics,
    pose: Pose,
    sun: SunConfig,
    settings: RenderSettings | None = None,
) -> RenderedImage:
    """
    Render an orthographic gray and depth image.

    Each pixel casts one ray along the camera's viewing axis from the point
    ``backproject_ortho(u, v, 0)``; depth is the hit distance along that axis.

    Parameters
    ----------
    accel: :class:`TerrainAccel`
        Terrain intersection structure. A brute-force structure renders the
        same image without the pyramid.
    oi: :class:`OrthoIntrinsics`
        Map intrinsics.
    pose: :class:`Pose`
        Camera pose; any attitude is accepted.
    sun: :class:`SunConfig`
        Lighting.
    settings: :class:`RenderSettings` | None
        Exposure, sampling and seed.

    Returns
    -------
    :class:`RenderedImage`
        The rendered rasters.
    """
    return _render(accel, CameraKind.ORTHO, oi, pose, sun, settings or RenderSettings())


def render_perspective(
    accel: TerrainAccel,
    intrinsics: PerspectiveIntrinsics,
    pose: Pose,
    sun: SunConfig,
    settings: RenderSettings | None = None,
) -> RenderedImage:
    """
    Render a pinhole gray and depth image.

    Rays pass through pixel centers. Depth is the camera-frame ``z`` of the
    hit, not the slant range.
    """
    return _render(accel, CameraKind.PERSPECTIVE, intrinsics, pose, sun, settings or RenderSettings())


def place_camera(accel: TerrainAccel, x: float, y: float, altitude_agl: float) -> Pose:
    """
    Nadir pose `altitude_agl` meters above the terrain at ``(x, y)``.

    Raises
    ------
    OutOfBoundsError
        ``(x, y)`` lies outside the terrain.
    PlacementError
        The downward ray misses, for example over a nodata hole.
    """
    terrain = accel.terrain
    if not terrain.contains(x, y):
        raise OutOfBoundsError(f"({x:.3f}, {y:.3f}) outside terrain extent {terrain.extent}")
    top = terrain.height_range[1] + _PLACEMENT_CLEARANCE_M
    hit = ray_intersect(accel, (x, y, top), (0.0, 0.0, -1.0))
    if hit is None:
        raise PlacementError(f"no terrain below ({x:.3f}, {y:.3f})")
    return nadir_pose(x, y, float(hit.point[2]) + altitude_agl)


def default_map_camera(
    terrain: TerrainModel,
    *,
    pixel_size: float = MAP_PIXEL_SIZE_M,
    altitude: float = MAP_ALTITUDE_M,
) -> tuple[OrthoIntrinsics, Pose]:
    """
    Nadir orthographic camera covering the terrain.

    The image keeps one pixel clear of every terrain edge so border rays never
    graze the outermost posts.
    """
    width = math.floor(terrain.width_m / pixel_size) - 2
    height = math.floor(terrain.height_m / pixel_size) - 2
    oi = OrthoIntrinsics.from_pixel_size(pixel_size, width, height)
    return oi, nadir_pose(0.0, 0.0, altitude)


def save_rendered(image: RenderedImage, stem: Path) -> tuple[Path, Path, Path]:
    """
    Write ``<stem>.pgm``, ``<stem>.pfm`` and the ``<stem>.json`` sidecar.

    Returns
    -------
    tuple[Path, Path, Path]
        Paths of the gray, depth and sidecar files.
    """
    gray_path = stem.with_name(stem.name + ".pgm")
    depth_path = stem.with_name(stem.name + ".pfm")
    sidecar = stem.with_name(stem.name + ".json")
    write_pgm(gray_path, image.gray)
    write_pfm(depth_path, image.depth)
    JSONExporter().write_document(sidecar, image.to_sidecar())
    return gray_path, depth_path, sidecar


def load_rendered(stem: Path) -> RenderedImage:
    """Read an image written by :func:`save_rendered`."""

    gray, _ = read_pgm(stem.with_name(stem.name + ".pgm"))
    depth = read_pfm(stem.with_name(stem.name + ".pfm"))
    return RenderedImage.from_sidecar(read_json(stem.with_name(stem.name + ".json")), gray, depth)
