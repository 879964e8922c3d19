"""Sun direction, soft-shadow visibility and Lambertian shading."""

from __future__ import annotations

from typing import TYPE_CHECKING
from collections.abc import Iterable, Sequence
import logging
import math
from pathlib import Path

import numpy as np
import numpy.typing as npt

from .constants import DEFAULT_EXPOSURE, MAP_LIGHTING_AZIMUTHS_DEG, MAP_LIGHTING_ELEVATIONS_DEG
from .errors import InvalidParameterError, MalformedHeaderError
from .internals import raycast
from .models.sun import SunConfig
from .utils.csv_exporter import read_csv

if TYPE_CHECKING:
    from .internals._types.dataset import LightingRowPayload
    from .models.terrain import TerrainAccel

__all__ = (
    "SHADOW_OFFSET_FACTOR",
    "azimuth_sweep",
    "elevation_sweep",
    "lighting_grid",
    "load_lighting_table",
    "shade",
    "sun_direction",
    "time_of_day_sweep",
    "visibility",
)

_log = logging.getLogger(__name__)

SHADOW_OFFSET_FACTOR = 1e-3
"""Shadow-ray origins are lifted this many post spacings along the normal."""


def sun_direction(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """
    Unit vector pointing toward the sun.

    Parameters
    ----------
    azimuth_deg: float
        Counter-clockwise from East.
    elevation_deg: float
        Above the horizon, in ``[0, 90]``.

    Returns
    -------
    numpy.ndarray
        ``(cos EL cos AZ, cos EL sin AZ, sin EL)``.
    """
    if not 0.0 <= elevation_deg <= 90.0:
        raise InvalidParameterError(f"sun elevation must be in [0, 90] degrees, got {elevation_deg}")
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    return np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])


def visibility(
    accel: TerrainAccel,
    point: npt.ArrayLike,
    sun: SunConfig,
    *,
    normal: npt.ArrayLike | None = None,
    seed: int = 0,
    stream: int = 0,
) -> float:
    """
    Fraction of the sun disk visible from `point`.

    Sample directions are stratified over the disk's solid angle and drawn
    from a counter-based generator keyed by ``(seed, stream, sample)``, so the
    result does not depend on evaluation order. A zero diameter casts a single
    hard ray and returns exactly 0 or 1.

    Parameters
    ----------
    accel: :class:`TerrainAccel`
        Intersection structure of the occluding terrain.
    point: numpy.typing.ArrayLike
        Shading point on or above the surface.
    sun: :class:`SunConfig`
        Sun direction, disk size and sample count.
    normal: numpy.typing.ArrayLike | None
        If given, the ray origins are offset along it by
        :data:`SHADOW_OFFSET_FACTOR` post spacings.
    seed: int
        Render seed.
    stream: int
        Per-point stream index, the pixel index when rendering.

    Returns
    -------
    float
        Visible fraction in ``[0, 1]``.
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    if normal is not None:
        p = p + SHADOW_OFFSET_FACTOR * accel.terrain.spacing * np.asarray(normal, dtype=np.float64).reshape(3)
    s = sun.direction
    half_angle = math.radians(sun.diameter_deg / 2)
    args = accel.kernel_args()
    return float(
        raycast.visibility_at(
            *args[:9], p[0], p[1], p[2], s[0], s[1], s[2], half_angle, sun.samples, seed, stream
        )
    )


def shade(
    albedo: float,
    normal: npt.ArrayLike,
    sun: SunConfig,
    visibility: float,
    exposure: float = DEFAULT_EXPOSURE,
) -> int:
    """
    Lambertian gray level.

    ``L = E * albedo * max(0, n . s) * visibility / pi`` and the pixel is
    ``round(255 * min(1, exposure * L))`` clamped to ``[0, 255]``.
    """
    n = np.asarray(normal, dtype=np.float64).reshape(3)
    s = sun.direction
    return raycast.shade_value(albedo, n[0], n[1], n[2], s[0], s[1], s[2], sun.irradiance, visibility, exposure)


def lighting_grid(
    azimuths_deg: Iterable[float] = MAP_LIGHTING_AZIMUTHS_DEG,
    elevations_deg: Iterable[float] = MAP_LIGHTING_ELEVATIONS_DEG,
) -> list[tuple[float, float]]:
    """
    Map lighting combinations ``(az, el)``.

    At EL 90 every azimuth gives the same sun, so the zenith appears once,
    with azimuth 0. The default grid has 8 x 2 + 1 = 17 entries.
    """
    azimuths = list(azimuths_deg)
    grid: list[tuple[float, float]] = []
    for el in elevations_deg:
        if math.isclose(el, 90.0):
            grid.append((0.0, 90.0))
            continue
        grid.extend((float(az) % 360.0, float(el)) for az in azimuths)
    return grid


def elevation_sweep(query_lighting: tuple[float, float], elevations_deg: Sequence[float]) -> list[tuple[float, float]]:
    """Map lightings sharing the query azimuth, one per elevation."""

    az, _ = query_lighting
    return [(az, float(el)) for el in elevations_deg]


def azimuth_sweep(query_lighting: tuple[float, float], offsets_deg: Sequence[float]) -> list[tuple[float, float]]:
    """Map lightings at the query elevation with the azimuth shifted by each offset."""

    az, el = query_lighting
    return [((az + off) % 360.0, el) for off in offsets_deg]


def load_lighting_table(path: Path) -> list[LightingRowPayload]:
    """
    Read a time-of-day table with ``lmst, az_deg, el_deg`` columns.

    Rows keep their file order.
    """
    rows = read_csv(path)
    table: list[LightingRowPayload] = []
    for idx, row in enumerate(rows, start=2):
        try:
            entry: LightingRowPayload = {
                "lmst": row["lmst"].strip(),
                "az_deg": float(row["az_deg"]),
                "el_deg": float(row["el_deg"]),
            }
        except (KeyError, TypeError, ValueError):
            raise MalformedHeaderError(f"{path.name}:{idx}: expected lmst, az_deg, el_deg") from None
        if not 0.0 <= entry["el_deg"] <= 90.0:
            raise InvalidParameterError(f"{path.name}:{idx}: elevation {entry['el_deg']} outside [0, 90]")
        table.append(entry)
    _log.info("loaded %d lighting rows from %s", len(table), path)
    return table


def time_of_day_sweep(path: Path) -> list[tuple[str, tuple[float, float]]]:
    """``(lmst, (az, el))`` query lightings read from a time-of-day table."""

    return [(row["lmst"], (row["az_deg"], row["el_deg"])) for row in load_lighting_table(path)]
