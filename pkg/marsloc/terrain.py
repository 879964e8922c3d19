"""Terrain ingestion, interpolation, ray intersection and synthetic generation."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from .enums import TextureEncoding
from .errors import EmptyTerrainError, ExtentMismatchError, InvalidParameterError, NodataError, OutOfBoundsError
from .internals import raycast
from .models.terrain import RayHit, TerrainAccel, TerrainModel
from .utils.formats import read_grid_header, read_pgm, read_raw, write_grid_header, write_pgm, write_raw

__all__ = (
    "DEFAULT_NODATA",
    "brute_force_accel",
    "build_accel",
    "generate_synthetic_terrain",
    "height_at",
    "load_terrain",
    "normal_at",
    "ray_intersect",
    "save_terrain",
)

_log = logging.getLogger(__name__)

DEFAULT_NODATA = -32768.0


def load_terrain(dtm_path: Path, texture_path: Path) -> TerrainModel:
    """
    Load a DTM and its albedo texture.

    Parameters
    ----------
    dtm_path: Path
        Little-endian ``float32`` grid with a ``<dtm_path>.json`` sidecar.
    texture_path: Path
        8-bit PGM, or raw little-endian ``uint16`` grid, with its own sidecar.

    Returns
    -------
    :class:`TerrainModel`
        The loaded terrain with nodata posts recorded.

    Raises
    ------
    MalformedHeaderError
        A sidecar is missing or invalid.
    SizeMismatchError
        A payload does not match its header.
    ExtentMismatchError
        Texture and DTM extents differ by more than half a post.
    """
    header = read_grid_header(dtm_path)
    heights = read_raw(dtm_path, {**header, "dtype": "<f4"}).astype(np.float64)

    tex_header = read_grid_header(texture_path)
    if texture_path.suffix.lower() == ".pgm":
        texture, maxval = read_pgm(texture_path)
        if texture.shape != (tex_header["rows"], tex_header["cols"]):
            raise ExtentMismatchError(f"{texture_path.name}: PGM size disagrees with its sidecar")
    else:
        texture = read_raw(texture_path, {**tex_header, "dtype": "<u2"})
        maxval = tex_header.get("maxval", 65535)

    dtm_extent = ((header["cols"] - 1) * header["post_spacing_m"], (header["rows"] - 1) * header["post_spacing_m"])
    tex_extent = (
        (tex_header["cols"] - 1) * tex_header["post_spacing_m"],
        (tex_header["rows"] - 1) * tex_header["post_spacing_m"],
    )
    mismatch = max(abs(a - b) for a, b in zip(dtm_extent, tex_extent, strict=True))
    if mismatch > 0.5 * header["post_spacing_m"]:
        raise ExtentMismatchError(f"texture extent {tex_extent} differs from DTM extent {dtm_extent}")

    terrain = TerrainModel(
        heights,
        header["post_spacing_m"],
        texture,
        texture_scale=float(maxval),
        nodata=header.get("nodata"),
    )
    _log.info("loaded terrain %s from %s", terrain, dtm_path)
    return terrain


def save_terrain(
    terrain: TerrainModel,
    dtm_path: Path,
    texture_path: Path,
    *,
    encoding: TextureEncoding | None = None,
) -> None:
    """
    Write a terrain in the format read by :func:`load_terrain`.

    Heights are stored as ``float32`` with NaN posts replaced by the nodata
    marker. ``uint8`` textures go to PGM and ``uint16`` textures to raw, unless
    `encoding` says otherwise; float textures are quantized to 8 bits.
    """
    nodata = terrain.nodata if terrain.nodata is not None else DEFAULT_NODATA
    heights = np.where(np.isnan(terrain.heights), nodata, terrain.heights)
    write_raw(
        dtm_path,
        heights,
        {
            "rows": terrain.rows,
            "cols": terrain.cols,
            "post_spacing_m": terrain.spacing,
            "nodata": nodata if terrain.nodata is not None or np.isnan(terrain.heights).any() else None,
            "origin": "center",
            "dtype": "<f4",
        },
    )

    texture = terrain.texture
    if encoding is None:
        encoding = TextureEncoding.RAW16 if texture.dtype == np.uint16 else TextureEncoding.PGM8
    if texture.dtype not in {np.dtype(np.uint8), np.dtype(np.uint16)}:
        _log.warning("quantizing float texture of %s to 8 bits", terrain)
        texture = np.round(np.clip(terrain.albedo, 0.0, 1.0) * 255).astype(np.uint8)
        maxval = 255
    else:
        maxval = int(terrain.texture_scale)

    tex_header = {
        "rows": texture.shape[0],
        "cols": texture.shape[1],
        "post_spacing_m": terrain.texture_spacing,
        "nodata": None,
        "origin": "center",
    }
    if encoding is TextureEncoding.PGM8:
        if texture.dtype != np.uint8 or maxval != 255:
            texture = np.round(terrain.albedo * 255).astype(np.uint8)
        write_pgm(texture_path, texture)
        write_grid_header(texture_path, {**tex_header, "maxval": 255})
    else:
        write_raw(texture_path, texture, {**tex_header, "dtype": "<u2", "maxval": maxval})


def _cell_coordinates(terrain: TerrainModel, x: npt.ArrayLike, y: npt.ArrayLike) -> tuple[np.ndarray, ...]:
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    col_f = (xs - terrain.x0) / terrain.spacing
    row_f = (terrain.y0 - ys) / terrain.spacing
    outside = ~np.isfinite(col_f + row_f) | (col_f < 0) | (col_f > terrain.cols - 1)
    outside |= (row_f < 0) | (row_f > terrain.rows - 1)
    if np.any(outside):
        raise OutOfBoundsError(f"point outside terrain extent {terrain.extent}")
    j = np.minimum(np.floor(col_f).astype(np.int64), terrain.cols - 2)
    i = np.minimum(np.floor(row_f).astype(np.int64), terrain.rows - 2)
    h = terrain.heights
    corners = (h[i, j], h[i, j + 1], h[i + 1, j], h[i + 1, j + 1])
    if any(np.any(np.isnan(c)) for c in corners):
        raise NodataError("interpolation touches a nodata post")
    return (col_f - j, row_f - i, *corners)


def _bilinear(
    fx: np.ndarray, fy: np.ndarray, h00: np.ndarray, h01: np.ndarray, h10: np.ndarray, h11: np.ndarray
) -> np.ndarray:
    return (1 - fx) * (1 - fy) * h00 + fx * (1 - fy) * h01 + (1 - fx) * fy * h10 + fx * fy * h11


def height_at(terrain: TerrainModel, x: npt.ArrayLike, y: npt.ArrayLike) -> float | np.ndarray:
    """
    Bilinear terrain height at world ``(x, y)``.

    Parameters
    ----------
    terrain: :class:`TerrainModel`
        Terrain to sample.
    x, y: numpy.typing.ArrayLike
        World coordinates; scalars or arrays.

    Returns
    -------
    float | numpy.ndarray
        Height in meters, exact at post centers.

    Raises
    ------
    OutOfBoundsError
        A point lies outside the terrain extent.
    NodataError
        A surrounding post is nodata.
    """
    z = _bilinear(*_cell_coordinates(terrain, x, y))
    return float(z) if z.ndim == 0 else z


def normal_at(terrain: TerrainModel, x: npt.ArrayLike, y: npt.ArrayLike, *, step: float | None = None) -> np.ndarray:
    """
    Unit surface normal from central differences on the bilinear surface.

    The differences are taken on the polynomial of the cell containing the
    point, extended past its edges, so the result does not depend on `step`.

    Parameters
    ----------
    terrain: :class:`TerrainModel`
        Terrain to sample.
    x, y: numpy.typing.ArrayLike
        World coordinates.
    step: float | None
        Difference step in meters; defaults to half a post.

    Returns
    -------
    numpy.ndarray
        ``(..., 3)`` unit normals with positive z.
    """
    h = 0.5 * terrain.spacing if step is None else step
    if not h > 0:
        raise InvalidParameterError(f"difference step must be positive, got {step}")
    fx, fy, *corners = _cell_coordinates(terrain, x, y)
    d = h / terrain.spacing
    dzdx = (_bilinear(fx + d, fy, *corners) - _bilinear(fx - d, fy, *corners)) / (2 * h)
    # rows advance southward
    dzdy = (_bilinear(fx, fy - d, *corners) - _bilinear(fx, fy + d, *corners)) / (2 * h)
    n = np.stack(np.broadcast_arrays(-dzdx, -dzdy, np.ones_like(dzdx)), axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def build_accel(terrain: TerrainModel) -> TerrainAccel:
    """
    Build the min-max pyramid used to accelerate ray queries.

    Parameters
    ----------
    terrain: :class:`TerrainModel`
        Terrain to index.

    Returns
    -------
    :class:`TerrainAccel`
        Structure whose queries equal exhaustive triangle tests.

    Raises
    ------
    EmptyTerrainError
        No cell has four valid posts.
    """
    valid = terrain.valid_cells
    if not valid.any():
        raise EmptyTerrainError(f"{terrain} has no intersectable cell")

    h = terrain.heights
    with np.errstate(invalid="ignore"):
        corners = np.stack([h[:-1, :-1], h[:-1, 1:], h[1:, :-1], h[1:, 1:]])
        level_min = np.where(valid, corners.min(axis=0), np.inf)
        level_max = np.where(valid, corners.max(axis=0), -np.inf)

    mins = [level_min]
    maxs = [level_max]
    while level_min.shape != (1, 1):
        rows = -(-level_min.shape[0] // 2)
        cols = -(-level_min.shape[1] // 2)
        pad = ((0, rows * 2 - level_min.shape[0]), (0, cols * 2 - level_min.shape[1]))
        padded_min = np.pad(level_min, pad, constant_values=np.inf)
        padded_max = np.pad(level_max, pad, constant_values=-np.inf)
        level_min = padded_min.reshape(rows, 2, cols, 2).min(axis=(1, 3))
        level_max = padded_max.reshape(rows, 2, cols, 2).max(axis=(1, 3))
        mins.append(level_min)
        maxs.append(level_max)

    shapes = np.array([m.shape for m in mins], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum([m.size for m in mins])[:-1]]).astype(np.int64)
    accel = TerrainAccel(
        terrain,
        np.concatenate([m.ravel() for m in mins]),
        np.concatenate([m.ravel() for m in maxs]),
        shapes,
        offsets,
    )
    _log.debug("built %r over %s", accel, terrain)
    return accel


def brute_force_accel(terrain: TerrainModel) -> TerrainAccel:
    """Structure that answers every query by testing all cells; used as an oracle."""

    if not terrain.valid_cells.any():
        raise EmptyTerrainError(f"{terrain} has no intersectable cell")
    empty = np.empty(0, dtype=np.float64)
    return TerrainAccel(
        terrain,
        empty,
        empty,
        np.ones((1, 2), dtype=np.int64),
        np.zeros(1, dtype=np.int64),
        exhaustive=True,
    )


def ray_intersect(accel: TerrainAccel, origin: npt.ArrayLike, direction: npt.ArrayLike) -> RayHit | None:
    """
    Nearest intersection of a ray with the terrain.

    Parameters
    ----------
    accel: :class:`TerrainAccel`
        Intersection structure.
    origin: numpy.typing.ArrayLike
        Ray origin in world coordinates.
    direction: numpy.typing.ArrayLike
        Non-zero ray direction; ``t`` is measured in its units.

    Returns
    -------
    :class:`RayHit` | None
        The hit, or None on a miss (including rays through nodata holes).
    """
    o = np.asarray(origin, dtype=np.float64).reshape(3)
    d = np.asarray(direction, dtype=np.float64).reshape(3)
    if not np.any(d):
        raise InvalidParameterError("ray direction must be non-zero")
    args = accel.kernel_args()
    t, i, j, tri = raycast.trace_ray(*args[:9], o[0], o[1], o[2], d[0], d[1], d[2])
    if i < 0:
        return None
    point = o + t * d
    terrain = accel.terrain
    normal = np.array(
        raycast.surface_normal(terrain.heights, terrain.x0, terrain.y0, terrain.spacing, i, j, point[0], point[1])
    )
    albedo = raycast.surface_albedo(*args[9:], point[0], point[1])
    return RayHit(point, normal, float(albedo), float(t), (int(i), int(j), int(tri)))


def _fbm(rng: np.random.Generator, shape: tuple[int, int], hurst: float) -> np.ndarray:
    """Zero-mean, unit-variance fractional Brownian surface by spectral synthesis."""

    white = rng.standard_normal(shape)
    ky = np.fft.fftfreq(shape[0])[:, None]
    kx = np.fft.rfftfreq(shape[1])[None, :]
    k = np.hypot(kx, ky)
    k[0, 0] = np.inf
    field = np.fft.irfft2(np.fft.rfft2(white) * k ** -(hurst + 1.0), s=shape)
    std = field.std()
    return (field - field.mean()) / std if std > 0 else np.zeros(shape)


def generate_synthetic_terrain(
    seed: int,
    size_m: float,
    post_spacing: float,
    *,
    amplitude_m: float = 8.0,
    hurst: float = 0.8,
    crater_count: int = 20,
    crater_radius_m: tuple[float, float] = (10.0, 60.0),
    crater_depth_ratio: float = 0.2,
    texture_factor: int = 4,
) -> TerrainModel:
    """
    Generate a deterministic Mars-like terrain.

    Heights are an fBm surface plus parabolic crater bowls. The albedo texture
    blends the upsampled heights with independent smooth noise, is rescaled to
    ``[0.1, 0.9]`` and stored as 8-bit levels.

    Parameters
    ----------
    seed: int
        Seed of the generator; equal seeds give bit-identical terrains.
    size_m: float
        Side length of the square terrain.
    post_spacing: float
        DTM post spacing.
    amplitude_m: float
        Standard deviation of the fBm relief; 0 disables it.
    hurst: float
        Hurst exponent of the fBm, in ``(0, 1]``.
    crater_count: int
        Number of craters.
    crater_radius_m: tuple[float, float]
        Uniform range of crater radii.
    crater_depth_ratio: float
        Crater depth over diameter.
    texture_factor: int
        Texels per post spacing.

    Returns
    -------
    :class:`TerrainModel`
        The generated terrain.
    """
    if not size_m > 0 or not post_spacing > 0:
        raise InvalidParameterError(f"size and spacing must be positive ({size_m}, {post_spacing})")
    if amplitude_m < 0 or crater_count < 0 or texture_factor < 1 or not 0 < hurst <= 1:
        raise InvalidParameterError("invalid roughness, crater or texture parameters")

    n = round(size_m / post_spacing) + 1
    rng = np.random.default_rng(seed)
    relief_rng, crater_rng, albedo_rng = rng.spawn(3)

    heights = amplitude_m * _fbm(relief_rng, (n, n), hurst) if amplitude_m > 0 else np.zeros((n, n))

    half = (n - 1) * post_spacing / 2
    axis = np.linspace(-half, half, n)
    xs, ys = np.meshgrid(axis, axis[::-1])
    for _ in range(crater_count):
        cx, cy = crater_rng.uniform(-half, half, size=2)
        radius = crater_rng.uniform(*crater_radius_m)
        depth = crater_depth_ratio * 2 * radius
        r2 = ((xs - cx) ** 2 + (ys - cy) ** 2) / radius**2
        heights += np.where(r2 < 1.0, depth * (r2 - 1.0), 0.0)

    # float32-representable so files round-trip bit-identically
    heights = heights.astype(np.float32).astype(np.float64)

    tn = (n - 1) * texture_factor + 1
    coords = np.linspace(0, n - 1, tn)
    rr, cc = np.meshgrid(coords, coords, indexing="ij")
    relief = ndimage.map_coordinates(heights, [rr, cc], order=1)
    noise = ndimage.gaussian_filter(albedo_rng.standard_normal((tn, tn)), sigma=texture_factor)
    albedo = 0.5 * _unit_range(relief) + 0.5 * _unit_range(noise)
    albedo = 0.1 + 0.8 * _unit_range(albedo)
    texture = np.clip(np.round(albedo * 255), 26, 229).astype(np.uint8)

    terrain = TerrainModel(heights, post_spacing, texture, texture_scale=255.0)
    _log.info("generated %s (seed %d, %d craters)", terrain, seed, crater_count)
    return terrain


def _unit_range(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if math.isclose(lo, hi):
        return np.full_like(values, 0.5)
    return (values - lo) / (hi - lo)
