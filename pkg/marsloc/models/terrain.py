"""Heightfield terrain, its intersection structure and ray hits."""

from __future__ import annotations

import numpy as np

from ..errors import ExtentMismatchError, InvalidParameterError

__all__ = ("RayHit", "TerrainAccel", "TerrainModel")


class TerrainModel:
    """Gridded terrain centered on the world origin.

    Posts are stored row-major with row 0 at the northern edge. Nodata posts are
    held as ``NaN`` in :attr:`heights`; the on-disk marker is kept in :attr:`nodata`.

    Attributes
    ----------
    heights: numpy.ndarray
        ``(rows, cols)`` elevations in meters.
    spacing: float
        Post spacing in meters.
    texture: numpy.ndarray
        Albedo texture covering the same extent, stored as raw levels.
    texture_scale: float
        Divisor turning texture levels into albedo in ``[0, 1]``.
    nodata: float | None
        Nodata marker used in files.
    """

    __slots__ = ("heights", "nodata", "spacing", "texture", "texture_scale")

    def __init__(
        self,
        heights: np.ndarray,
        spacing: float,
        texture: np.ndarray,
        *,
        texture_scale: float = 1.0,
        nodata: float | None = None,
    ) -> None:
        grid = np.array(heights, dtype=np.float64)
        if grid.ndim != 2 or min(grid.shape) < 2:
            raise InvalidParameterError(f"terrain needs at least 2x2 posts, got shape {grid.shape}")
        if not spacing > 0:
            raise InvalidParameterError(f"post spacing must be positive, got {spacing}")
        if nodata is not None:
            grid[grid == nodata] = np.nan
        if np.any(np.isinf(grid)):
            raise InvalidParameterError("terrain heights must be finite")
        tex = np.array(texture)
        if tex.ndim != 2 or min(tex.shape) < 2:
            raise InvalidParameterError(f"texture needs at least 2x2 texels, got shape {tex.shape}")
        if texture_scale <= 0:
            raise InvalidParameterError(f"texture scale must be positive, got {texture_scale}")

        self.heights: np.ndarray = grid
        self.spacing: float = float(spacing)
        self.texture: np.ndarray = tex
        self.texture_scale: float = float(texture_scale)
        self.nodata: float | None = nodata

        tex_spacing = self.texture_spacing
        if tex_spacing > self.spacing * (1 + 1e-12):
            raise InvalidParameterError("texture resolution must be at least the height resolution")
        mismatch = max(
            abs((tex.shape[1] - 1) * tex_spacing - self.width_m),
            abs((tex.shape[0] - 1) * tex_spacing - self.height_m),
        )
        if mismatch > 0.5 * self.spacing:
            raise ExtentMismatchError(f"texture and DTM extents differ by {mismatch:.3f} m")

        grid.setflags(write=False)
        tex.setflags(write=False)

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} posts={self.cols}x{self.rows} spacing={self.spacing:g}m "
            f"texture={self.texture.shape[1]}x{self.texture.shape[0]}>"
        )

    @property
    def rows(self) -> int:
        return self.heights.shape[0]

    @property
    def cols(self) -> int:
        return self.heights.shape[1]

    @property
    def width_m(self) -> float:
        """float: East-West extent, ``(cols - 1) * spacing``."""

        return (self.cols - 1) * self.spacing

    @property
    def height_m(self) -> float:
        """float: North-South extent, ``(rows - 1) * spacing``."""

        return (self.rows - 1) * self.spacing

    @property
    def x0(self) -> float:
        """float: world x of column 0."""

        return -self.width_m / 2

    @property
    def y0(self) -> float:
        """float: world y of row 0 (the northern edge)."""

        return self.height_m / 2

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """tuple[float, float, float, float]: ``(xmin, xmax, ymin, ymax)`` in meters."""

        return (self.x0, -self.x0, -self.y0, self.y0)

    @property
    def texture_factor(self) -> float:
        return (self.texture.shape[1] - 1) / (self.cols - 1)

    @property
    def texture_spacing(self) -> float:
        return self.width_m / (self.texture.shape[1] - 1)

    @property
    def albedo(self) -> np.ndarray:
        """numpy.ndarray: texture converted to albedo in ``[0, 1]``."""

        return self.texture.astype(np.float64) / self.texture_scale

    @property
    def valid_cells(self) -> np.ndarray:
        """numpy.ndarray: ``(rows - 1, cols - 1)`` mask of cells with four valid posts."""

        ok = np.isfinite(self.heights)
        return ok[:-1, :-1] & ok[:-1, 1:] & ok[1:, :-1] & ok[1:, 1:]

    @property
    def height_range(self) -> tuple[float, float]:
        return (float(np.nanmin(self.heights)), float(np.nanmax(self.heights)))

    def contains(self, x: float, y: float) -> bool:
        xmin, xmax, ymin, ymax = self.extent
        return xmin <= x <= xmax and ymin <= y <= ymax

    def to_grid(self, x: float, y: float) -> tuple[float, float]:
        """Convert world ``(x, y)`` to fractional ``(col, row)`` grid coordinates."""

        return ((x - self.x0) / self.spacing, (self.y0 - y) / self.spacing)


class RayHit:
    """Nearest intersection of a ray with the terrain surface.

    Attributes
    ----------
    point: numpy.ndarray
        World position of the hit.
    normal: numpy.ndarray
        Unit normal of the bilinear surface at the hit.
    albedo: float
        Interpolated texture albedo.
    t: float
        Ray parameter of the hit, in units of the direction vector.
    cell: tuple[int, int, int]
        ``(row, col, triangle)`` of the intersected triangle.
    """

    __slots__ = ("albedo", "cell", "normal", "point", "t")

    def __init__(
        self,
        point: np.ndarray,
        normal: np.ndarray,
        albedo: float,
        t: float,
        cell: tuple[int, int, int],
    ) -> None:
        self.point: np.ndarray = point
        self.normal: np.ndarray = normal
        self.albedo: float = albedo
        self.t: float = t
        self.cell: tuple[int, int, int] = cell

    def __repr__(self) -> str:
        x, y, z = self.point
        return f"<{self.__class__.__name__} t={self.t:.6f} point=({x:.3f}, {y:.3f}, {z:.3f}) cell={self.cell}>"


class TerrainAccel:
    """Min-max pyramid over terrain cells used as an implicit bounding volume hierarchy.

    Level 0 bounds single cells; each next level bounds 2x2 blocks of the level
    below, up to a single root node. With ``exhaustive`` set, the pyramid is
    not used and every cell is tested.

    Attributes
    ----------
    terrain: :class:`TerrainModel`
        The terrain this structure was built for.
    zmin: numpy.ndarray
        Flattened per-node minimum heights of all levels.
    zmax: numpy.ndarray
        Flattened per-node maximum heights of all levels.
    level_shapes: numpy.ndarray
        ``(levels, 2)`` node counts per level as ``(rows, cols)``.
    level_offsets: numpy.ndarray
        Start index of each level inside ``zmin`` and ``zmax``.
    exhaustive: bool
        Whether intersection queries test every cell.
    """

    __slots__ = ("exhaustive", "level_offsets", "level_shapes", "terrain", "zmax", "zmin")

    def __init__(
        self,
        terrain: TerrainModel,
        zmin: np.ndarray,
        zmax: np.ndarray,
        level_shapes: np.ndarray,
        level_offsets: np.ndarray,
        *,
        exhaustive: bool = False,
    ) -> None:
        self.terrain: TerrainModel = terrain
        self.zmin: np.ndarray = zmin
        self.zmax: np.ndarray = zmax
        self.level_shapes: np.ndarray = level_shapes
        self.level_offsets: np.ndarray = level_offsets
        self.exhaustive: bool = exhaustive

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} levels={self.levels} exhaustive={self.exhaustive}>"

    @property
    def levels(self) -> int:
        return int(self.level_shapes.shape[0])

    def kernel_args(self) -> tuple:
        """Positional arguments shared by every ray-casting kernel."""

        t = self.terrain
        tex_x0 = -(t.texture.shape[1] - 1) * t.texture_spacing / 2
        tex_y0 = (t.texture.shape[0] - 1) * t.texture_spacing / 2
        return (
            t.heights,
            t.x0,
            t.y0,
            t.spacing,
            self.zmin,
            self.zmax,
            self.level_shapes,
            self.level_offsets,
            self.exhaustive,
            t.texture,
            tex_x0,
            tex_y0,
            t.texture_spacing,
            t.texture_scale,
        )
