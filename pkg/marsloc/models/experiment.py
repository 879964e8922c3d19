"""Experiment configuration and result records."""

from __future__ import annotations

from typing import TYPE_CHECKING, Self, cast
import math
from pathlib import Path

import numpy as np

from ..constants import (
    ALTITUDE_BINS,
    ALTITUDE_RANGE_M,
    MAP_ALTITUDE_M,
    MAP_LIGHTING_AZIMUTHS_DEG,
    MAP_LIGHTING_ELEVATIONS_DEG,
    MAP_PIXEL_SIZE_M,
    MIN_TRAINING_OVERLAP,
    QUERY_FOCAL_MM,
    QUERY_HEIGHT_PX,
    QUERY_LIGHTING,
    QUERY_SENSOR_WIDTH_MM,
    QUERY_WIDTH_PX,
    SEARCH_AREA_SIDE_M,
    SUN_ANGULAR_DIAMETER_DEG,
    SUN_SHADOW_SAMPLES,
    WINDOW_OVERLAP,
    WINDOW_SIZE_PX,
)
from ..enums import OverlapReference, PoseStatus
from ..errors import InvalidParameterError
from ..utils.json_exporter import read_json
from .camera import PerspectiveIntrinsics
from .localization import RansacParams

if TYPE_CHECKING:
    from ..internals._types.config import (
        DatasetConfigPayload,
        ExperimentConfigPayload,
        LocalizeConfigPayload,
        MapConfigPayload,
        QueryConfigPayload,
        TerrainSourcePayload,
    )

__all__ = (
    "CellSummary",
    "DatasetConfig",
    "ExperimentConfig",
    "LocalizeConfig",
    "MapConfig",
    "MetricsReport",
    "QueryConfig",
    "QueryResult",
    "TerrainSource",
)

type Lighting = tuple[float, float]


def _lightings(raw: list[list[float]] | None) -> list[Lighting] | None:
    if raw is None:
        return None
    out = []
    for pair in raw:
        if len(pair) != 2:
            raise InvalidParameterError(f"lighting entries are [az, el] pairs, got {pair}")
        out.append((float(pair[0]), float(pair[1])))
    return out


class TerrainSource:
    """Where the terrain comes from: a synthetic generator or DTM and texture files."""

    __slots__ = (
        "amplitude_m",
        "crater_count",
        "crater_radius_m",
        "dtm_path",
        "hurst",
        "kind",
        "post_spacing_m",
        "seed",
        "size_m",
        "texture_factor",
        "texture_path",
    )

    def __init__(
        self,
        kind: str = "synthetic",
        *,
        seed: int | None = None,
        size_m: float = 2000.0,
        post_spacing_m: float = 1.0,
        amplitude_m: float = 8.0,
        hurst: float = 0.8,
        crater_count: int = 20,
        crater_radius_m: tuple[float, float] = (10.0, 60.0),
        texture_factor: int = 4,
        dtm_path: Path | None = None,
        texture_path: Path | None = None,
    ) -> None:
        if kind not in ("synthetic", "file"):
            raise InvalidParameterError(f"terrain kind must be 'synthetic' or 'file', got {kind!r}")
        if kind == "file" and (dtm_path is None or texture_path is None):
            raise InvalidParameterError("file terrains need dtm_path and texture_path")
        self.kind: str = kind
        self.seed: int | None = seed
        self.size_m: float = size_m
        self.post_spacing_m: float = post_spacing_m
        self.amplitude_m: float = amplitude_m
        self.hurst: float = hurst
        self.crater_count: int = crater_count
        self.crater_radius_m: tuple[float, float] = crater_radius_m
        self.texture_factor: int = texture_factor
        self.dtm_path: Path | None = dtm_path
        self.texture_path: Path | None = texture_path

    def __repr__(self) -> str:
        if self.kind == "file":
            return f"<{self.__class__.__name__} kind=file dtm={self.dtm_path}>"
        return f"<{self.__class__.__name__} kind=synthetic seed={self.seed} size={self.size_m:g}m>"

    def to_payload(self) -> TerrainSourcePayload:
        data: TerrainSourcePayload = {
            "kind": self.kind,  # type: ignore[typeddict-item]
            "size_m": self.size_m,
            "post_spacing_m": self.post_spacing_m,
            "amplitude_m": self.amplitude_m,
            "hurst": self.hurst,
            "crater_count": self.crater_count,
            "crater_radius_m": list(self.crater_radius_m),
            "texture_factor": self.texture_factor,
        }
        if self.seed is not None:
            data["seed"] = self.seed
        if self.dtm_path is not None:
            data["dtm_path"] = self.dtm_path.as_posix()
        if self.texture_path is not None:
            data["texture_path"] = self.texture_path.as_posix()
        return data

    @classmethod
    def from_payload(cls, data: TerrainSourcePayload) -> Self:
        radius = data.get("crater_radius_m", [10.0, 60.0])
        dtm = data.get("dtm_path")
        texture = data.get("texture_path")
        return cls(
            data.get("kind", "synthetic"),
            seed=data.get("seed"),
            size_m=data.get("size_m", 2000.0),
            post_spacing_m=data.get("post_spacing_m", 1.0),
            amplitude_m=data.get("amplitude_m", 8.0),
            hurst=data.get("hurst", 0.8),
            crater_count=data.get("crater_count", 20),
            crater_radius_m=(float(radius[0]), float(radius[1])),
            texture_factor=data.get("texture_factor", 4),
            dtm_path=Path(dtm) if dtm else None,
            texture_path=Path(texture) if texture else None,
        )


class MapConfig:
    """Orthographic map camera and the lightings maps are rendered under.

    ``lightings`` lists explicit ``(az, el)`` pairs; when it is ``None`` the
    grid of ``azimuths_deg`` by ``elevations_deg`` is used.
    """

    __slots__ = (
        "altitude_m",
        "azimuths_deg",
        "elevations_deg",
        "lightings",
        "pixel_size_m",
        "shadow_samples",
        "sun_diameter_deg",
    )

    def __init__(
        self,
        *,
        lightings: list[Lighting] | None = None,
        azimuths_deg: tuple[float, ...] = MAP_LIGHTING_AZIMUTHS_DEG,
        elevations_deg: tuple[float, ...] = MAP_LIGHTING_ELEVATIONS_DEG,
        altitude_m: float = MAP_ALTITUDE_M,
        pixel_size_m: float = MAP_PIXEL_SIZE_M,
        sun_diameter_deg: float = SUN_ANGULAR_DIAMETER_DEG,
        shadow_samples: int = SUN_SHADOW_SAMPLES,
    ) -> None:
        self.lightings: list[Lighting] | None = lightings
        self.azimuths_deg: tuple[float, ...] = tuple(azimuths_deg)
        self.elevations_deg: tuple[float, ...] = tuple(elevations_deg)
        self.altitude_m: float = altitude_m
        self.pixel_size_m: float = pixel_size_m
        self.sun_diameter_deg: float = sun_diameter_deg
        self.shadow_samples: int = shadow_samples

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} p_map={self.pixel_size_m:g}m altitude={self.altitude_m:g}m>"

    def to_payload(self) -> MapConfigPayload:
        data: MapConfigPayload = {
            "azimuths_deg": list(self.azimuths_deg),
            "elevations_deg": list(self.elevations_deg),
            "altitude_m": self.altitude_m,
            "pixel_size_m": self.pixel_size_m,
            "sun_diameter_deg": self.sun_diameter_deg,
            "shadow_samples": self.shadow_samples,
        }
        if self.lightings is not None:
            data["lightings"] = [list(pair) for pair in self.lightings]
        return data

    @classmethod
    def from_payload(cls, data: MapConfigPayload) -> Self:
        return cls(
            lightings=_lightings(data.get("lightings")),
            azimuths_deg=tuple(data.get("azimuths_deg", MAP_LIGHTING_AZIMUTHS_DEG)),
            elevations_deg=tuple(data.get("elevations_deg", MAP_LIGHTING_ELEVATIONS_DEG)),
            altitude_m=data.get("altitude_m", MAP_ALTITUDE_M),
            pixel_size_m=data.get("pixel_size_m", MAP_PIXEL_SIZE_M),
            sun_diameter_deg=data.get("sun_diameter_deg", SUN_ANGULAR_DIAMETER_DEG),
            shadow_samples=data.get("shadow_samples", SUN_SHADOW_SAMPLES),
        )


class QueryConfig:
    """Query sampling, optics, lightings and altitude bins.

    Bins must be contiguous and lie inside the sampled altitude range.
    """

    __slots__ = (
        "altitude_bins_m",
        "altitude_range_m",
        "count",
        "focal_mm",
        "height",
        "lighting_table",
        "lightings",
        "sensor_width_mm",
        "shadow_samples",
        "sun_diameter_deg",
        "width",
    )

    def __init__(
        self,
        *,
        count: int = 100,
        altitude_range_m: tuple[float, float] = ALTITUDE_RANGE_M,
        altitude_bins_m: tuple[tuple[float, float], ...] = ALTITUDE_BINS,
        lightings: list[Lighting] | None = None,
        lighting_table: Path | None = None,
        focal_mm: float = QUERY_FOCAL_MM,
        sensor_width_mm: float = QUERY_SENSOR_WIDTH_MM,
        width: int = QUERY_WIDTH_PX,
        height: int = QUERY_HEIGHT_PX,
        sun_diameter_deg: float = SUN_ANGULAR_DIAMETER_DEG,
        shadow_samples: int = SUN_SHADOW_SAMPLES,
    ) -> None:
        if count < 1:
            raise InvalidParameterError(f"query count must be positive, got {count}")
        lo, hi = altitude_range_m
        if not 0 < lo <= hi:
            raise InvalidParameterError(f"invalid altitude range {altitude_range_m}")
        bins = tuple((float(a), float(b)) for a, b in altitude_bins_m)
        if not bins:
            raise InvalidParameterError("at least one altitude bin is required")
        for (a0, a1), (b0, _) in zip(bins, bins[1:], strict=False):
            if a1 != b0:
                raise InvalidParameterError(f"altitude bins must be contiguous, got {bins}")
        if any(a >= b for a, b in bins) or bins[0][0] < lo or bins[-1][1] > hi:
            raise InvalidParameterError(f"altitude bins {bins} must be increasing and inside {altitude_range_m}")
        self.count: int = count
        self.altitude_range_m: tuple[float, float] = (float(lo), float(hi))
        self.altitude_bins_m: tuple[tuple[float, float], ...] = bins
        self.lightings: list[Lighting] = lightings if lightings is not None else [QUERY_LIGHTING]
        self.lighting_table: Path | None = lighting_table
        self.focal_mm: float = focal_mm
        self.sensor_width_mm: float = sensor_width_mm
        self.width: int = width
        self.height: int = height
        self.sun_diameter_deg: float = sun_diameter_deg
        self.shadow_samples: int = shadow_samples

    def __repr__(self) -> str:
        lo, hi = self.altitude_range_m
        return f"<{self.__class__.__name__} count={self.count} altitude=[{lo:g}, {hi:g}] lightings={len(self.lightings)}>"

    def intrinsics(self) -> PerspectiveIntrinsics:
        return PerspectiveIntrinsics(self.focal_mm, self.sensor_width_mm, self.width, self.height)

    def bin_label(self, altitude_m: float) -> str:
        """Label ``"lo-hi"`` of the bin holding `altitude_m`; the last bin is closed."""

        for idx, (lo, hi) in enumerate(self.altitude_bins_m):
            last = idx == len(self.altitude_bins_m) - 1
            if lo <= altitude_m < hi or (last and altitude_m == hi):
                return f"{lo:g}-{hi:g}"
        return "out-of-range"

    def to_payload(self) -> QueryConfigPayload:
        data: QueryConfigPayload = {
            "count": self.count,
            "altitude_range_m": list(self.altitude_range_m),
            "altitude_bins_m": [list(b) for b in self.altitude_bins_m],
            "lightings": [list(pair) for pair in self.lightings],
            "focal_mm": self.focal_mm,
            "sensor_width_mm": self.sensor_width_mm,
            "width": self.width,
            "height": self.height,
            "sun_diameter_deg": self.sun_diameter_deg,
            "shadow_samples": self.shadow_samples,
        }
        if self.lighting_table is not None:
            data["lighting_table"] = self.lighting_table.as_posix()
        return data

    @classmethod
    def from_payload(cls, data: QueryConfigPayload) -> Self:
        lo, hi = data.get("altitude_range_m", ALTITUDE_RANGE_M)
        table = data.get("lighting_table")
        return cls(
            count=data.get("count", 100),
            altitude_range_m=(float(lo), float(hi)),
            altitude_bins_m=tuple((float(a), float(b)) for a, b in data.get("altitude_bins_m", ALTITUDE_BINS)),
            lightings=_lightings(data.get("lightings")),
            lighting_table=Path(table) if table else None,
            focal_mm=data.get("focal_mm", QUERY_FOCAL_MM),
            sensor_width_mm=data.get("sensor_width_mm", QUERY_SENSOR_WIDTH_MM),
            width=data.get("width", QUERY_WIDTH_PX),
            height=data.get("height", QUERY_HEIGHT_PX),
            sun_diameter_deg=data.get("sun_diameter_deg", SUN_ANGULAR_DIAMETER_DEG),
            shadow_samples=data.get("shadow_samples", SUN_SHADOW_SAMPLES),
        )


class DatasetConfig:
    """Window grid and overlap rule of the triplet dataset."""

    __slots__ = ("min_overlap", "overlap_reference", "window", "window_overlap")

    def __init__(
        self,
        *,
        window: tuple[int, int] = WINDOW_SIZE_PX,
        window_overlap: float = WINDOW_OVERLAP,
        min_overlap: float = MIN_TRAINING_OVERLAP,
        overlap_reference: OverlapReference = OverlapReference.QUERY,
    ) -> None:
        self.window: tuple[int, int] = window
        self.window_overlap: float = window_overlap
        self.min_overlap: float = min_overlap
        self.overlap_reference: OverlapReference = overlap_reference

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} window={self.window[0]}x{self.window[1]} min_overlap={self.min_overlap:g}>"

    def to_payload(self) -> DatasetConfigPayload:
        return {
            "window_width": self.window[0],
            "window_height": self.window[1],
            "window_overlap": self.window_overlap,
            "min_overlap": self.min_overlap,
            "overlap_reference": self.overlap_reference.value,
        }

    @classmethod
    def from_payload(cls, data: DatasetConfigPayload) -> Self:
        return cls(
            window=(data.get("window_width", WINDOW_SIZE_PX[0]), data.get("window_height", WINDOW_SIZE_PX[1])),
            window_overlap=data.get("window_overlap", WINDOW_OVERLAP),
            min_overlap=data.get("min_overlap", MIN_TRAINING_OVERLAP),
            overlap_reference=OverlapReference(data.get("overlap_reference", "query")),
        )


class LocalizeConfig:
    """Matcher choice, search area, filtering and RANSAC settings."""

    __slots__ = (
        "conf_threshold",
        "matcher",
        "ransac",
        "search_side_m",
        "top_k",
        "use_altitude_prior",
        "window",
        "window_overlap",
    )

    def __init__(
        self,
        *,
        matcher: str = "ncc",
        search_side_m: float = SEARCH_AREA_SIDE_M,
        window: tuple[int, int] = WINDOW_SIZE_PX,
        window_overlap: float = WINDOW_OVERLAP,
        top_k: int = 500,
        conf_threshold: float | None = None,
        use_altitude_prior: bool = False,
        ransac: RansacParams | None = None,
    ) -> None:
        self.matcher: str = matcher
        self.search_side_m: float = search_side_m
        self.window: tuple[int, int] = window
        self.window_overlap: float = window_overlap
        self.top_k: int = top_k
        self.conf_threshold: float | None = conf_threshold
        self.use_altitude_prior: bool = use_altitude_prior
        self.ransac: RansacParams = ransac or RansacParams()

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} matcher={self.matcher!r} side={self.search_side_m:g}m top_k={self.top_k}>"

    def to_payload(self) -> LocalizeConfigPayload:
        return {
            "matcher": self.matcher,
            "search_side_m": self.search_side_m,
            "window_width": self.window[0],
            "window_height": self.window[1],
            "window_overlap": self.window_overlap,
            "top_k": self.top_k,
            "conf_threshold": self.conf_threshold,
            "use_altitude_prior": self.use_altitude_prior,
            "ransac": self.ransac.to_payload(),
        }

    @classmethod
    def from_payload(cls, data: LocalizeConfigPayload) -> Self:
        return cls(
            matcher=data.get("matcher", "ncc"),
            search_side_m=data.get("search_side_m", SEARCH_AREA_SIDE_M),
            window=(data.get("window_width", WINDOW_SIZE_PX[0]), data.get("window_height", WINDOW_SIZE_PX[1])),
            window_overlap=data.get("window_overlap", WINDOW_OVERLAP),
            top_k=data.get("top_k", 500),
            conf_threshold=data.get("conf_threshold"),
            use_altitude_prior=data.get("use_altitude_prior", False),
            ransac=RansacParams.from_payload(data.get("ransac", {})),
        )


class ExperimentConfig:
    """A complete experiment: terrain, maps, queries, dataset and localization settings.

    Attributes
    ----------
    seed: int
        Master seed; every random draw of the run derives from it.
    threads: int
        Worker count for rendering, matching and query processing.
    out: Path
        Output directory.
    record_timing: bool
        Write wall-clock timings to the per-query CSV; off keeps reruns byte-identical.
    """

    __slots__ = ("dataset", "localize", "map", "out", "queries", "record_timing", "seed", "terrain", "threads")

    def __init__(
        self,
        *,
        seed: int = 0,
        threads: int = 1,
        out: Path = Path("out"),
        record_timing: bool = False,
        terrain: TerrainSource | None = None,
        map: MapConfig | None = None,  # noqa: A002
        queries: QueryConfig | None = None,
        dataset: DatasetConfig | None = None,
        localize: LocalizeConfig | None = None,
    ) -> None:
        if threads < 1:
            raise InvalidParameterError(f"thread count must be positive, got {threads}")
        self.seed: int = seed
        self.threads: int = threads
        self.out: Path = Path(out)
        self.record_timing: bool = record_timing
        self.terrain: TerrainSource = terrain or TerrainSource()
        self.map: MapConfig = map or MapConfig()
        self.queries: QueryConfig = queries or QueryConfig()
        self.dataset: DatasetConfig = dataset or DatasetConfig()
        self.localize: LocalizeConfig = localize or LocalizeConfig()

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} seed={self.seed} threads={self.threads} out={self.out.as_posix()!r}>"

    @property
    def terrain_seed(self) -> int:
        return self.seed if self.terrain.seed is None else self.terrain.seed

    def with_overrides(self, *, seed: int | None = None, threads: int | None = None, out: Path | None = None) -> Self:
        """Copy with command-line overrides applied."""

        data = self.to_payload()
        if seed is not None:
            data["seed"] = seed
        if threads is not None:
            data["threads"] = threads
        if out is not None:
            data["out"] = out.as_posix()
        return type(self).from_payload(data)

    def to_payload(self) -> ExperimentConfigPayload:
        return {
            "seed": self.seed,
            "threads": self.threads,
            "out": self.out.as_posix(),
            "record_timing": self.record_timing,
            "terrain": self.terrain.to_payload(),
            "map": self.map.to_payload(),
            "queries": self.queries.to_payload(),
            "dataset": self.dataset.to_payload(),
            "localize": self.localize.to_payload(),
        }

    @classmethod
    def from_payload(cls, data: ExperimentConfigPayload) -> Self:
        return cls(
            seed=data.get("seed", 0),
            threads=data.get("threads", 1),
            out=Path(data.get("out", "out")),
            record_timing=data.get("record_timing", False),
            terrain=TerrainSource.from_payload(data.get("terrain", {})),
            map=MapConfig.from_payload(data.get("map", {})),
            queries=QueryConfig.from_payload(data.get("queries", {})),
            dataset=DatasetConfig.from_payload(data.get("dataset", {})),
            localize=LocalizeConfig.from_payload(data.get("localize", {})),
        )

    @classmethod
    def load(cls, path: Path) -> Self:
        """Read a JSON configuration file; missing keys take their defaults."""

        data = read_json(path)
        if not isinstance(data, dict):
            raise InvalidParameterError(f"{path.name}: configuration must be a JSON object")
        return cls.from_payload(cast("ExperimentConfigPayload", data))


class QueryResult:
    """One localization attempt: a query under one map lighting.

    Attributes
    ----------
    query_id: str
        Query identifier.
    altitude_m: float
        Query altitude above ground.
    altitude_bin: str
        Altitude bin label.
    map_lighting: tuple[float, float]
        Map ``(az, el)``.
    query_lighting: tuple[float, float]
        Query ``(az, el)``.
    matcher: str
        Matcher name.
    status: :class:`PoseStatus`
        Outcome.
    error_m: float
        Localization error; ``inf`` for failures.
    inliers: int
        RANSAC inlier count.
    reproj_px: float | None
        Mean inlier reprojection error.
    ms_total: float
        Wall-clock time, 0 unless timings are recorded.
    lmst: str | None
        Local solar time of the query lighting in time-of-day runs.
    """

    __slots__ = (
        "altitude_bin",
        "altitude_m",
        "error_m",
        "inliers",
        "lmst",
        "map_lighting",
        "matcher",
        "ms_total",
        "query_id",
        "query_lighting",
        "reproj_px",
        "status",
    )

    def __init__(
        self,
        query_id: str,
        altitude_m: float,
        altitude_bin: str,
        map_lighting: Lighting,
        query_lighting: Lighting,
        matcher: str,
        status: PoseStatus,
        error_m: float,
        *,
        inliers: int = 0,
        reproj_px: float | None = None,
        ms_total: float = 0.0,
        lmst: str | None = None,
    ) -> None:
        self.query_id: str = query_id
        self.altitude_m: float = altitude_m
        self.altitude_bin: str = altitude_bin
        self.map_lighting: Lighting = map_lighting
        self.query_lighting: Lighting = query_lighting
        self.matcher: str = matcher
        self.status: PoseStatus = status
        self.error_m: float = error_m
        self.inliers: int = inliers
        self.reproj_px: float | None = reproj_px
        self.ms_total: float = ms_total
        self.lmst: str | None = lmst

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} query={self.query_id!r} map={self.map_lighting} "
            f"status={self.status.value} err={self.error_m:.3f}m>"
        )

    @property
    def delta_az(self) -> float:
        """float: map minus query azimuth, wrapped to ``(-180, 180]``."""

        d = (self.map_lighting[0] - self.query_lighting[0]) % 360.0
        return d - 360.0 if d > 180.0 else d

    @property
    def delta_el(self) -> float:
        return self.map_lighting[1] - self.query_lighting[1]


class CellSummary:
    """Statistics of one sweep cell: a map lighting, a query lighting and an altitude bin.

    ``altitude_bin`` is ``"all"`` for cells pooled over altitude.
    """

    __slots__ = ("altitude_bin", "at1m", "fail_n", "map_lighting", "median_m", "n", "query_lighting")

    def __init__(
        self,
        map_lighting: Lighting,
        query_lighting: Lighting,
        altitude_bin: str,
        n: int,
        at1m: float,
        median_m: float,
        fail_n: int,
    ) -> None:
        self.map_lighting: Lighting = map_lighting
        self.query_lighting: Lighting = query_lighting
        self.altitude_bin: str = altitude_bin
        self.n: int = n
        self.at1m: float = at1m
        self.median_m: float = median_m
        self.fail_n: int = fail_n

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} map={self.map_lighting} query={self.query_lighting} "
            f"bin={self.altitude_bin} n={self.n} at1m={self.at1m:.3f}>"
        )

    @property
    def delta_az(self) -> float:
        d = (self.map_lighting[0] - self.query_lighting[0]) % 360.0
        return d - 360.0 if d > 180.0 else d

    @property
    def delta_el(self) -> float:
        return self.map_lighting[1] - self.query_lighting[1]


class MetricsReport:
    """Aggregated results of an experiment.

    Attributes
    ----------
    results: list[:class:`QueryResult`]
        Every localization attempt, in sweep order.
    cells: list[:class:`CellSummary`]
        Per-cell statistics, altitude bins first, then the pooled ``"all"`` cell.
    cdf_grid: numpy.ndarray
        Error grid of the CDF samples.
    cdf: dict[tuple[tuple[float, float], tuple[float, float]], numpy.ndarray]
        CDF of each lighting pair, pooled over altitude.
    failures: dict[:class:`PoseStatus`, int]
        Failure counts by status.
    """

    __slots__ = ("cdf", "cdf_grid", "cells", "failures", "results")

    def __init__(
        self,
        results: list[QueryResult],
        cells: list[CellSummary],
        cdf_grid: np.ndarray,
        cdf: dict[tuple[Lighting, Lighting], np.ndarray],
        failures: dict[PoseStatus, int],
    ) -> None:
        self.results: list[QueryResult] = results
        self.cells: list[CellSummary] = cells
        self.cdf_grid: np.ndarray = cdf_grid
        self.cdf: dict[tuple[Lighting, Lighting], np.ndarray] = cdf
        self.failures: dict[PoseStatus, int] = failures

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} attempts={len(self.results)} cells={len(self.cells)}>"

    @property
    def errors(self) -> np.ndarray:
        """numpy.ndarray: per-attempt errors, ``inf`` for failures."""

        return np.array([r.error_m for r in self.results], dtype=np.float64)

    def cell(self, map_lighting: Lighting, query_lighting: Lighting, altitude_bin: str = "all") -> CellSummary:
        for c in self.cells:
            if c.map_lighting == map_lighting and c.query_lighting == query_lighting and c.altitude_bin == altitude_bin:
                return c
        raise KeyError((map_lighting, query_lighting, altitude_bin))

    @property
    def finite_mean_m(self) -> float:
        """float: mean error over successful attempts, ``nan`` without any."""

        e = self.errors
        e = e[np.isfinite(e)]
        return float(e.mean()) if e.size else math.nan
