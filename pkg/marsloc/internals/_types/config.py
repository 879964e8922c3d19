from typing import Literal, TypedDict

from .base import OverlapReferenceLiteral


class TerrainSourcePayload(TypedDict, total=False):
    kind: Literal["synthetic", "file"]
    seed: int
    size_m: float
    post_spacing_m: float
    amplitude_m: float
    hurst: float
    crater_count: int
    crater_radius_m: list[float]
    texture_factor: int
    dtm_path: str
    texture_path: str


class MapConfigPayload(TypedDict, total=False):
    lightings: list[list[float]]  # explicit (az, el) pairs, overrides the grid
    azimuths_deg: list[float]
    elevations_deg: list[float]
    altitude_m: float
    pixel_size_m: float
    sun_diameter_deg: float
    shadow_samples: int


class QueryConfigPayload(TypedDict, total=False):
    count: int
    altitude_range_m: list[float]
    altitude_bins_m: list[list[float]]
    lightings: list[list[float]]
    lighting_table: str  # CSV of lmst, az_deg, el_deg rows
    focal_mm: float
    sensor_width_mm: float
    width: int
    height: int
    sun_diameter_deg: float
    shadow_samples: int


class DatasetConfigPayload(TypedDict, total=False):
    window_width: int
    window_height: int
    window_overlap: float
    min_overlap: float
    overlap_reference: OverlapReferenceLiteral


class RansacParamsPayload(TypedDict, total=False):
    threshold_px: float
    max_iters: int
    confidence: float


class LocalizeConfigPayload(TypedDict, total=False):
    matcher: str
    search_side_m: float
    window_width: int
    window_height: int
    window_overlap: float
    top_k: int
    conf_threshold: float | None
    use_altitude_prior: bool
    ransac: RansacParamsPayload


class ExperimentConfigPayload(TypedDict, total=False):
    seed: int
    threads: int
    out: str
    record_timing: bool
    terrain: TerrainSourcePayload
    map: MapConfigPayload
    queries: QueryConfigPayload
    dataset: DatasetConfigPayload
    localize: LocalizeConfigPayload
