from typing import TypedDict

from .base import PoseStatusLiteral


class StageTimingsPayload(TypedDict):
    tile: float
    match: float
    filter: float
    backproject: float
    pnp: float
    total: float


class DiagnosticsPayload(TypedDict):
    query_id: str
    status: PoseStatusLiteral
    window_count: int
    raw_matches: int
    filtered_matches: int
    correspondences: int
    dropped_nodata: int
    inliers: int
    ransac_iterations: int
    mean_reproj_px: float | None
    residuals_px: list[float]
    area_clipped: bool
    timings_ms: StageTimingsPayload
