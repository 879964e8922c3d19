"""Map-based localization of Mars rotorcraft images against rendered orthographic maps."""

from .attention import *
from .dataset import *
from .enums import *
from .errors import *
from .geometry import *
from .harness import *
from .lighting import *
from .localize import *
from .matchers import *
from .metrics import *
from .models import *
from .render import *
from .terrain import *

__all__ = (
    "DEFAULT_NODATA",
    "DEFAULT_SCALES",
    "NADIR_ROTATION",
    "QUERY_COLUMNS",
    "QUERY_OPTICS",
    "SHADOW_OFFSET_FACTOR",
    "SUMMARY_COLUMNS",
    "AllNodataError",
    "AttentionMode",
    "AttentionWeights",
    "BehindCameraError",
    "CameraKind",
    "CellSummary",
    "Correspondence2D3D",
    "DatasetConfig",
    "EmptyInputError",
    "EmptyTerrainError",
    "ExperimentConfig",
    "ExtentMismatchError",
    "FeatureGrid",
    "FootprintMarginError",
    "GroundRect",
    "InvalidDepthError",
    "InvalidParameterError",
    "InvalidPoseError",
    "LocalizationDiagnostics",
    "LocalizeConfig",
    "MalformedHeaderError",
    "MapConfig",
    "MapWindow",
    "MarslocError",
    "Match",
    "MatchSet",
    "Matcher",
    "MergeGradients",
    "MergeParams",
    "MetricsReport",
    "MissingMapError",
    "NCCMatcher",
    "NodataError",
    "OrthoIntrinsics",
    "OutOfBoundsError",
    "OverlapReference",
    "PerspectiveIntrinsics",
    "PhaseMatcher",
    "PlacementError",
    "Pose",
    "PoseEstimate",
    "PoseStatus",
    "QueryConfig",
    "QueryResult",
    "QuerySpec",
    "QueryTooLargeError",
    "RansacParams",
    "RayHit",
    "RenderSettings",
    "RenderedImage",
    "RenderedQuery",
    "SearchArea",
    "ShapeMismatchError",
    "SizeMismatchError",
    "SunConfig",
    "TerrainAccel",
    "TerrainFormatError",
    "TerrainModel",
    "TerrainSource",
    "TextureEncoding",
    "Triplet",
    "UnknownMatcherError",
    "UnsupportedError",
    "WindowRect",
    "ZeroVarianceError",
    "accuracy_at",
    "available_matchers",
    "azimuth_sweep",
    "backproject_matches",
    "backproject_ortho",
    "brute_force_accel",
    "build_accel",
    "build_triplets",
    "cdf",
    "crop_window",
    "cross_attention",
    "default_map_camera",
    "dlt_pose",
    "elevation_sweep",
    "elu_feature_map",
    "filter_matches",
    "footprint",
    "generate_synthetic_terrain",
    "get_matcher",
    "ground_sample_distance",
    "height_at",
    "init_merge_params",
    "intrinsics_matrix",
    "lighting_grid",
    "load_lighting_table",
    "load_maps",
    "load_merge_params",
    "load_queries",
    "load_rendered",
    "load_rendered_queries",
    "load_terrain",
    "localization_error",
    "localize",
    "localize_queries",
    "make_dataset",
    "map_lightings",
    "map_windows",
    "median_error",
    "merge_features",
    "merge_grad",
    "nadir_pose",
    "ncc_match",
    "normal_at",
    "normalize_depth",
    "normxcorr2_valid",
    "obtain_terrain",
    "overlap_fraction",
    "phase_correlate",
    "place_camera",
    "project_ortho",
    "project_perspective",
    "project_points",
    "query_lightings",
    "ransac_pnp",
    "ray_intersect",
    "read_results",
    "refine_pose",
    "register_matcher",
    "render_maps",
    "render_ortho",
    "render_perspective",
    "render_queries",
    "render_query_set",
    "reprojection_errors",
    "rotation_angle",
    "run_experiment",
    "sample_queries",
    "save_maps",
    "save_merge_params",
    "save_queries",
    "save_rendered",
    "save_rendered_queries",
    "save_terrain",
    "scale_hint",
    "search_area",
    "shade",
    "softmax_weights",
    "solve_p3p",
    "summarize",
    "sun_direction",
    "tile_rects",
    "tile_windows",
    "time_of_day_sweep",
    "unproject_perspective",
    "visibility",
    "window_ground_rect",
    "write_cdf_table",
    "write_reports",
    "write_results",
    "write_terrain",
)
