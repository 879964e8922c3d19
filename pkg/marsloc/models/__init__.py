"""Domain models shared by the marsloc modules.

Every class keeps its state in ``__slots__`` and converts to and from the
JSON payloads described in :mod:`marsloc.internals._types`.
"""

from .camera import *
from .dataset import *
from .experiment import *
from .features import *
from .image import *
from .localization import *
from .matching import *
from .sun import *
from .terrain import *

__all__ = (
    "AttentionWeights",
    "CellSummary",
    "Correspondence2D3D",
    "DatasetConfig",
    "ExperimentConfig",
    "FeatureGrid",
    "GroundRect",
    "LocalizationDiagnostics",
    "LocalizeConfig",
    "MapConfig",
    "MapWindow",
    "Match",
    "MatchSet",
    "MergeGradients",
    "MergeParams",
    "MetricsReport",
    "OrthoIntrinsics",
    "PerspectiveIntrinsics",
    "Pose",
    "PoseEstimate",
    "QueryConfig",
    "QueryResult",
    "QuerySpec",
    "RansacParams",
    "RayHit",
    "RenderSettings",
    "RenderedImage",
    "SearchArea",
    "SunConfig",
    "TerrainAccel",
    "TerrainModel",
    "TerrainSource",
    "Triplet",
    "WindowRect",
)
