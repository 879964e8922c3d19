from typing import TypedDict

from .base import PosePayload, SunAnglesPayload
from .camera import PerspectiveIntrinsicsPayload, SunConfigPayload


class QuerySpecPayload(TypedDict):
    id: str
    x: float
    y: float
    altitude_agl: float
    sun: SunConfigPayload
    intrinsics: PerspectiveIntrinsicsPayload
    pose: PosePayload | None


class ManifestRowPayload(TypedDict):
    triplet_id: str
    query_image: str
    window_gray: str
    window_depth_norm: str
    overlap: float
    sun_query: SunAnglesPayload
    sun_map: SunAnglesPayload
    pose_gt: PosePayload
    altitude_agl: float


class LightingRowPayload(TypedDict):
    lmst: str
    az_deg: float
    el_deg: float
