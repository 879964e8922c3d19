from typing import NotRequired, TypedDict

from .base import CameraKindLiteral, PosePayload


class PerspectiveIntrinsicsPayload(TypedDict):
    focal_mm: float
    sensor_width_mm: float
    width: int
    height: int
    shift_x: NotRequired[float]
    shift_y: NotRequired[float]
    aspect: NotRequired[float]


class OrthoIntrinsicsPayload(TypedDict):
    scale_m: float
    width: int
    height: int
    cx: NotRequired[float]
    cy: NotRequired[float]


class SunConfigPayload(TypedDict, total=False):
    azimuth_deg: float
    elevation_deg: float
    irradiance: float
    diameter_deg: float
    samples: int


class RenderSidecarPayload(TypedDict):
    kind: CameraKindLiteral
    width: int
    height: int
    intrinsics: PerspectiveIntrinsicsPayload | OrthoIntrinsicsPayload
    pose: PosePayload
    sun: SunConfigPayload
    exposure: float
    shadow_samples: int
    seed: int
    depth_nodata: float
