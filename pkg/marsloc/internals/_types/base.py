from typing import Literal, TypedDict

CameraKindLiteral = Literal["ortho", "perspective"]
AttentionModeLiteral = Literal["softmax", "linear"]
PoseStatusLiteral = Literal["ok", "degenerate", "insufficient-matches", "error"]
OverlapReferenceLiteral = Literal["query", "window"]


class SunAnglesPayload(TypedDict):
    az: float
    el: float


class PosePayload(TypedDict):
    R: list[float]  # row-major 3x3, world to camera
    t: list[float]  # camera position in the world frame
