from __future__ import annotations

from enum import Enum

__all__ = (
    "AttentionMode",
    "CameraKind",
    "OverlapReference",
    "PoseStatus",
    "TextureEncoding",
)


class CameraKind(Enum):
    ORTHO = "ortho"
    PERSPECTIVE = "perspective"


class AttentionMode(Enum):
    SOFTMAX = "softmax"
    LINEAR = "linear"


class PoseStatus(Enum):
    """Outcome of a localization attempt.

    ``ERROR`` is only produced by the experiment runner when a module raised
    for a query; the localization functions themselves never return it.
    """

    OK = "ok"
    DEGENERATE = "degenerate"
    INSUFFICIENT_MATCHES = "insufficient-matches"
    ERROR = "error"

    @property
    def failed(self) -> bool:
        return self is not PoseStatus.OK


class OverlapReference(Enum):
    """Which rectangle's area an overlap fraction is taken relative to."""

    QUERY = "query"
    WINDOW = "window"


class TextureEncoding(Enum):
    PGM8 = "pgm"
    RAW16 = "raw16"
