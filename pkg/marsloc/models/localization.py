"""Search areas, 2D-3D correspondences and pose estimates."""

from __future__ import annotations

from typing import TYPE_CHECKING, Self

import numpy as np
import numpy.typing as npt

from ..enums import PoseStatus
from ..errors import InvalidParameterError, ShapeMismatchError

if TYPE_CHECKING:
    from ..internals._types.config import RansacParamsPayload
    from ..internals._types.diagnostics import DiagnosticsPayload, StageTimingsPayload
    from .camera import Pose

__all__ = ("Correspondence2D3D", "LocalizationDiagnostics", "PoseEstimate", "RansacParams", "SearchArea")


class SearchArea:
    """Square ground area around a position prior, expressed in map pixels.

    Attributes
    ----------
    center: tuple[float, float]
        Prior position ``(x, y)`` in meters.
    side_m: float
        Side length in meters.
    u0, v0: int
        Top-left map pixel of the area.
    width, height: int
        Size in map pixels after clipping to the map.
    clipped: bool
        Whether the area was cut by the map border.
    """

    __slots__ = ("center", "clipped", "height", "side_m", "u0", "v0", "width")

    def __init__(
        self,
        center: tuple[float, float],
        side_m: float,
        u0: int,
        v0: int,
        width: int,
        height: int,
        *,
        clipped: bool = False,
    ) -> None:
        self.center: tuple[float, float] = center
        self.side_m: float = side_m
        self.u0: int = u0
        self.v0: int = v0
        self.width: int = width
        self.height: int = height
        self.clipped: bool = clipped

    def __repr__(self) -> str:
        x, y = self.center
        return (
            f"<{self.__class__.__name__} center=({x:.1f}, {y:.1f}) side={self.side_m:g}m "
            f"pixels={self.width}x{self.height}+{self.u0}+{self.v0} clipped={self.clipped}>"
        )

    @property
    def area_m2(self) -> float:
        """float: nominal ground area, ``side_m ** 2``."""

        return self.side_m * self.side_m


class RansacParams:
    """RANSAC-PnP settings.

    Attributes
    ----------
    threshold_px: float
        Inlier reprojection threshold.
    max_iters: int
        Iteration cap.
    confidence: float
        Probability of drawing at least one all-inlier sample, drives early exit.
    """

    __slots__ = ("confidence", "max_iters", "threshold_px")

    def __init__(self, threshold_px: float = 3.0, max_iters: int = 2000, confidence: float = 0.999) -> None:
        if threshold_px <= 0:
            raise InvalidParameterError(f"inlier threshold must be positive, got {threshold_px}")
        if max_iters < 1:
            raise InvalidParameterError(f"at least one RANSAC iteration is required, got {max_iters}")
        if not 0 < confidence < 1:
            raise InvalidParameterError(f"RANSAC confidence must be in (0, 1), got {confidence}")
        self.threshold_px: float = float(threshold_px)
        self.max_iters: int = int(max_iters)
        self.confidence: float = float(confidence)

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} threshold_px={self.threshold_px:g} "
            f"max_iters={self.max_iters} confidence={self.confidence:g}>"
        )

    def to_payload(self) -> RansacParamsPayload:
        return {"threshold_px": self.threshold_px, "max_iters": self.max_iters, "confidence": self.confidence}

    @classmethod
    def from_payload(cls, data: RansacParamsPayload) -> Self:
        return cls(data.get("threshold_px", 3.0), data.get("max_iters", 2000), data.get("confidence", 0.999))


class Correspondence2D3D:
    """Query pixels paired with world points.

    Attributes
    ----------
    query_uv: numpy.ndarray
        ``(n, 2)`` query pixel positions.
    world: numpy.ndarray
        ``(n, 3)`` world points in meters.
    confidence: numpy.ndarray
        ``(n,)`` match confidences.
    """

    __slots__ = ("confidence", "query_uv", "world")

    def __init__(self, query_uv: npt.ArrayLike, world: npt.ArrayLike, confidence: npt.ArrayLike | None = None) -> None:
        q = np.asarray(query_uv, dtype=np.float64).reshape(-1, 2)
        w = np.asarray(world, dtype=np.float64).reshape(-1, 3)
        c = np.ones(len(q)) if confidence is None else np.asarray(confidence, dtype=np.float64).reshape(-1)
        if not len(q) == len(w) == len(c):
            raise ShapeMismatchError(f"correspondence arrays disagree in length ({len(q)}, {len(w)}, {len(c)})")
        self.query_uv: np.ndarray = q
        self.world: np.ndarray = w
        self.confidence: np.ndarray = c

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} n={len(self)}>"

    def __len__(self) -> int:
        return len(self.confidence)

    def subset(self, index: npt.ArrayLike) -> Correspondence2D3D:
        idx = np.asarray(index)
        return Correspondence2D3D(self.query_uv[idx], self.world[idx], self.confidence[idx])


class LocalizationDiagnostics:
    """Counts and stage timings of one localization call."""

    __slots__ = (
        "area_clipped",
        "correspondences",
        "dropped_nodata",
        "filtered_matches",
        "inliers",
        "mean_reproj_px",
        "query_id",
        "ransac_iterations",
        "raw_matches",
        "residuals_px",
        "status",
        "timings_ms",
        "window_count",
    )

    def __init__(self, query_id: str = "") -> None:
        self.query_id: str = query_id
        self.status: PoseStatus = PoseStatus.INSUFFICIENT_MATCHES
        self.window_count: int = 0
        self.raw_matches: int = 0
        self.filtered_matches: int = 0
        self.correspondences: int = 0
        self.dropped_nodata: int = 0
        self.inliers: int = 0
        self.ransac_iterations: int = 0
        self.mean_reproj_px: float | None = None
        self.residuals_px: list[float] = []
        self.area_clipped: bool = False
        self.timings_ms: dict[str, float] = dict.fromkeys(("tile", "match", "filter", "backproject", "pnp", "total"), 0.0)

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} query={self.query_id!r} status={self.status.value} "
            f"windows={self.window_count} raw={self.raw_matches} filtered={self.filtered_matches} inliers={self.inliers}>"
        )

    def to_payload(self) -> DiagnosticsPayload:
        timings: StageTimingsPayload = {
            "tile": self.timings_ms["tile"],
            "match": self.timings_ms["match"],
            "filter": self.timings_ms["filter"],
            "backproject": self.timings_ms["backproject"],
            "pnp": self.timings_ms["pnp"],
            "total": self.timings_ms["total"],
        }
        return {
            "query_id": self.query_id,
            "status": self.status.value,
            "window_count": self.window_count,
            "raw_matches": self.raw_matches,
            "filtered_matches": self.filtered_matches,
            "correspondences": self.correspondences,
            "dropped_nodata": self.dropped_nodata,
            "inliers": self.inliers,
            "ransac_iterations": self.ransac_iterations,
            "mean_reproj_px": self.mean_reproj_px,
            "residuals_px": self.residuals_px,
            "area_clipped": self.area_clipped,
            "timings_ms": timings,
        }


class PoseEstimate:
    """Result of a PnP solve.

    Attributes
    ----------
    pose: :class:`Pose` | None
        Estimated camera pose; ``None`` unless :attr:`status` is ``OK``.
    inliers: numpy.ndarray
        Indices of inlier correspondences.
    residuals_px: numpy.ndarray
        Reprojection errors of the inliers, in :attr:`inliers` order.
    status: :class:`PoseStatus`
        Outcome.
    iterations: int
        RANSAC iterations run.
    diagnostics: :class:`LocalizationDiagnostics` | None
        Pipeline counts, set by :func:`~marsloc.localize.localize`.
    """

    __slots__ = ("diagnostics", "inliers", "iterations", "pose", "residuals_px", "status")

    def __init__(
        self,
        pose: Pose | None,
        status: PoseStatus,
        *,
        inliers: npt.ArrayLike = (),
        residuals_px: npt.ArrayLike = (),
        iterations: int = 0,
    ) -> None:
        self.pose: Pose | None = pose
        self.status: PoseStatus = status
        self.inliers: np.ndarray = np.asarray(inliers, dtype=np.int64).reshape(-1)
        self.residuals_px: np.ndarray = np.asarray(residuals_px, dtype=np.float64).reshape(-1)
        self.iterations: int = iterations
        self.diagnostics: LocalizationDiagnostics | None = None

    def __repr__(self) -> str:
        where = "" if self.pose is None else f" t={tuple(round(float(c), 3) for c in self.pose.translation)}"
        return f"<{self.__class__.__name__} status={self.status.value} inliers={len(self.inliers)}{where}>"

    @classmethod
    def failure(cls, status: PoseStatus, *, iterations: int = 0) -> PoseEstimate:
        return cls(None, status, iterations=iterations)

    @property
    def ok(self) -> bool:
        return self.status is PoseStatus.OK

    @property
    def rotation(self) -> np.ndarray | None:
        return None if self.pose is None else self.pose.rotation

    @property
    def translation(self) -> np.ndarray | None:
        return None if self.pose is None else self.pose.translation

    @property
    def mean_reproj_px(self) -> float | None:
        """float | None: mean inlier reprojection error."""

        if len(self.residuals_px) == 0:
            return None
        return float(self.residuals_px.mean())
