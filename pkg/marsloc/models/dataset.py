"""Query specifications, map windows and training triplets."""

from __future__ import annotations

from typing import TYPE_CHECKING, Self

import numpy as np

from ..errors import InvalidParameterError
from .camera import PerspectiveIntrinsics, Pose
from .sun import SunConfig

if TYPE_CHECKING:
    from ..internals._types.dataset import ManifestRowPayload, QuerySpecPayload


__all__ = ("GroundRect", "MapWindow", "QuerySpec", "Triplet", "WindowRect")


class QuerySpec:
    """A nadir query observation to render and localize.

    Attributes
    ----------
    id: str
        Stable identifier such as ``"q00042"``.
    x: float
        World x of the camera.
    y: float
        World y of the camera.
    altitude_agl: float
        Height above the terrain below the camera.
    sun: :class:`SunConfig`
        Lighting of the observation.
    intrinsics: :class:`PerspectiveIntrinsics`
        Camera optics.
    pose: :class:`Pose` | None
        Ground-truth pose once the camera has been placed on the terrain.
    """

    __slots__ = ("altitude_agl", "id", "intrinsics", "pose", "sun", "x", "y")

    def __init__(
        self,
        id: str,  # noqa: A002
        x: float,
        y: float,
        altitude_agl: float,
        sun: SunConfig,
        intrinsics: PerspectiveIntrinsics,
        *,
        pose: Pose | None = None,
    ) -> None:
        if not altitude_agl >= 0:
            raise InvalidParameterError(f"altitude above ground must be non-negative, got {altitude_agl}")
        self.id: str = id
        self.x: float = float(x)
        self.y: float = float(y)
        self.altitude_agl: float = float(altitude_agl)
        self.sun: SunConfig = sun
        self.intrinsics: PerspectiveIntrinsics = intrinsics
        self.pose: Pose | None = pose

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} id={self.id!r} x={self.x:.2f} y={self.y:.2f} alt={self.altitude_agl:.2f}>"

    def with_pose(self, pose: Pose) -> QuerySpec:
        return QuerySpec(self.id, self.x, self.y, self.altitude_agl, self.sun, self.intrinsics, pose=pose)

    def with_sun(self, sun: SunConfig) -> QuerySpec:
        return QuerySpec(self.id, self.x, self.y, self.altitude_agl, sun, self.intrinsics, pose=self.pose)

    def to_payload(self) -> QuerySpecPayload:
        return {
            "id": self.id,
            "x": self.x,
            "y": self.y,
            "altitude_agl": self.altitude_agl,
            "sun": self.sun.to_payload(),
            "intrinsics": self.intrinsics.to_payload(),
            "pose": None if self.pose is None else self.pose.to_payload(),
        }

    @classmethod
    def from_payload(cls, data: QuerySpecPayload) -> Self:
        pose = data.get("pose")
        return cls(
            data["id"],
            data["x"],
            data["y"],
            data["altitude_agl"],
            SunConfig.from_payload(data["sun"]),
            PerspectiveIntrinsics.from_payload(data["intrinsics"]),
            pose=None if pose is None else Pose.from_payload(pose),
        )


class GroundRect:
    """Axis-aligned rectangle on the ground, in world meters."""

    __slots__ = ("xmax", "xmin", "ymax", "ymin")

    def __init__(self, xmin: float, xmax: float, ymin: float, ymax: float) -> None:
        if xmax < xmin or ymax < ymin:
            raise InvalidParameterError(f"inverted rectangle x=[{xmin}, {xmax}] y=[{ymin}, {ymax}]")
        self.xmin: float = float(xmin)
        self.xmax: float = float(xmax)
        self.ymin: float = float(ymin)
        self.ymax: float = float(ymax)

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} x=[{self.xmin:.2f}, {self.xmax:.2f}] y=[{self.ymin:.2f}, {self.ymax:.2f}]>"
        )

    @classmethod
    def centered(cls, x: float, y: float, width: float, height: float) -> Self:
        return cls(x - width / 2, x + width / 2, y - height / 2, y + height / 2)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.xmin + self.xmax) / 2, (self.ymin + self.ymax) / 2)

    def intersection_area(self, other: GroundRect) -> float:
        dx = min(self.xmax, other.xmax) - max(self.xmin, other.xmin)
        dy = min(self.ymax, other.ymax) - max(self.ymin, other.ymin)
        return max(0.0, dx) * max(0.0, dy)


class WindowRect:
    """Pixel rectangle inside a parent map: columns ``[u0, u0 + width)``, rows ``[v0, v0 + height)``."""

    __slots__ = ("height", "id", "u0", "v0", "width")

    def __init__(self, id: int, u0: int, v0: int, width: int, height: int) -> None:  # noqa: A002
        if width <= 0 or height <= 0:
            raise InvalidParameterError(f"window size must be positive, got {width}x{height}")
        self.id: int = id
        self.u0: int = u0
        self.v0: int = v0
        self.width: int = width
        self.height: int = height

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} id={self.id} u0={self.u0} v0={self.v0} size={self.width}x{self.height}>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WindowRect):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    @property
    def u1(self) -> int:
        return self.u0 + self.width

    @property
    def v1(self) -> int:
        return self.v0 + self.height

    @property
    def slices(self) -> tuple[slice, slice]:
        return (slice(self.v0, self.v1), slice(self.u0, self.u1))

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.id, self.u0, self.v0, self.width, self.height)


class MapWindow:
    """A crop of a rendered map.

    Attributes
    ----------
    rect: :class:`WindowRect`
        Pixel rectangle in the parent map.
    ground: :class:`GroundRect`
        Ground area covered by the crop.
    gray: numpy.ndarray
        Gray crop.
    depth: numpy.ndarray
        Raw depth crop in meters.
    depth_norm: numpy.ndarray
        Depth divided by the crop's largest valid depth; nodata is kept.
    depth_nodata: float
        Nodata marker of both depth crops.
    """

    __slots__ = ("depth", "depth_nodata", "depth_norm", "gray", "ground", "rect")

    def __init__(
        self,
        rect: WindowRect,
        ground: GroundRect,
        gray: np.ndarray,
        depth: np.ndarray,
        depth_norm: np.ndarray,
        depth_nodata: float,
    ) -> None:
        self.rect: WindowRect = rect
        self.ground: GroundRect = ground
        self.gray: np.ndarray = gray
        self.depth: np.ndarray = depth
        self.depth_norm: np.ndarray = depth_norm
        self.depth_nodata: float = depth_nodata

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} id={self.id} rect={self.rect!r}>"

    @property
    def id(self) -> int:
        return self.rect.id

    @property
    def offset(self) -> tuple[int, int]:
        """tuple[int, int]: ``(u0, v0)`` of the crop in the parent map."""

        return (self.rect.u0, self.rect.v0)


class Triplet:
    """One (query, map window, window depth) training or evaluation sample.

    Attributes
    ----------
    triplet_id: str
        Stable identifier.
    query: :class:`QuerySpec`
        Query with its ground-truth pose.
    window: :class:`WindowRect`
        Window of the map.
    map_sun: :class:`SunConfig`
        Lighting of the map the window was cut from.
    overlap: float
        Ground overlap fraction between the query footprint and the window.
    query_image: str
        Relative path of the query gray image.
    window_gray: str
        Relative path of the window gray crop.
    window_depth_norm: str
        Relative path of the normalized window depth crop.
    """

    __slots__ = ("map_sun", "overlap", "query", "query_image", "triplet_id", "window", "window_depth_norm", "window_gray")

    def __init__(
        self,
        triplet_id: str,
        query: QuerySpec,
        window: WindowRect,
        map_sun: SunConfig,
        overlap: float,
        *,
        query_image: str,
        window_gray: str,
        window_depth_norm: str,
    ) -> None:
        self.triplet_id: str = triplet_id
        self.query: QuerySpec = query
        self.window: WindowRect = window
        self.map_sun: SunConfig = map_sun
        self.overlap: float = overlap
        self.query_image: str = query_image
        self.window_gray: str = window_gray
        self.window_depth_norm: str = window_depth_norm

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} id={self.triplet_id!r} query={self.query.id!r} "
            f"window={self.window.id} overlap={self.overlap:.3f}>"
        )

    @property
    def delta_az(self) -> float:
        """float: map minus query azimuth, wrapped to ``(-180, 180]``."""

        d = (self.map_sun.azimuth_deg - self.query.sun.azimuth_deg) % 360.0
        return d - 360.0 if d > 180.0 else d

    @property
    def delta_el(self) -> float:
        return self.map_sun.elevation_deg - self.query.sun.elevation_deg

    def to_payload(self) -> ManifestRowPayload:
        if self.query.pose is None:
            raise InvalidParameterError(f"query {self.query.id!r} has no ground-truth pose")
        return {
            "triplet_id": self.triplet_id,
            "query_image": self.query_image,
            "window_gray": self.window_gray,
            "window_depth_norm": self.window_depth_norm,
            "overlap": self.overlap,
            "sun_query": self.query.sun.to_angles_payload(),
            "sun_map": self.map_sun.to_angles_payload(),
            "pose_gt": self.query.pose.to_payload(),
            "altitude_agl": self.query.altitude_agl,
        }
