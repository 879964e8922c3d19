"""Camera intrinsics and poses."""

from __future__ import annotations

from typing import TYPE_CHECKING, Self

import numpy as np
import numpy.typing as npt

from ..errors import InvalidParameterError, InvalidPoseError

if TYPE_CHECKING:
    from ..internals._types.base import PosePayload
    from ..internals._types.camera import OrthoIntrinsicsPayload, PerspectiveIntrinsicsPayload


__all__ = ("OrthoIntrinsics", "PerspectiveIntrinsics", "Pose")

_ORTHONORMAL_TOL = 1e-9


class Pose:
    """Rigid camera pose in the East-North-Up world frame.

    Camera-frame coordinates of a world point are ``X_C = R @ (X_W - t)``.

    Attributes
    ----------
    rotation: numpy.ndarray
        ``R_WC``, the 3x3 rotation aligning the world frame to the camera frame.
    translation: numpy.ndarray
        ``t_WC``, the camera position in the world frame (m).
    """

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation: npt.ArrayLike, translation: npt.ArrayLike) -> None:
        rot = np.array(rotation, dtype=np.float64).reshape(3, 3)
        trans = np.array(translation, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(rot)) or not np.all(np.isfinite(trans)):
            raise InvalidPoseError("pose contains non-finite values")
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > _ORTHONORMAL_TOL or abs(np.linalg.det(rot) - 1.0) > _ORTHONORMAL_TOL:
            raise InvalidPoseError("rotation is not orthonormal with determinant +1")
        rot.setflags(write=False)
        trans.setflags(write=False)
        self.rotation: np.ndarray = rot
        self.translation: np.ndarray = trans

    def __repr__(self) -> str:
        x, y, z = self.translation
        return f"<{self.__class__.__name__} t=({x:.3f}, {y:.3f}, {z:.3f})>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.rotation, other.rotation) and np.array_equal(self.translation, other.translation))

    def __hash__(self) -> int:
        return hash((self.rotation.tobytes(), self.translation.tobytes()))

    @property
    def is_nadir(self) -> bool:
        """bool: whether the optical axis points straight down with image x along East."""

        return bool(np.allclose(self.rotation, np.diag([1.0, -1.0, -1.0]), atol=1e-12))

    def world_to_camera(self, points: npt.ArrayLike) -> np.ndarray:
        """Transform ``(..., 3)`` world points to camera-frame coordinates."""

        pts = np.asarray(points, dtype=np.float64)
        return (pts - self.translation) @ self.rotation.T

    def camera_to_world(self, points: npt.ArrayLike) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation + self.translation

    def to_payload(self) -> PosePayload:
        return {"R": self.rotation.ravel().tolist(), "t": self.translation.tolist()}

    @classmethod
    def from_payload(cls, data: PosePayload) -> Self:
        return cls(np.asarray(data["R"], dtype=np.float64).reshape(3, 3), data["t"])


class PerspectiveIntrinsics:
    """Pinhole camera described by physical optics.

    Attributes
    ----------
    focal_mm: float
        Focal length.
    sensor_width_mm: float
        Sensor width.
    width: int
        Image width in pixels.
    height: int
        Image height in pixels.
    shift_x: float
        Horizontal principal point shift in pixels.
    shift_y: float
        Vertical principal point shift in pixels.
    aspect: float
        Pixel aspect ratio, ``fx / fy``.
    """

    __slots__ = ("aspect", "focal_mm", "height", "sensor_width_mm", "shift_x", "shift_y", "width")

    def __init__(
        self,
        focal_mm: float,
        sensor_width_mm: float,
        width: int,
        height: int,
        *,
        shift_x: float = 0.0,
        shift_y: float = 0.0,
        aspect: float = 1.0,
    ) -> None:
        if focal_mm <= 0 or sensor_width_mm <= 0 or width <= 0 or height <= 0 or aspect <= 0:
            raise InvalidParameterError(
                f"optics must be positive (f={focal_mm}, s={sensor_width_mm}, W={width}, H={height}, aspect={aspect})"
            )
        self.focal_mm: float = float(focal_mm)
        self.sensor_width_mm: float = float(sensor_width_mm)
        self.width: int = int(width)
        self.height: int = int(height)
        self.shift_x: float = float(shift_x)
        self.shift_y: float = float(shift_y)
        self.aspect: float = float(aspect)

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} f={self.focal_mm}mm s={self.sensor_width_mm}mm "
            f"size={self.width}x{self.height}>"
        )

    @property
    def fx(self) -> float:
        return self.focal_mm * self.width / self.sensor_width_mm

    @property
    def fy(self) -> float:
        return self.fx / self.aspect

    @property
    def cx(self) -> float:
        return self.width / 2 + self.shift_x

    @property
    def cy(self) -> float:
        return self.height / 2 + self.shift_y

    @property
    def sensor_height_mm(self) -> float:
        return self.sensor_width_mm * self.height / self.width

    def to_payload(self) -> PerspectiveIntrinsicsPayload:
        return {
            "focal_mm": self.focal_mm,
            "sensor_width_mm": self.sensor_width_mm,
            "width": self.width,
            "height": self.height,
            "shift_x": self.shift_x,
            "shift_y": self.shift_y,
            "aspect": self.aspect,
        }

    @classmethod
    def from_payload(cls, data: PerspectiveIntrinsicsPayload) -> Self:
        return cls(
            data["focal_mm"],
            data["sensor_width_mm"],
            data["width"],
            data["height"],
            shift_x=data.get("shift_x", 0.0),
            shift_y=data.get("shift_y", 0.0),
            aspect=data.get("aspect", 1.0),
        )


class OrthoIntrinsics:
    """Orthographic camera covering ``scale_m`` meters of ground across its width.

    Attributes
    ----------
    scale_m: float
        Ground width covered by the image.
    width: int
        Image width in pixels.
    height: int
        Image height in pixels.
    cx: float
        Principal point column, defaults to ``width / 2``.
    cy: float
        Principal point row, defaults to ``height / 2``.
    """

    __slots__ = ("cx", "cy", "height", "scale_m", "width")

    def __init__(
        self,
        scale_m: float,
        width: int,
        height: int,
        *,
        cx: float | None = None,
        cy: float | None = None,
    ) -> None:
        if scale_m <= 0 or width <= 0 or height <= 0:
            raise InvalidParameterError(f"orthographic scale and size must be positive ({scale_m}, {width}x{height})")
        self.scale_m: float = float(scale_m)
        self.width: int = int(width)
        self.height: int = int(height)
        self.cx: float = width / 2 if cx is None else float(cx)
        self.cy: float = height / 2 if cy is None else float(cy)

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} p_map={self.pixel_size:.4f}m size={self.width}x{self.height}>"

    @classmethod
    def from_pixel_size(cls, pixel_size_m: float, width: int, height: int) -> Self:
        """Build intrinsics from a ground resolution instead of a ground width."""

        return cls(pixel_size_m * width, width, height)

    @property
    def pixel_size(self) -> float:
        """float: ``p_map``, ground meters per pixel."""

        return self.scale_m / self.width

    def to_payload(self) -> OrthoIntrinsicsPayload:
        return {"scale_m": self.scale_m, "width": self.width, "height": self.height, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_payload(cls, data: OrthoIntrinsicsPayload) -> Self:
        return cls(data["scale_m"], data["width"], data["height"], cx=data.get("cx"), cy=data.get("cy"))
