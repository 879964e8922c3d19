"""Frame conventions and camera projection math.

World frame: East-North-Up, meters, origin at the terrain center. Camera frame:
x along the image width to the right, z along the optical axis toward the
scene. A pixel index ``(u, v)`` denotes the pixel center. Angles are degrees
at every public API.

Nadir cameras use ``R_WC = diag(1, -1, -1)``: image columns run East and image
rows run South.
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt
from scipy.spatial.transform import Rotation

from .errors import BehindCameraError, InvalidDepthError, OutOfBoundsError
from .models.camera import OrthoIntrinsics, PerspectiveIntrinsics, Pose

__all__ = (
    "NADIR_ROTATION",
    "backproject_ortho",
    "ground_sample_distance",
    "intrinsics_matrix",
    "nadir_pose",
    "project_ortho",
    "project_perspective",
    "project_points",
    "rotation_angle",
    "unproject_perspective",
)

NADIR_ROTATION = np.diag([1.0, -1.0, -1.0])
NADIR_ROTATION.setflags(write=False)


def intrinsics_matrix(pi: PerspectiveIntrinsics) -> np.ndarray:
    """
    Build the pinhole matrix ``K``.

    Parameters
    ----------
    pi: :class:`PerspectiveIntrinsics`
        Camera optics; validated on construction.

    Returns
    -------
    numpy.ndarray
        ``[[fx, 0, cx], [0, fy, cy], [0, 0, 1]]`` with ``fx = f * W / s``.
    """
    return np.array(
        [
            [pi.fx, 0.0, pi.cx],
            [0.0, pi.fy, pi.cy],
            [0.0, 0.0, 1.0],
        ]
    )


def ground_sample_distance(altitude_m: float, pi: PerspectiveIntrinsics) -> float:
    """Ground size of one pixel at the image center of a nadir camera, ``h * s / (f * W)``."""

    return altitude_m * pi.sensor_width_mm / (pi.focal_mm * pi.width)


def nadir_pose(x: float, y: float, z_world: float) -> Pose:
    """Nadir-pointing pose at world position ``(x, y, z_world)``."""

    return Pose(NADIR_ROTATION, (x, y, z_world))


def project_points(K: np.ndarray, pose: Pose, points: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorized perspective projection without the behind-camera check.

    Parameters
    ----------
    K: numpy.ndarray
        Intrinsics matrix.
    pose: :class:`Pose`
        Camera pose.
    points: numpy.typing.ArrayLike
        ``(..., 3)`` world points.

    Returns
    -------
    tuple[numpy.ndarray, numpy.ndarray]
        ``(..., 2)`` pixel coordinates and ``(...)`` camera-frame depths.
    """
    cam = pose.world_to_camera(points)
    z = cam[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = K[0, 0] * cam[..., 0] / z + K[0, 1] * cam[..., 1] / z + K[0, 2]
        v = K[1, 1] * cam[..., 1] / z + K[1, 2]
    return np.stack([u, v], axis=-1), z


def project_perspective(K: np.ndarray, pose: Pose, X_W: npt.ArrayLike) -> tuple[float, float, float]:
    """
    Project a world point through a pinhole camera.

    Parameters
    ----------
    K: numpy.ndarray
        Intrinsics matrix.
    pose: :class:`Pose`
        Camera pose.
    X_W: numpy.typing.ArrayLike
        World point.

    Returns
    -------
    tuple[float, float, float]
        ``(u, v, Z)`` where ``Z`` is the camera-frame depth.

    Raises
    ------
    BehindCameraError
        The point is not in front of the camera.
    """
    uv, z = project_points(K, pose, np.asarray(X_W, dtype=np.float64).reshape(3))
    if not z > 0:
        raise BehindCameraError(f"point is behind the camera (z={float(z):.6g})")
    return float(uv[0]), float(uv[1]), float(z)


def unproject_perspective(K: np.ndarray, pose: Pose, u: float, v: float, Z: float) -> np.ndarray:
    """World point at camera-frame depth `Z` along the ray through pixel ``(u, v)``."""

    if not Z > 0:
        raise InvalidDepthError(f"depth must be positive, got {Z}")
    ray = np.linalg.solve(K, np.array([u, v, 1.0]))
    return pose.camera_to_world(Z * ray)


def backproject_ortho(
    oi: OrthoIntrinsics,
    map_pose: Pose,
    u_map: npt.ArrayLike,
    v_map: npt.ArrayLike,
    Z: npt.ArrayLike,
) -> np.ndarray:
    """
    Inverse orthographic projection of map pixels with known depth.

    ``X_W = p_map * R_WC^T @ [u - cx, v - cy, Z / p_map] + t_WC``. For nadir
    maps ``R_WC`` is symmetric, so this equals the untransposed form.

    Parameters
    ----------
    oi: :class:`OrthoIntrinsics`
        Map intrinsics.
    map_pose: :class:`Pose`
        Map camera pose.
    u_map, v_map: numpy.typing.ArrayLike
        Pixel coordinates, scalars or arrays of a common shape.
    Z: numpy.typing.ArrayLike
        Depth along the viewing axis.

    Returns
    -------
    numpy.ndarray
        ``(..., 3)`` world points.

    Raises
    ------
    InvalidDepthError
        Some depth is non-positive or non-finite.
    OutOfBoundsError
        Some pixel lies outside the image.
    """
    u = np.asarray(u_map, dtype=np.float64)
    v = np.asarray(v_map, dtype=np.float64)
    z = np.asarray(Z, dtype=np.float64)
    if not np.all(np.isfinite(z) & (z > 0)):
        raise InvalidDepthError("depth must be finite and positive")
    if np.any((u < -0.5) | (u > oi.width - 0.5) | (v < -0.5) | (v > oi.height - 0.5)):
        raise OutOfBoundsError(f"pixel outside the {oi.width}x{oi.height} map")
    p = oi.pixel_size
    local = np.stack(np.broadcast_arrays(p * (u - oi.cx), p * (v - oi.cy), z), axis=-1)
    return map_pose.camera_to_world(local)


def project_ortho(oi: OrthoIntrinsics, map_pose: Pose, X_W: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Forward orthographic projection, the inverse of :func:`backproject_ortho`.

    Returns
    -------
    tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]
        Pixel ``u``, pixel ``v`` and depth ``Z``.
    """
    cam = map_pose.world_to_camera(X_W)
    p = oi.pixel_size
    return cam[..., 0] / p + oi.cx, cam[..., 1] / p + oi.cy, cam[..., 2]


def rotation_angle(R_a: np.ndarray, R_b: np.ndarray) -> float:
    """Angle in radians of the relative rotation ``R_a^T R_b``."""

    return float(Rotation.from_matrix(R_a.T @ R_b).magnitude())
