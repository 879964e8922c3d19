"""Render settings and rendered gray/depth rasters."""

from __future__ import annotations

from typing import TYPE_CHECKING, Self

import numpy as np

from ..constants import DEFAULT_EXPOSURE, DEPTH_NODATA
from ..enums import CameraKind
from ..errors import InvalidParameterError, ShapeMismatchError
from .camera import OrthoIntrinsics, PerspectiveIntrinsics, Pose
from .sun import SunConfig

if TYPE_CHECKING:
    from ..internals._types.camera import RenderSidecarPayload


__all__ = ("RenderSettings", "RenderedImage")


class RenderSettings:
    """Image size, exposure and shadow sampling for one render.

    Attributes
    ----------
    width: int | None
        Image width; ``None`` takes it from the intrinsics.
    height: int | None
        Image height; ``None`` takes it from the intrinsics.
    exposure: float
        Scale from radiance to the ``[0, 1]`` gray range.
    shadow_samples: int | None
        Shadow rays per pixel; ``None`` uses the sun's sample count.
    seed: int
        Seed of the per-pixel shadow sampling streams.
    """

    __slots__ = ("exposure", "height", "seed", "shadow_samples", "width")

    def __init__(
        self,
        *,
        width: int | None = None,
        height: int | None = None,
        exposure: float = DEFAULT_EXPOSURE,
        shadow_samples: int | None = None,
        seed: int = 0,
    ) -> None:
        if (width is not None and width <= 0) or (height is not None and height <= 0):
            raise InvalidParameterError(f"image size must be positive, got {width}x{height}")
        if not exposure > 0:
            raise InvalidParameterError(f"exposure must be positive, got {exposure}")
        if shadow_samples is not None and shadow_samples < 1:
            raise InvalidParameterError(f"at least one shadow sample is required, got {shadow_samples}")
        self.width: int | None = width
        self.height: int | None = height
        self.exposure: float = float(exposure)
        self.shadow_samples: int | None = shadow_samples
        self.seed: int = int(seed)

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} exposure={self.exposure:.6g} samples={self.shadow_samples} seed={self.seed}>"

    def resolve_size(self, intrinsics: OrthoIntrinsics | PerspectiveIntrinsics) -> tuple[int, int]:
        """Return ``(width, height)``, checking any explicit size against `intrinsics`."""

        width = intrinsics.width if self.width is None else self.width
        height = intrinsics.height if self.height is None else self.height
        if (width, height) != (intrinsics.width, intrinsics.height):
            raise ShapeMismatchError(
                f"render size {width}x{height} differs from intrinsics {intrinsics.width}x{intrinsics.height}"
            )
        return width, height

    def samples_for(self, sun: SunConfig) -> int:
        return sun.samples if self.shadow_samples is None else self.shadow_samples


class RenderedImage:
    """Aligned gray and depth rasters with their provenance.

    Depth is the hit's component along the camera viewing direction; pixels
    whose ray missed the terrain hold gray 0 and :attr:`depth_nodata`.

    Attributes
    ----------
    gray: numpy.ndarray
        ``(H, W)`` ``uint8`` raster.
    depth: numpy.ndarray
        ``(H, W)`` ``float32`` raster in meters.
    kind: :class:`CameraKind`
        Projection used.
    intrinsics: :class:`OrthoIntrinsics` | :class:`PerspectiveIntrinsics`
        Camera intrinsics.
    pose: :class:`Pose`
        Camera pose.
    sun: :class:`SunConfig`
        Lighting.
    exposure: float
        Exposure used.
    shadow_samples: int
        Shadow rays per pixel used.
    seed: int
        Shadow sampling seed used.
    depth_nodata: float
        Marker of pixels without a surface hit.
    """

    __slots__ = (
        "depth",
        "depth_nodata",
        "exposure",
        "gray",
        "intrinsics",
        "kind",
        "pose",
        "seed",
        "shadow_samples",
        "sun",
    )

    def __init__(
        self,
        gray: np.ndarray,
        depth: np.ndarray,
        kind: CameraKind,
        intrinsics: OrthoIntrinsics | PerspectiveIntrinsics,
        pose: Pose,
        sun: SunConfig,
        *,
        exposure: float = DEFAULT_EXPOSURE,
        shadow_samples: int = 1,
        seed: int = 0,
        depth_nodata: float = DEPTH_NODATA,
    ) -> None:
        if gray.shape != depth.shape or gray.ndim != 2:
            raise ShapeMismatchError(f"gray {gray.shape} and depth {depth.shape} must be equal 2-D shapes")
        if gray.shape != (intrinsics.height, intrinsics.width):
            raise ShapeMismatchError(f"raster shape {gray.shape} disagrees with {intrinsics}")
        self.gray: np.ndarray = np.asarray(gray, dtype=np.uint8)
        self.depth: np.ndarray = np.asarray(depth, dtype=np.float32)
        self.kind: CameraKind = kind
        self.intrinsics: OrthoIntrinsics | PerspectiveIntrinsics = intrinsics
        self.pose: Pose = pose
        self.sun: SunConfig = sun
        self.exposure: float = exposure
        self.shadow_samples: int = shadow_samples
        self.seed: int = seed
        self.depth_nodata: float = depth_nodata

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} kind={self.kind.value} size={self.width}x{self.height} "
            f"sun=({self.sun.azimuth_deg:g}, {self.sun.elevation_deg:g})>"
        )

    @property
    def width(self) -> int:
        return self.gray.shape[1]

    @property
    def height(self) -> int:
        return self.gray.shape[0]

    @property
    def valid(self) -> np.ndarray:
        """numpy.ndarray: mask of pixels with a surface hit."""

        return self.depth != self.depth_nodata

    def to_sidecar(self) -> RenderSidecarPayload:
        return {
            "kind": self.kind.value,
            "width": self.width,
            "height": self.height,
            "intrinsics": self.intrinsics.to_payload(),
            "pose": self.pose.to_payload(),
            "sun": self.sun.to_payload(),
            "exposure": self.exposure,
            "shadow_samples": self.shadow_samples,
            "seed": self.seed,
            "depth_nodata": self.depth_nodata,
        }

    @classmethod
    def from_sidecar(cls, data: RenderSidecarPayload, gray: np.ndarray, depth: np.ndarray) -> Self:
        kind = CameraKind(data["kind"])
        intrinsics = (
            OrthoIntrinsics.from_payload(data["intrinsics"])  # type: ignore[arg-type]
            if kind is CameraKind.ORTHO
            else PerspectiveIntrinsics.from_payload(data["intrinsics"])  # type: ignore[arg-type]
        )
        return cls(
            gray,
            depth,
            kind,
            intrinsics,
            Pose.from_payload(data["pose"]),
            SunConfig.from_payload(data["sun"]),
            exposure=data["exposure"],
            shadow_samples=data["shadow_samples"],
            seed=data["seed"],
            depth_nodata=data["depth_nodata"],
        )
