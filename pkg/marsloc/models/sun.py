from __future__ import annotations

from typing import TYPE_CHECKING, Self
import math

import numpy as np

from ..constants import SUN_ANGULAR_DIAMETER_DEG, SUN_IRRADIANCE_W_M2, SUN_SHADOW_SAMPLES
from ..errors import InvalidParameterError

if TYPE_CHECKING:
    from ..internals._types.base import SunAnglesPayload
    from ..internals._types.camera import SunConfigPayload


__all__ = ("SunConfig",)


class SunConfig:
    """Sun position and disk used for shading and shadows.

    Attributes
    ----------
    azimuth_deg: float
        Counter-clockwise angle from the East (+X) axis.
    elevation_deg: float
        Angle above the horizon, in ``[0, 90]``.
    irradiance: float
        Irradiance in W/m².
    diameter_deg: float
        Angular diameter of the sun disk; 0 gives hard shadows.
    samples: int
        Shadow rays per shading point.
    """

    __slots__ = ("azimuth_deg", "diameter_deg", "elevation_deg", "irradiance", "samples")

    def __init__(
        self,
        azimuth_deg: float,
        elevation_deg: float,
        *,
        irradiance: float = SUN_IRRADIANCE_W_M2,
        diameter_deg: float = SUN_ANGULAR_DIAMETER_DEG,
        samples: int = SUN_SHADOW_SAMPLES,
    ) -> None:
        if not 0.0 <= elevation_deg <= 90.0:
            raise InvalidParameterError(f"sun elevation must be in [0, 90] degrees, got {elevation_deg}")
        if irradiance <= 0:
            raise InvalidParameterError(f"irradiance must be positive, got {irradiance}")
        if diameter_deg < 0:
            raise InvalidParameterError(f"angular diameter must be non-negative, got {diameter_deg}")
        if samples < 1:
            raise InvalidParameterError(f"at least one shadow sample is required, got {samples}")
        self.azimuth_deg: float = float(azimuth_deg) % 360.0
        self.elevation_deg: float = float(elevation_deg)
        self.irradiance: float = float(irradiance)
        self.diameter_deg: float = float(diameter_deg)
        self.samples: int = int(samples)

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} az={self.azimuth_deg:g} el={self.elevation_deg:g}>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SunConfig):
            return NotImplemented
        return self.to_payload() == other.to_payload()

    def __hash__(self) -> int:
        return hash(tuple(self.to_payload().values()))

    @property
    def angles(self) -> tuple[float, float]:
        """tuple[float, float]: ``(azimuth, elevation)`` in degrees."""

        return (self.azimuth_deg, self.elevation_deg)

    @property
    def direction(self) -> np.ndarray:
        """numpy.ndarray: unit vector pointing toward the sun."""

        az = math.radians(self.azimuth_deg)
        el = math.radians(self.elevation_deg)
        return np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])

    def with_angles(self, azimuth_deg: float, elevation_deg: float) -> SunConfig:
        return SunConfig(
            azimuth_deg,
            elevation_deg,
            irradiance=self.irradiance,
            diameter_deg=self.diameter_deg,
            samples=self.samples,
        )

    def to_angles_payload(self) -> SunAnglesPayload:
        return {"az": self.azimuth_deg, "el": self.elevation_deg}

    def to_payload(self) -> SunConfigPayload:
        return {
            "azimuth_deg": self.azimuth_deg,
            "elevation_deg": self.elevation_deg,
            "irradiance": self.irradiance,
            "diameter_deg": self.diameter_deg,
            "samples": self.samples,
        }

    @classmethod
    def from_payload(cls, data: SunConfigPayload) -> Self:
        return cls(
            data.get("azimuth_deg", 0.0),
            data.get("elevation_deg", 90.0),
            irradiance=data.get("irradiance", SUN_IRRADIANCE_W_M2),
            diameter_deg=data.get("diameter_deg", SUN_ANGULAR_DIAMETER_DEG),
            samples=data.get("samples", SUN_SHADOW_SAMPLES),
        )
