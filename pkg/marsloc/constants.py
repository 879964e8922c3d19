"""Reference values for the rendered scene, the generated datasets and localization."""

from __future__ import annotations

from typing import Final
import math

__all__ = (
    "ALTITUDE_BINS",
    "ALTITUDE_RANGE_M",
    "DEFAULT_EXPOSURE",
    "DEPTH_NODATA",
    "MAP_ALTITUDE_M",
    "MAP_LIGHTING_AZIMUTHS_DEG",
    "MAP_LIGHTING_ELEVATIONS_DEG",
    "MAP_PIXEL_SIZE_M",
    "MIN_TRAINING_OVERLAP",
    "QUERY_FOCAL_MM",
    "QUERY_HEIGHT_PX",
    "QUERY_LIGHTING",
    "QUERY_SENSOR_WIDTH_MM",
    "QUERY_WIDTH_PX",
    "SEARCH_AREA_SIDE_M",
    "SUN_ANGULAR_DIAMETER_DEG",
    "SUN_IRRADIANCE_W_M2",
    "SUN_SHADOW_SAMPLES",
    "TIME_OF_DAY_MAP_LIGHTING",
    "WINDOW_OVERLAP",
    "WINDOW_SIZE_PX",
)

# Orthographic maps
MAP_ALTITUDE_M: Final[float] = 4000.0
MAP_PIXEL_SIZE_M: Final[float] = 0.25
MAP_LIGHTING_AZIMUTHS_DEG: Final[tuple[float, ...]] = (0.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0)
MAP_LIGHTING_ELEVATIONS_DEG: Final[tuple[float, ...]] = (30.0, 60.0, 90.0)

# Query observations
QUERY_FOCAL_MM: Final[float] = 32.0
QUERY_SENSOR_WIDTH_MM: Final[float] = 80.0
QUERY_WIDTH_PX: Final[int] = 640
QUERY_HEIGHT_PX: Final[int] = 480
ALTITUDE_RANGE_M: Final[tuple[float, float]] = (64.0, 200.0)
ALTITUDE_BINS: Final[tuple[tuple[float, float], ...]] = ((64.0, 112.0), (112.0, 155.0), (155.0, 200.0))
QUERY_LIGHTING: Final[tuple[float, float]] = (180.0, 40.0)
MIN_TRAINING_OVERLAP: Final[float] = 0.25

# Map at 15:00 LMST used by the time-of-day experiment
TIME_OF_DAY_MAP_LIGHTING: Final[tuple[float, float]] = (175.1, 39.9)

# Sun
SUN_IRRADIANCE_W_M2: Final[float] = 590.0
SUN_ANGULAR_DIAMETER_DEG: Final[float] = 0.35
SUN_SHADOW_SAMPLES: Final[int] = 16

# albedo 0.5 on flat ground under a 40 degree sun lands on gray 128
DEFAULT_EXPOSURE: Final[float] = math.pi * 128.0 / (255.0 * SUN_IRRADIANCE_W_M2 * 0.5 * math.sin(math.radians(40.0)))

DEPTH_NODATA: Final[float] = -1.0

# Localization
SEARCH_AREA_SIDE_M: Final[float] = 1000.0
WINDOW_SIZE_PX: Final[tuple[int, int]] = (1024, 768)
WINDOW_OVERLAP: Final[float] = 0.10
