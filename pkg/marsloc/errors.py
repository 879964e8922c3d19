"""Exception hierarchy shared by every marsloc module.

Localization failures that are part of normal operation (too few matches, a
degenerate PnP problem) are reported through :class:`~marsloc.enums.PoseStatus`
on the returned estimate and are never raised.
"""

from __future__ import annotations

__all__ = (
    "AllNodataError",
    "BehindCameraError",
    "EmptyInputError",
    "EmptyTerrainError",
    "ExtentMismatchError",
    "FootprintMarginError",
    "InvalidDepthError",
    "InvalidParameterError",
    "InvalidPoseError",
    "MalformedHeaderError",
    "MarslocError",
    "MissingMapError",
    "NodataError",
    "OutOfBoundsError",
    "PlacementError",
    "QueryTooLargeError",
    "ShapeMismatchError",
    "SizeMismatchError",
    "TerrainFormatError",
    "UnknownMatcherError",
    "UnsupportedError",
    "ZeroVarianceError",
)


class MarslocError(Exception):
    """Base class for all errors raised by marsloc."""


class InvalidParameterError(MarslocError, ValueError):
    """A numeric or configuration parameter is outside its valid range."""


class InvalidPoseError(MarslocError, ValueError):
    """A rotation matrix is not orthonormal with determinant +1."""


class BehindCameraError(MarslocError):
    """A point projected through a perspective camera lies behind it."""


class InvalidDepthError(MarslocError, ValueError):
    """A depth value is non-positive, non-finite or the nodata marker."""


class OutOfBoundsError(MarslocError, IndexError):
    """A coordinate or pixel rectangle lies outside the grid it indexes."""


class NodataError(MarslocError):
    """An interpolation touched a nodata terrain post."""


class TerrainFormatError(MarslocError):
    """Base class for problems with terrain files on disk."""


class MalformedHeaderError(TerrainFormatError):
    """A grid sidecar header is missing fields or has invalid values."""


class SizeMismatchError(TerrainFormatError):
    """A grid payload length does not match its header."""


class ExtentMismatchError(TerrainFormatError):
    """Texture and DTM extents differ by more than half a post."""


class EmptyTerrainError(MarslocError):
    """A terrain has no intersectable cell."""


class PlacementError(MarslocError):
    """A camera could not be placed because the downward ray missed the terrain."""


class FootprintMarginError(InvalidParameterError):
    """The terrain is too small to keep query footprints inside the map."""


class UnsupportedError(MarslocError, NotImplementedError):
    """The requested combination of inputs is not supported."""


class MissingMapError(MarslocError, KeyError):
    """No rendered map exists for a requested lighting combination."""


class AllNodataError(MarslocError):
    """A depth crop contains no valid depth value."""


class QueryTooLargeError(MarslocError):
    """The rescaled query does not fit in the window at any scale hypothesis."""


class ZeroVarianceError(MarslocError, ValueError):
    """An image passed to a correlator is constant."""


class ShapeMismatchError(MarslocError, ValueError):
    """Two arrays that must share a shape or channel count do not."""


class EmptyInputError(MarslocError, ValueError):
    """A statistic was requested over an empty collection."""


class UnknownMatcherError(MarslocError, KeyError):
    """No matcher is registered under the requested name."""
