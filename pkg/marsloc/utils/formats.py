"""Readers and writers for the raster formats used on disk.

* PGM: binary ``P5``; 8-bit, or 16-bit big-endian when ``maxval > 255``.
* PFM: single channel ``Pf``; written little-endian (scale ``-1.0``) with rows
  stored bottom-up as the format requires. Arrays in memory are top-down.
* Raw grids: little-endian samples, row-major, with a JSON sidecar header at
  ``<file>.json``.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, cast
import json
from pathlib import Path
import re

import numpy as np

from ..errors import MalformedHeaderError, ShapeMismatchError, SizeMismatchError, UnsupportedError

if TYPE_CHECKING:
    from ..internals._types.terrain import GridHeaderPayload

__all__ = (
    "read_grid_header",
    "read_pfm",
    "read_pgm",
    "read_raw",
    "sidecar_path",
    "write_grid_header",
    "write_pfm",
    "write_pgm",
    "write_raw",
)

_PNM_TOKEN = re.compile(rb"(?:\s*(?:#[^\n]*\n)?)*\s*(\S+)")


def sidecar_path(path: Path) -> Path:
    """Return ``<path>.json``."""

    return path.with_name(path.name + ".json")


def _read_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    for _ in range(count):
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeaderError("truncated PNM header")
        tokens.append(m.group(1))
        pos = m.end()
    # exactly one whitespace byte separates the header from the payload
    return tokens, pos + 1


def write_pgm(path: Path, image: np.ndarray) -> None:
    """
    Write a binary PGM.

    Parameters
    ----------
    path: Path
        Output path.
    image: numpy.ndarray
        2-D ``uint8`` or ``uint16`` array.
    """
    if image.ndim != 2:
        raise ShapeMismatchError(f"PGM needs a 2-D array, got shape {image.shape}")
    if image.dtype == np.uint8:
        maxval, payload = 255, image
    elif image.dtype == np.uint16:
        maxval, payload = 65535, image.astype(">u2")
    else:
        raise UnsupportedError(f"PGM cannot store dtype {image.dtype}")
    height, width = image.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        f.write(np.ascontiguousarray(payload).tobytes())


def read_pgm(path: Path) -> tuple[np.ndarray, int]:
    """
    Read a binary PGM.

    Parameters
    ----------
    path: Path
        File to read.

    Returns
    -------
    tuple[numpy.ndarray, int]
        The image (``uint8`` or ``uint16``) and its ``maxval``.
    """
    data = path.read_bytes()
    tokens, offset = _read_tokens(data, 4)
    if tokens[0] != b"P5":
        raise MalformedHeaderError(f"{path.name}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeaderError(f"{path.name}: non-numeric PGM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise MalformedHeaderError(f"{path.name}: invalid PGM header {width}x{height} maxval {maxval}")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    expected = width * height * dtype.itemsize
    if len(data) - offset != expected:
        raise SizeMismatchError(f"{path.name}: expected {expected} payload bytes, found {len(data) - offset}")
    image = np.frombuffer(data, dtype=dtype, offset=offset).reshape(height, width)
    return image.astype(np.uint8 if maxval < 256 else np.uint16), maxval


def write_pfm(path: Path, image: np.ndarray) -> None:
    """Write a single-channel little-endian PFM; rows go to disk bottom-up."""

    if image.ndim != 2:
        raise ShapeMismatchError(f"PFM needs a 2-D array, got shape {image.shape}")
    height, width = image.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(f"Pf\n{width} {height}\n-1.0\n".encode("ascii"))
        f.write(np.ascontiguousarray(np.flipud(image), dtype="<f4").tobytes())


def read_pfm(path: Path) -> np.ndarray:
    """Read a single-channel PFM into a top-down ``float32`` array."""

    data = path.read_bytes()
    tokens, offset = _read_tokens(data, 4)
    if tokens[0] == b"PF":
        raise UnsupportedError(f"{path.name}: three-channel PFM is not supported")
    if tokens[0] != b"Pf":
        raise MalformedHeaderError(f"{path.name}: not a PFM (magic {tokens[0]!r})")
    try:
        width, height = int(tokens[1]), int(tokens[2])
        scale = float(tokens[3])
    except ValueError:
        raise MalformedHeaderError(f"{path.name}: non-numeric PFM header") from None
    if width <= 0 or height <= 0 or scale == 0:
        raise MalformedHeaderError(f"{path.name}: invalid PFM header")
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    expected = width * height * 4
    if len(data) - offset != expected:
        raise SizeMismatchError(f"{path.name}: expected {expected} payload bytes, found {len(data) - offset}")
    image = np.frombuffer(data, dtype=dtype, offset=offset).reshape(height, width)
    return np.flipud(image).astype(np.float32)


def write_grid_header(path: Path, header: GridHeaderPayload) -> None:
    target = sidecar_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as f:
        json.dump(header, f, indent=2)
        f.write("\n")


def read_grid_header(path: Path) -> GridHeaderPayload:
    """
    Read and validate the sidecar header of a grid file.

    Parameters
    ----------
    path: Path
        The grid file (not the sidecar itself).

    Returns
    -------
    GridHeaderPayload
        The validated header.
    """
    target = sidecar_path(path)
    try:
        with target.open("r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise MalformedHeaderError(f"missing sidecar header {target.name}") from None
    except json.JSONDecodeError as exc:
        raise MalformedHeaderError(f"{target.name}: {exc}") from None

    if not isinstance(raw, dict):
        raise MalformedHeaderError(f"{target.name}: header must be a JSON object")
    missing = {"rows", "cols", "post_spacing_m"} - raw.keys()
    if missing:
        raise MalformedHeaderError(f"{target.name}: missing fields {sorted(missing)}")
    rows, cols, spacing = raw["rows"], raw["cols"], raw["post_spacing_m"]
    if not isinstance(rows, int) or not isinstance(cols, int) or rows < 2 or cols < 2:
        raise MalformedHeaderError(f"{target.name}: rows and cols must be integers >= 2")
    if not isinstance(spacing, (int, float)) or spacing <= 0:
        raise MalformedHeaderError(f"{target.name}: post_spacing_m must be positive")
    if raw.get("origin", "center") != "center":
        raise MalformedHeaderError(f"{target.name}: only origin 'center' is supported")
    nodata = raw.get("nodata")
    if nodata is not None and not isinstance(nodata, (int, float)):
        raise MalformedHeaderError(f"{target.name}: nodata must be a number or null")
    return cast("GridHeaderPayload", raw)


def write_raw(path: Path, grid: np.ndarray, header: GridHeaderPayload) -> None:
    """Write a little-endian row-major grid with its sidecar header."""

    dtype = np.dtype(header.get("dtype", "<f4"))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(np.ascontiguousarray(grid, dtype=dtype).tobytes())
    write_grid_header(path, header)


def read_raw(path: Path, header: GridHeaderPayload) -> np.ndarray:
    """Read a raw grid described by `header`."""

    dtype = np.dtype(header.get("dtype", "<f4"))
    data = path.read_bytes()
    expected = header["rows"] * header["cols"]
    if len(data) % dtype.itemsize or len(data) // dtype.itemsize != expected:
        raise SizeMismatchError(
            f"{path.name}: header declares {header['rows']}x{header['cols']} samples, "
            f"payload holds {len(data) / dtype.itemsize:g}"
        )
    return np.frombuffer(data, dtype=dtype).reshape(header["rows"], header["cols"]).copy()
