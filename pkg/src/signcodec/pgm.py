"""Binary PGM (P5) reading and writing, 8-bit, maxval 255.

Samples map to [0, 1] by division by 255 on read and by
round-half-up multiplication on write, so byte -> plane -> byte
round trips exactly.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import FormatError

MAXVAL = 255


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments, then collect one token
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("PGM header ended unexpectedly")
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def parse_pgm(data: bytes) -> np.ndarray:
    """Parse P5 bytes into an image plane of float64 samples in [0, 1]."""
    magic, pos = _read_token(data, 0)
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (P5) stream, magic {magic!r}")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _read_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise FormatError(f"PGM {name} is not an integer: {token!r}") from None
        fields.append(value)
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FormatError(f"PGM dimensions must be positive, got {width}x{height}")
    if maxval != MAXVAL:
        raise FormatError(f"only 8-bit PGM with maxval {MAXVAL} is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height
    raster = data[pos : pos + expected]
    if len(raster) < expected:
        raise FormatError(
            f"PGM raster truncated: expected {expected} bytes, found {len(raster)}"
        )
    samples = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return samples.astype(np.float64) / MAXVAL


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    return parse_pgm(Path(path).read_bytes())


def encode_pgm(plane: np.ndarray) -> bytes:
    """Serialize an image plane (values in [0, 1]) as P5 bytes."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"image plane must be 2D, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image samples must lie in [0, 1]")
    height, width = arr.shape
    raster = np.floor(arr * MAXVAL + 0.5).astype(np.uint8)
    header = f"P5\n{width} {height}\n{MAXVAL}\n".encode("ascii")
    return header + raster.tobytes()


def write_pgm(path: str | os.PathLike, plane: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(plane))
