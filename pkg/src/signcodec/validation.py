"""Validation helpers for arrays crossing the public API.

Array layout conventions used throughout the package:

* image planes are ``(height, width)`` float arrays with samples in [0, 1];
* 4D coefficient structures are ``(8, 8, W/8, H/8)`` indexed
  ``[u, v, m, n]`` (frequency pair first, block coordinates second);
* 3D sub-band structures are channel-first ``(64, H/8, W/8)`` indexed
  ``[z, y, x]``, so slice ``z`` is the sub-band image for band
  ``(u, v) = (z // 8, z % 8)``.
"""

from __future__ import annotations

import numpy as np

BLOCK = 8
NUM_BANDS = 64
NUM_AC_BANDS = 63


def as_image_plane(image) -> np.ndarray:
    """Validate and return an image plane as float64, samples in [0, 1]."""
    plane = np.asarray(image, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError(f"image plane must be 2D, got shape {plane.shape}")
    height, width = plane.shape
    if height == 0 or width == 0:
        raise ValueError("image plane must be non-empty")
    if height % BLOCK or width % BLOCK:
        raise ValueError(
            f"image dimensions must be multiples of {BLOCK}, got {width}x{height}"
        )
    if not np.isfinite(plane).all():
        raise ValueError("image plane contains non-finite samples")
    lo, hi = plane.min(), plane.max()
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"image samples must lie in [0, 1], found range [{lo}, {hi}]")
    return plane


def as_quant_table(table) -> np.ndarray:
    """Validate an 8x8 table of integer step sizes in [1, 255]."""
    steps = np.asarray(table)
    if steps.shape != (BLOCK, BLOCK):
        raise ValueError(f"quantization table must be 8x8, got shape {steps.shape}")
    if not np.issubdtype(steps.dtype, np.integer):
        if not np.equal(np.mod(steps, 1), 0).all():
            raise ValueError("quantization table entries must be integers")
    steps = steps.astype(np.int64)
    if steps.min() < 1 or steps.max() > 255:
        raise ValueError("quantization table entries must lie in [1, 255]")
    return steps


def _as_integer_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.array_equal(arr, rounded):
            raise ValueError(f"{name} must hold integer values")
        arr = rounded
    return arr.astype(np.int32)


def as_coeff_grid(levels) -> np.ndarray:
    """Validate a 4D grid of signed quantized levels, shape (8, 8, W/8, H/8)."""
    grid = _as_integer_array(levels, "coefficient grid")
    if grid.ndim != 4 or grid.shape[:2] != (BLOCK, BLOCK):
        raise ValueError(f"coefficient grid must be (8, 8, W/8, H/8), got {grid.shape}")
    if grid.shape[2] == 0 or grid.shape[3] == 0:
        raise ValueError("coefficient grid must contain at least one block")
    return grid


def as_amp_grid(amps) -> np.ndarray:
    grid = as_coeff_grid(amps)
    if grid.min() < 0:
        raise ValueError("amplitude grid must be non-negative")
    return grid


def as_sign_grid(signs) -> np.ndarray:
    grid = np.asarray(signs)
    if grid.ndim != 4 or grid.shape[:2] != (BLOCK, BLOCK):
        raise ValueError(f"sign grid must be (8, 8, W/8, H/8), got {grid.shape}")
    if not np.isin(grid, (-1, 1)).all():
        raise ValueError("sign grid entries must be +1 or -1")
    return grid.astype(np.int8)


def as_amp_tensor(amps) -> np.ndarray:
    """Validate a sub-band amplitude tensor, shape (64, H/8, W/8)."""
    tensor = _as_integer_array(amps, "amplitude tensor")
    if tensor.ndim != 3 or tensor.shape[0] != NUM_BANDS:
        raise ValueError(f"amplitude tensor must be (64, H/8, W/8), got {tensor.shape}")
    if tensor.min() < 0:
        raise ValueError("amplitude tensor must be non-negative")
    return tensor


def as_sign_tensor(signs) -> np.ndarray:
    """Validate a sub-band sign tensor, shape (64, H/8, W/8), values +/-1."""
    tensor = np.asarray(signs)
    if tensor.ndim != 3 or tensor.shape[0] != NUM_BANDS:
        raise ValueError(f"sign tensor must be (64, H/8, W/8), got {tensor.shape}")
    if not np.isin(tensor, (-1, 1)).all():
        raise ValueError("sign tensor entries must be +1 or -1")
    return tensor.astype(np.int8)


def as_sign_plane(signs, shape: tuple[int, int], name: str = "sign plane") -> np.ndarray:
    plane = np.asarray(signs)
    if plane.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {plane.shape}")
    if not np.isin(plane, (-1, 1)).all():
        raise ValueError(f"{name} entries must be +1 or -1")
    return plane.astype(np.int8)


def require_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")
