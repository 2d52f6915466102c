"""Bijective repacking between block-domain and sub-band-domain layouts.

A 4D grid ``g[u, v, m, n]`` holds the (u, v) coefficient of block (m, n).
Its sub-band tensor ``t[z, y, x]`` collects, in slice ``z = 8u + v``, the
coefficient at frequency (u, v) from every block, with x = m and y = n.
Both directions are pure index permutations and exact inverses.

``to_plane`` / ``from_plane`` provide the alternative raster layout that
keeps every 8x8 coefficient block at its block's position in a full
W x H plane.
"""

from __future__ import annotations

import numpy as np

from .validation import BLOCK, NUM_BANDS


def _check_grid4(grid) -> np.ndarray:
    arr = np.asarray(grid)
    if arr.ndim != 4 or arr.shape[:2] != (BLOCK, BLOCK):
        raise ValueError(f"expected shape (8, 8, W/8, H/8), got {arr.shape}")
    return arr


def _check_tensor3(tensor) -> np.ndarray:
    arr = np.asarray(tensor)
    if arr.ndim != 3 or arr.shape[0] != NUM_BANDS:
        raise ValueError(f"expected shape (64, H/8, W/8), got {arr.shape}")
    return arr


def pack(grid) -> np.ndarray:
    """Repack a 4D grid into its (64, H/8, W/8) sub-band tensor."""
    arr = _check_grid4(grid)
    nb_x, nb_y = arr.shape[2], arr.shape[3]
    return np.ascontiguousarray(arr.reshape(NUM_BANDS, nb_x, nb_y).transpose(0, 2, 1))


def unpack(tensor) -> np.ndarray:
    """Inverse of :func:`pack`: rebuild the 4D grid from a sub-band tensor."""
    arr = _check_tensor3(tensor)
    nb_y, nb_x = arr.shape[1], arr.shape[2]
    return np.ascontiguousarray(
        arr.transpose(0, 2, 1).reshape(BLOCK, BLOCK, nb_x, nb_y)
    )


def subband_slice(tensor, u: int, v: int) -> np.ndarray:
    """The (W/8) x (H/8) sub-band block for frequency pair (u, v).

    Returned indexed [x, y] so that slice(pack(g), u, v)[x, y] == g[u, v, x, y].
    """
    arr = _check_tensor3(tensor)
    if not (0 <= u < BLOCK and 0 <= v < BLOCK):
        raise ValueError(f"frequency indices must lie in [0, 8), got ({u}, {v})")
    return np.ascontiguousarray(arr[BLOCK * u + v].T)


def to_plane(grid) -> np.ndarray:
    """Lay a 4D grid out as a W x H plane, blocks at their raster positions."""
    arr = _check_grid4(grid)
    nb_x, nb_y = arr.shape[2], arr.shape[3]
    # (n, u, m, v) -> rows 8n+u, cols 8m+v
    return np.ascontiguousarray(
        arr.transpose(3, 0, 2, 1).reshape(nb_y * BLOCK, nb_x * BLOCK)
    )


def from_plane(plane) -> np.ndarray:
    """Inverse of :func:`to_plane`."""
    arr = np.asarray(plane)
    if arr.ndim != 2 or arr.shape[0] % BLOCK or arr.shape[1] % BLOCK:
        raise ValueError(
            f"plane dimensions must be multiples of {BLOCK}, got {arr.shape}"
        )
    nb_y, nb_x = arr.shape[0] // BLOCK, arr.shape[1] // BLOCK
    return np.ascontiguousarray(
        arr.reshape(nb_y, BLOCK, nb_x, BLOCK).transpose(1, 3, 2, 0)
    )
