"""8x8 orthonormal block DCT, quality-factor quantization, amplitude/sign split.

The transform is the orthonormal 2D type-II DCT (DC basis scaled by
1/sqrt(2)), so Parseval holds exactly and the inverse is the transpose.
Quantization divides each coefficient by a step from an IJG-style
quality-factor-scaled luminance table and rounds half away from zero.
Table entries are integers on the 8-bit pixel scale the standard tables
were designed for; image samples live in [0, 1], so the effective step
for a coefficient is ``q / 255`` and levels match what block-wise JPEG
quantization of the 8-bit image would produce.
"""

from __future__ import annotations

import numpy as np

from .validation import (
    BLOCK,
    as_coeff_grid,
    as_image_plane,
    as_quant_table,
    as_sign_grid,
    require_same_shape,
)

# Standard JPEG luminance quantization table (quality 50 baseline).
BASE_LUMINANCE_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)


def _dct_matrix() -> np.ndarray:
    k = np.arange(BLOCK).reshape(-1, 1)
    n = np.arange(BLOCK).reshape(1, -1)
    mat = np.cos((2 * n + 1) * k * np.pi / (2 * BLOCK)) * np.sqrt(2.0 / BLOCK)
    mat[0] /= np.sqrt(2.0)
    return mat


DCT_MATRIX = _dct_matrix()

# Quantization tables are specified on the 8-bit pixel scale; samples are
# normalized to [0, 1], so steps act as q / SAMPLE_SCALE.
SAMPLE_SCALE = 255.0


def _as_block(block) -> np.ndarray:
    arr = np.asarray(block, dtype=np.float64)
    if arr.shape != (BLOCK, BLOCK):
        raise ValueError(f"expected an 8x8 block, got shape {arr.shape}")
    return arr


def dct8_forward(block) -> np.ndarray:
    """Orthonormal 2D DCT of one 8x8 block; output indexed [u, v]."""
    arr = _as_block(block)
    return DCT_MATRIX @ arr @ DCT_MATRIX.T


def dct8_inverse(coeffs) -> np.ndarray:
    """Exact inverse of :func:`dct8_forward` up to floating round-off."""
    arr = _as_block(coeffs)
    return DCT_MATRIX.T @ arr @ DCT_MATRIX


def quant_table_from_qf(qf: int) -> np.ndarray:
    """Scale the base luminance table by quality factor, IJG convention.

    scale = 5000/qf for qf < 50 else 200 - 2*qf; each entry becomes
    floor((base*scale + 50)/100) clamped to [1, 255]. qf=50 returns the
    base table unchanged.
    """
    if not isinstance(qf, (int, np.integer)) or isinstance(qf, bool):
        raise ValueError(f"quality factor must be an integer, got {qf!r}")
    if not 1 <= qf <= 100:
        raise ValueError(f"quality factor must lie in [1, 100], got {qf}")
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf
    scaled = (BASE_LUMINANCE_TABLE * scale + 50) // 100
    return np.clip(scaled, 1, 255).astype(np.int64)


def _round_half_away_from_zero(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def _image_blocks(plane: np.ndarray) -> np.ndarray:
    height, width = plane.shape
    nb_y, nb_x = height // BLOCK, width // BLOCK
    # (n, m, i, j): block row, block column, pixel row, pixel column
    return plane.reshape(nb_y, BLOCK, nb_x, BLOCK).transpose(0, 2, 1, 3)


def blockwise_forward(image, table) -> np.ndarray:
    """Quantized block DCT of an image plane.

    Returns a level grid of shape (8, 8, W/8, H/8) indexed [u, v, m, n];
    each level is round-half-away-from-zero of the coefficient on the
    8-bit pixel scale divided by its table step.
    """
    plane = as_image_plane(image)
    steps = as_quant_table(table)
    blocks = _image_blocks(plane)
    coeffs = DCT_MATRIX @ blocks @ DCT_MATRIX.T  # (n, m, u, v)
    levels = _round_half_away_from_zero(coeffs * SAMPLE_SCALE / steps)
    return levels.transpose(2, 3, 1, 0).astype(np.int32)


def blockwise_inverse(grid, table) -> np.ndarray:
    """Dequantize and invert a level grid back to an image plane in [0, 1]."""
    levels = as_coeff_grid(grid)
    steps = as_quant_table(table)
    dequant = (
        (levels * steps[:, :, None, None]).transpose(3, 2, 0, 1).astype(np.float64)
        / SAMPLE_SCALE
    )
    blocks = DCT_MATRIX.T @ dequant @ DCT_MATRIX  # (n, m, i, j)
    nb_y, nb_x = blocks.shape[:2]
    plane = blocks.transpose(0, 2, 1, 3).reshape(nb_y * BLOCK, nb_x * BLOCK)
    return np.clip(plane, 0.0, 1.0)


def split(grid) -> tuple[np.ndarray, np.ndarray]:
    """Separate levels into (amplitudes, signs); zero levels get sign +1."""
    levels = as_coeff_grid(grid)
    amps = np.abs(levels)
    signs = np.where(levels >= 0, 1, -1).astype(np.int8)
    return amps, signs


def merge(amps, signs) -> np.ndarray:
    """Recombine amplitudes and signs into a signed level grid."""
    amp_grid = as_coeff_grid(amps)
    sign_grid = as_sign_grid(signs)
    require_same_shape(amp_grid, sign_grid, "merge")
    if amp_grid.min() < 0:
        raise ValueError("amplitude grid must be non-negative")
    return (amp_grid * sign_grid.astype(np.int32)).astype(np.int32)
