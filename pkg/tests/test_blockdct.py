import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signcodec import (
    BASE_LUMINANCE_TABLE,
    blockwise_forward,
    blockwise_inverse,
    dct8_forward,
    dct8_inverse,
    merge,
    quant_table_from_qf,
    split,
)
from signcodec.blockdct import DCT_MATRIX, SAMPLE_SCALE

import oracles


def test_dct_matrix_is_orthonormal():
    assert np.allclose(DCT_MATRIX @ DCT_MATRIX.T, np.eye(8), atol=1e-14)


def test_constant_block_has_dc_only():
    block = np.full((8, 8), 0.37)
    coeffs = dct8_forward(block)
    assert coeffs[0, 0] == pytest.approx(8 * 0.37, abs=1e-12)
    coeffs[0, 0] = 0.0
    assert np.abs(coeffs).max() < 1e-12


def test_zero_block_maps_to_zero():
    assert np.abs(dct8_forward(np.zeros((8, 8)))).max() == 0.0


def test_forward_matches_basis_summation_oracle():
    rng = np.random.default_rng(42)
    for _ in range(5):
        block = rng.standard_normal((8, 8))
        assert np.abs(dct8_forward(block) - oracles.dct2_basis_sum(block)).max() < 1e-12


def test_inverse_matches_basis_summation_oracle():
    rng = np.random.default_rng(43)
    coeffs = rng.standard_normal((8, 8))
    assert np.abs(dct8_inverse(coeffs) - oracles.idct2_basis_sum(coeffs)).max() < 1e-12


def test_round_trip_identity():
    rng = np.random.default_rng(7)
    for _ in range(100):
        block = rng.random((8, 8))
        assert np.abs(dct8_inverse(dct8_forward(block)) - block).max() < 1e-10


def test_parseval_energy_preserved():
    rng = np.random.default_rng(8)
    for _ in range(50):
        block = rng.standard_normal((8, 8))
        energy = np.sum(block * block)
        coeff_energy = np.sum(dct8_forward(block) ** 2)
        assert abs(energy - coeff_energy) < 1e-10 * max(energy, 1.0)


def test_dc_only_inverse_is_constant():
    coeffs = np.zeros((8, 8))
    coeffs[0, 0] = 8 * 0.25
    block = dct8_inverse(coeffs)
    assert np.abs(block - 0.25).max() < 1e-12


def test_basis_vector_inverse_is_cosine_product():
    for u, v in [(0, 0), (1, 2), (7, 7), (3, 0)]:
        coeffs = np.zeros((8, 8))
        coeffs[u, v] = 1.0
        assert np.abs(dct8_inverse(coeffs) - oracles.cosine_basis_image(u, v)).max() < 1e-12


def test_block_shape_is_enforced():
    with pytest.raises(ValueError):
        dct8_forward(np.zeros((8, 7)))
    with pytest.raises(ValueError):
        dct8_inverse(np.zeros((4, 4)))


# --- quantization tables ------------------------------------------------------


def test_qf50_returns_base_table():
    assert np.array_equal(quant_table_from_qf(50), BASE_LUMINANCE_TABLE)


def test_qf100_clamps_to_unit_steps():
    assert np.array_equal(quant_table_from_qf(100), np.ones((8, 8), dtype=np.int64))


def test_qf75_dc_entry():
    # base 16 scaled by 50%: floor((16*50 + 50)/100) = 8
    assert quant_table_from_qf(75)[0, 0] == 8


@pytest.mark.parametrize("qf", [1, 10, 15, 30, 45, 50, 60, 75, 90, 99, 100])
def test_tables_match_scaling_oracle(qf):
    expected = oracles.ijg_scaled_table(BASE_LUMINANCE_TABLE, qf)
    assert np.array_equal(quant_table_from_qf(qf), expected)


def test_tables_monotone_in_qf():
    tables = [quant_table_from_qf(qf) for qf in range(1, 101)]
    for coarser, finer in zip(tables, tables[1:]):
        assert (coarser >= finer).all()


@pytest.mark.parametrize("qf", [0, 101, -5, 1000])
def test_qf_out_of_range_rejected(qf):
    with pytest.raises(ValueError):
        quant_table_from_qf(qf)


def test_qf_must_be_integer():
    with pytest.raises(ValueError):
        quant_table_from_qf(75.0)


# --- block-wise transform -----------------------------------------------------


def test_flat_image_gives_dc_only_levels():
    # 0.53 keeps the scaled DC coefficient (4.24 * 255 / 8 = 135.15) away
    # from a rounding tie, which floating arithmetic cannot hit reliably
    table = quant_table_from_qf(75)
    grid = blockwise_forward(np.full((16, 24), 0.53), table)
    expected_dc = np.floor(8 * 0.53 * SAMPLE_SCALE / table[0, 0] + 0.5)
    assert (grid[0, 0] == expected_dc).all()
    grid[0, 0] = 0
    assert np.count_nonzero(grid) == 0


def test_zero_image_gives_zero_grid():
    grid = blockwise_forward(np.zeros((8, 8)), quant_table_from_qf(75))
    assert np.count_nonzero(grid) == 0


def test_levels_match_scalar_quantization_oracle():
    rng = np.random.default_rng(5)
    image = rng.random((8, 8))
    table = quant_table_from_qf(90)
    grid = blockwise_forward(image, table)
    expected = oracles.quantize_levels_scalar(oracles.dct2_basis_sum(image), table)
    assert np.array_equal(grid[:, :, 0, 0], expected)


def test_grid_layout_indexes_u_v_m_n():
    image = np.zeros((16, 16))
    image[8:, 8:] = 0.5  # block (m=1, n=1) carries the only content
    grid = blockwise_forward(image, quant_table_from_qf(75))
    assert grid[0, 0, 1, 1] != 0
    assert grid[0, 0, 0, 0] == 0 and grid[0, 0, 1, 0] == 0 and grid[0, 0, 0, 1] == 0


def test_inverse_of_flat_image_levels():
    table = quant_table_from_qf(75)
    plane = np.full((16, 16), 0.5)
    recon = blockwise_inverse(blockwise_forward(plane, table), table)
    assert np.abs(recon - 0.5).max() < table[0, 0] / SAMPLE_SCALE / 2


def test_inverse_of_zero_grid_is_black():
    recon = blockwise_inverse(np.zeros((8, 8, 2, 2), dtype=np.int32), quant_table_from_qf(75))
    assert np.abs(recon).max() == 0.0


def test_quantization_error_bounded_by_half_step():
    rng = np.random.default_rng(6)
    image = np.clip(0.5 + 0.1 * rng.standard_normal((32, 32)), 0, 1)
    table = quant_table_from_qf(75)
    grid = blockwise_forward(image, table)
    recon = blockwise_inverse(grid, table)
    # compare in the coefficient domain, steps on the 8-bit scale
    for m in range(4):
        for n in range(4):
            orig = dct8_forward(image[8 * n : 8 * n + 8, 8 * m : 8 * m + 8])
            back = dct8_forward(recon[8 * n : 8 * n + 8, 8 * m : 8 * m + 8])
            err = np.abs(back - orig) * SAMPLE_SCALE
            assert (err <= table / 2 + 1e-9).all()


def test_image_validation_rejects_bad_planes():
    table = quant_table_from_qf(75)
    with pytest.raises(ValueError):
        blockwise_forward(np.zeros((10, 16)), table)  # not a multiple of 8
    with pytest.raises(ValueError):
        blockwise_forward(np.full((8, 8), 1.5), table)  # out of range
    with pytest.raises(ValueError):
        blockwise_forward(np.zeros((8, 8, 3)), table)  # not 2D


# --- split / merge -------------------------------------------------------------


def test_split_negative_level():
    grid = np.full((8, 8, 1, 1), -3, dtype=np.int32)
    amps, signs = split(grid)
    assert (amps == 3).all() and (signs == -1).all()


def test_split_zero_gets_canonical_plus_sign():
    amps, signs = split(np.zeros((8, 8, 1, 1), dtype=np.int32))
    assert (amps == 0).all() and (signs == 1).all()


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 2), st.integers(1, 4), st.integers(1, 4))
def test_merge_of_split_is_identity(seed, nx, ny):
    rng = np.random.default_rng(seed)
    grid = rng.integers(-1000, 1000, size=(8, 8, nx, ny)).astype(np.int32)
    amps, signs = split(grid)
    assert np.array_equal(merge(amps, signs), grid)


def test_merge_rejects_shape_mismatch():
    amps = np.zeros((8, 8, 2, 2), dtype=np.int32)
    signs = np.ones((8, 8, 2, 3), dtype=np.int8)
    with pytest.raises(ValueError):
        merge(amps, signs)


def test_merge_rejects_non_sign_values():
    amps = np.ones((8, 8, 1, 1), dtype=np.int32)
    with pytest.raises(ValueError):
        merge(amps, np.zeros((8, 8, 1, 1), dtype=np.int8))
