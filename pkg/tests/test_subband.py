import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signcodec import from_plane, pack, subband_slice, to_plane, unpack


def random_grid(seed, nx, ny):
    return np.random.default_rng(seed).integers(-500, 500, size=(8, 8, nx, ny)).astype(np.int32)


def test_slice_z10_is_band_u1_v2():
    grid = np.zeros((8, 8, 3, 2), dtype=np.int32)
    grid[1, 2] = np.arange(6).reshape(3, 2) + 1
    tensor = pack(grid)
    assert np.array_equal(tensor[10], grid[1, 2].T)
    assert tensor[9].sum() == 0 and tensor[11].sum() == 0


def test_slice_zero_is_dc_band():
    grid = random_grid(0, 4, 5)
    tensor = pack(grid)
    assert np.array_equal(tensor[0], grid[0, 0].T)


def test_band_index_maps_match_everywhere():
    grid = random_grid(1, 3, 4)
    tensor = pack(grid)
    for z in range(64):
        u, v = z // 8, z % 8
        for x in range(3):
            for y in range(4):
                assert tensor[z, y, x] == grid[u, v, x, y]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 2), st.integers(1, 6), st.integers(1, 6))
def test_unpack_of_pack_is_identity(seed, nx, ny):
    grid = random_grid(seed, nx, ny)
    assert np.array_equal(unpack(pack(grid)), grid)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 2), st.integers(1, 6), st.integers(1, 6))
def test_pack_of_unpack_is_identity(seed, nx, ny):
    tensor = np.random.default_rng(seed).integers(-500, 500, size=(64, ny, nx)).astype(np.int32)
    assert np.array_equal(pack(unpack(tensor)), tensor)


def test_pack_is_a_permutation_of_values():
    grid = random_grid(3, 5, 2)
    assert np.array_equal(np.sort(pack(grid), axis=None), np.sort(grid, axis=None))


def test_single_block_packs_to_singleton_slices():
    grid = random_grid(4, 1, 1)
    tensor = pack(grid)
    assert tensor.shape == (64, 1, 1)
    assert np.array_equal(tensor[:, 0, 0], grid.reshape(64))


def test_subband_slice_matches_grid():
    grid = random_grid(5, 4, 3)
    tensor = pack(grid)
    for u, v in [(0, 0), (1, 2), (7, 7)]:
        view = subband_slice(tensor, u, v)
        assert view.shape == (4, 3)
        assert np.array_equal(view, grid[u, v])


def test_subband_slice_rejects_bad_indices():
    tensor = pack(random_grid(6, 2, 2))
    for u, v in [(-1, 0), (8, 0), (0, 8), (3, -2)]:
        with pytest.raises(ValueError):
            subband_slice(tensor, u, v)


def test_unpack_rejects_wrong_band_count():
    with pytest.raises(ValueError):
        unpack(np.zeros((63, 4, 4)))
    with pytest.raises(ValueError):
        pack(np.zeros((8, 7, 2, 2)))


def test_plane_layout_round_trip():
    grid = random_grid(7, 3, 5)
    plane = to_plane(grid)
    assert plane.shape == (40, 24)
    assert np.array_equal(from_plane(plane), grid)


def test_plane_positions():
    grid = random_grid(8, 2, 2)
    plane = to_plane(grid)
    for u, v, m, n in [(0, 0, 0, 0), (3, 5, 1, 0), (7, 7, 1, 1), (2, 0, 0, 1)]:
        assert plane[8 * n + u, 8 * m + v] == grid[u, v, m, n]


def test_from_plane_rejects_non_multiple_of_8():
    with pytest.raises(ValueError):
        from_plane(np.zeros((12, 16)))
