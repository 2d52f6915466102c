import numpy as np
import pytest

from signcodec import FormatError, read_pgm, write_pgm
from signcodec.pgm import encode_pgm, parse_pgm


def test_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    plane = rng.integers(0, 256, size=(24, 16)).astype(np.float64) / 255.0
    path = tmp_path / "img.pgm"
    write_pgm(path, plane)
    assert np.array_equal(read_pgm(path), plane)


def test_bytes_map_to_unit_range():
    data = b"P5\n4 2\n255\n" + bytes([0, 51, 102, 153, 204, 255, 10, 20])
    plane = parse_pgm(data)
    assert plane.shape == (2, 4)
    assert plane[0, 0] == 0.0
    assert plane[1, 1] == 255 / 255
    assert plane[0, 1] == 51 / 255


def test_header_comments_and_whitespace_tolerated():
    data = b"P5 # format\n# a comment line\n  4\t1 # width/height\n255\n" + bytes(4)
    plane = parse_pgm(data)
    assert plane.shape == (1, 4)


def test_written_header_is_canonical():
    plane = np.zeros((2, 3))
    data = encode_pgm(plane)
    assert data.startswith(b"P5\n3 2\n255\n")
    assert len(data) == len(b"P5\n3 2\n255\n") + 6


def test_bad_magic_rejected():
    with pytest.raises(FormatError):
        parse_pgm(b"P6\n2 2\n255\n" + bytes(12))


def test_truncated_raster_rejected():
    with pytest.raises(FormatError):
        parse_pgm(b"P5\n4 4\n255\n" + bytes(15))


def test_unsupported_maxval_rejected():
    with pytest.raises(FormatError):
        parse_pgm(b"P5\n2 2\n65535\n" + bytes(8))


def test_non_integer_header_rejected():
    with pytest.raises(FormatError):
        parse_pgm(b"P5\nx 2\n255\n" + bytes(4))


def test_write_rejects_out_of_range_samples(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "bad.pgm", np.full((2, 2), 1.2))


def test_writer_rounds_half_up():
    plane = np.array([[0.5 / 255, 1.49 / 255, 1.5 / 255, 0.0]])
    data = encode_pgm(plane)
    assert list(data[-4:]) == [1, 1, 2, 0]
