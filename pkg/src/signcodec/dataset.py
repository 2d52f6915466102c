"""Dataset ingestion: PGM directories, seeded crops, tensor pairs."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .blockdct import blockwise_forward, quant_table_from_qf, split
from .errors import FormatError
from .pgm import read_pgm
from .subband import pack


def list_pgm_files(directory) -> list[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise ValueError(f"not a directory: {root}")
    return sorted(p for p in root.iterdir() if p.suffix.lower() == ".pgm")


def load_planes(paths, min_size: int | None = None):
    """Read image planes, skipping unreadable or undersized files.

    Returns (planes, skipped) where skipped is a list of (path, reason).
    """
    planes = []
    skipped = []
    for path in paths:
        try:
            plane = read_pgm(path)
        except (FormatError, OSError) as exc:
            skipped.append((Path(path), str(exc)))
            continue
        if min_size is not None and min(plane.shape) < min_size:
            skipped.append(
                (Path(path), f"smaller than crop size {min_size}: {plane.shape}")
            )
            continue
        planes.append(plane)
    return planes, skipped


def sample_crops(planes, crop_size: int, count: int, rng: np.random.Generator):
    """Deterministic pseudo-random crops: image index, then y/x offsets."""
    if crop_size < 8 or crop_size % 8:
        raise ValueError(f"crop size must be a positive multiple of 8, got {crop_size}")
    if not planes:
        raise ValueError("no usable images to crop from")
    crops = []
    for _ in range(count):
        plane = planes[int(rng.integers(len(planes)))]
        height, width = plane.shape
        y0 = int(rng.integers(height - crop_size + 1))
        x0 = int(rng.integers(width - crop_size + 1))
        crops.append(plane[y0 : y0 + crop_size, x0 : x0 + crop_size])
    return crops


def plane_to_pair(plane, qf: int):
    """Quantize one plane and return its (amplitude, sign) sub-band tensors."""
    grid = blockwise_forward(plane, quant_table_from_qf(qf))
    amp_grid, sign_grid = split(grid)
    return pack(amp_grid), pack(sign_grid)


def build_training_set(directory, crop_size: int, count: int, qf: int, seed: int):
    """Crop a PGM directory into (amplitude, sign) training pairs.

    Returns (pairs, skipped); raises if no usable image remains.
    """
    planes, skipped = load_planes(list_pgm_files(directory), min_size=crop_size)
    if not planes:
        raise ValueError(f"no usable training images in {directory}")
    rng = np.random.default_rng(seed)
    crops = sample_crops(planes, crop_size, count, rng)
    return [plane_to_pair(c, qf) for c in crops], skipped
