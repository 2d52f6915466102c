import numpy as np
import pytest


def smooth_plane(shape, seed, texture=0.02):
    """Piecewise-smooth synthetic image with block-scale structure.

    Coarse seeded noise upsampled bilinearly plus mild texture: plenty of
    significant low-frequency coefficients after quantization, unlike
    white noise whose AC energy quantizes to zero.
    """
    height, width = shape
    rng = np.random.default_rng(seed)
    coarse = rng.random((height // 8 + 2, width // 8 + 2))
    ys = np.linspace(0, coarse.shape[0] - 1.001, height)
    xs = np.linspace(0, coarse.shape[1] - 1.001, width)
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    plane = (
        coarse[y0][:, x0] * (1 - fy) * (1 - fx)
        + coarse[y0 + 1][:, x0] * fy * (1 - fx)
        + coarse[y0][:, x0 + 1] * (1 - fy) * fx
        + coarse[y0 + 1][:, x0 + 1] * fy * fx
    )
    plane += texture * rng.standard_normal((height, width))
    return np.clip(0.1 + 0.8 * plane, 0.0, 1.0)


def tensor_pair(shape, seed, qf=75):
    """(amplitude, sign) sub-band tensors of a smooth synthetic image."""
    from signcodec import blockwise_forward, pack, quant_table_from_qf, split

    plane = smooth_plane(shape, seed)
    grid = blockwise_forward(plane, quant_table_from_qf(qf))
    amps, signs = split(grid)
    return pack(amps), pack(signs)


@pytest.fixture(scope="session")
def natural_planes():
    """Real photographs as [0, 1] planes with dimensions multiple of 8."""
    import skimage.color
    import skimage.data

    def gray(img):
        if img.ndim == 3:
            img = skimage.color.rgb2gray(img)
        else:
            img = img.astype(np.float64) / 255.0
        height = img.shape[0] - img.shape[0] % 8
        width = img.shape[1] - img.shape[1] % 8
        img = img[:height, :width]
        # snap to the 8-bit grid a PGM round trip would impose
        return np.floor(np.clip(img, 0, 1) * 255 + 0.5) / 255.0

    return {
        "camera": gray(skimage.data.camera()),
        "astronaut": gray(skimage.data.astronaut()),
        "coins": gray(skimage.data.coins()),
        "clock": gray(skimage.data.clock()),
        "coffee": gray(skimage.data.coffee()),
        "page": gray(skimage.data.page()),
        "cat": gray(skimage.data.cat()),
        "moon": gray(skimage.data.moon()),
    }
