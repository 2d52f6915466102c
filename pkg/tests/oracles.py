"""Independent brute-force reference implementations used only by tests.

Everything here is deliberately written the slow, obvious way (explicit
loops, scalar arithmetic) and shares no code with the package.
"""

import math

import numpy as np


def dct2_basis_sum(block):
    """O(N^4) orthonormal 2D DCT by direct basis summation."""
    n = 8
    out = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            su = math.sqrt(1.0 / n) if u == 0 else math.sqrt(2.0 / n)
            sv = math.sqrt(1.0 / n) if v == 0 else math.sqrt(2.0 / n)
            acc = 0.0
            for i in range(n):
                for j in range(n):
                    acc += (
                        block[i][j]
                        * math.cos((2 * i + 1) * u * math.pi / (2 * n))
                        * math.cos((2 * j + 1) * v * math.pi / (2 * n))
                    )
            out[u, v] = su * sv * acc
    return out


def idct2_basis_sum(coeffs):
    """O(N^4) inverse of :func:`dct2_basis_sum`."""
    n = 8
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for u in range(n):
                for v in range(n):
                    su = math.sqrt(1.0 / n) if u == 0 else math.sqrt(2.0 / n)
                    sv = math.sqrt(1.0 / n) if v == 0 else math.sqrt(2.0 / n)
                    acc += (
                        su
                        * sv
                        * coeffs[u][v]
                        * math.cos((2 * i + 1) * u * math.pi / (2 * n))
                        * math.cos((2 * j + 1) * v * math.pi / (2 * n))
                    )
            out[i, j] = acc
    return out


def cosine_basis_image(u, v):
    """Closed-form (u, v) DCT basis image."""
    n = 8
    su = math.sqrt(1.0 / n) if u == 0 else math.sqrt(2.0 / n)
    sv = math.sqrt(1.0 / n) if v == 0 else math.sqrt(2.0 / n)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = (
                su
                * sv
                * math.cos((2 * i + 1) * u * math.pi / (2 * n))
                * math.cos((2 * j + 1) * v * math.pi / (2 * n))
            )
    return out


def ijg_scaled_table(base, qf):
    """Reference IJG quality scaling of a quantization table."""
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf
    out = np.zeros((8, 8), dtype=np.int64)
    for i in range(8):
        for j in range(8):
            value = (int(base[i][j]) * scale + 50) // 100
            out[i, j] = min(255, max(1, value))
    return out


def quantize_levels_scalar(coeffs, table):
    """Per-coefficient divide and round-half-away-from-zero.

    Steps live on the 8-bit pixel scale while coefficients come from
    unit-range samples, hence the 255 factor.
    """
    out = np.zeros((8, 8), dtype=np.int64)
    for i in range(8):
        for j in range(8):
            ratio = coeffs[i][j] * 255.0 / table[i][j]
            level = math.floor(abs(ratio) + 0.5)
            out[i, j] = level if ratio >= 0 else -level
    return out


def conv2d_loops(x, kernels, bias):
    """Zero-padded 3x3 convolution by six nested loops; no activation."""
    c_out, c_in, kh, kw = kernels.shape
    _, height, width = x.shape
    out = np.zeros((c_out, height, width))
    for o in range(c_out):
        for y in range(height):
            for xx in range(width):
                acc = float(bias[o])
                for c in range(c_in):
                    for ky in range(kh):
                        for kx in range(kw):
                            yy = y + ky - 1
                            xs = xx + kx - 1
                            if 0 <= yy < height and 0 <= xs < width:
                                acc += float(kernels[o, c, ky, kx]) * float(x[c, yy, xs])
                out[o, y, xx] = acc
    return out


def masked_bce_scalar(probs, signs, amps, eps=1e-12):
    """Element-wise masked binary cross-entropy over AC bands."""
    total = 0.0
    bands, height, width = probs.shape
    for z in range(bands):
        for y in range(height):
            for x in range(width):
                if amps[z + 1, y, x] <= 0:
                    continue
                b = 1.0 if signs[z + 1, y, x] == 1 else 0.0
                p = float(probs[z, y, x])
                total += -(b * math.log(max(p, eps)) + (1 - b) * math.log(max(1 - p, eps)))
    return total / amps.size


def adam_trace_scalar(value, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Hand-computed Adam updates on one scalar parameter."""
    m = 0.0
    v = 0.0
    values = []
    for t, g in enumerate(grads, 1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        value -= lr * m_hat / (math.sqrt(v_hat) + eps)
        values.append(value)
    return values
