"""Convolutional sign predictor over sub-band amplitude tensors.

All layers are 3x3 convolutions with zero padding (spatial size is
preserved), ReLU on hidden layers and sigmoid on the last. The forward
and backward passes are written directly on numpy: windows are gathered
once per layer (im2col) and both passes reduce to matrix products, which
keeps a full-image inference pass fast enough for interactive use.

The sub-band variant maps a (64, H/8, W/8) amplitude tensor to per-band
sign probabilities for the 63 AC bands. The naive variant runs the same
machinery over the single-channel W x H coefficient plane.

Weights serialize to the ``SRW1`` format (see docs/FORMATS.md): magic,
layer count minus one, then per layer the channel pair, kernel values and
biases as little-endian float32.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import subband
from .errors import FormatError
from .validation import NUM_AC_BANDS, NUM_BANDS, as_amp_tensor, as_sign_plane

RELU = "relu"
SIGMOID = "sigmoid"
KERNEL = 3
PAD = KERNEL // 2
LOG_EPS = 1e-12
WEIGHTS_MAGIC = b"SRW1"


@dataclass
class ConvLayer:
    """One 3x3 convolution: kernels (out_ch, in_ch, 3, 3), bias (out_ch,)."""

    kernels: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        if self.kernels.ndim != 4 or self.kernels.shape[2:] != (KERNEL, KERNEL):
            raise ValueError(
                f"kernels must be (out_ch, in_ch, {KERNEL}, {KERNEL}), "
                f"got {self.kernels.shape}"
            )
        if self.bias.shape != (self.kernels.shape[0],):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match "
                f"{self.kernels.shape[0]} output channels"
            )
        if self.activation not in (RELU, SIGMOID):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[1]


@dataclass
class Model:
    """Ordered convolution stack; ``depth`` counts layers minus one."""

    layers: list[ConvLayer]

    def __post_init__(self):
        if len(self.layers) < 2:
            raise ValueError("model needs at least two convolution layers")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_channels != nxt.in_channels:
                raise ValueError(
                    f"channel chain broken: {prev.out_channels} -> {nxt.in_channels}"
                )
        for layer in self.layers[:-1]:
            if layer.activation != RELU:
                raise ValueError("hidden layers must use relu")
        if self.layers[-1].activation != SIGMOID:
            raise ValueError("final layer must use sigmoid")

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels

    @property
    def out_channels(self) -> int:
        return self.layers[-1].out_channels

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].kernels.dtype

    def astype(self, dtype) -> "Model":
        return Model(
            [
                ConvLayer(
                    layer.kernels.astype(dtype),
                    layer.bias.astype(dtype),
                    layer.activation,
                )
                for layer in self.layers
            ]
        )

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.kernels)
            out.append(layer.bias)
        return out


def build_model(
    depth: int,
    in_channels: int = NUM_BANDS,
    out_channels: int = NUM_AC_BANDS,
    hidden: int = 128,
    seed: int = 0,
    rng: np.random.Generator | None = None,
    dtype=np.float32,
) -> Model:
    """Fresh model with fan-in-scaled uniform kernels and zero biases.

    ``depth`` follows the layer numbering: a model of depth I has I+1
    convolutions, in_channels -> hidden (x I-1 hidden-to-hidden) -> out.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if min(in_channels, out_channels, hidden) < 1:
        raise ValueError("channel counts must be positive")
    if rng is None:
        rng = np.random.default_rng(seed)
    layers = []
    for i in range(depth + 1):
        cin = in_channels if i == 0 else hidden
        cout = out_channels if i == depth else hidden
        bound = np.sqrt(6.0 / (cin * KERNEL * KERNEL))
        kernels = (rng.random((cout, cin, KERNEL, KERNEL)) * 2.0 - 1.0) * bound
        layers.append(
            ConvLayer(
                kernels.astype(dtype),
                np.zeros(cout, dtype=dtype),
                SIGMOID if i == depth else RELU,
            )
        )
    return Model(layers)


def build_subband_model(depth: int, hidden: int = 128, seed: int = 0, **kw) -> Model:
    return build_model(depth, NUM_BANDS, NUM_AC_BANDS, hidden, seed=seed, **kw)


def build_naive_model(depth: int, hidden: int = 128, seed: int = 0, **kw) -> Model:
    """Single-channel variant operating on the full-resolution plane."""
    return build_model(depth, 1, 1, hidden, seed=seed, **kw)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    # saturated values are nudged into the open interval of the working
    # precision so downstream contracts can rely on 0 < p < 1
    info = np.finfo(out.dtype)
    return np.clip(out, info.tiny, 1.0 - info.epsneg, out=out)


def _im2col(x: np.ndarray) -> np.ndarray:
    # (B, C, H, W) -> (B, H*W, C*9); the reshape forces one contiguous copy
    b, c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (0, 0), (PAD, PAD), (PAD, PAD)))
    windows = sliding_window_view(padded, (KERNEL, KERNEL), axis=(2, 3))
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(b, h * w, c * KERNEL * KERNEL)


def _col2im(dcols: np.ndarray, b: int, c: int, h: int, w: int) -> np.ndarray:
    dpad = np.zeros((b, c, h + 2 * PAD, w + 2 * PAD), dtype=dcols.dtype)
    taps = dcols.reshape(b, h, w, c, KERNEL, KERNEL)
    for dy in range(KERNEL):
        for dx in range(KERNEL):
            dpad[:, :, dy : dy + h, dx : dx + w] += taps[:, :, :, :, dy, dx].transpose(
                0, 3, 1, 2
            )
    return dpad[:, :, PAD : PAD + h, PAD : PAD + w]


def _apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == RELU:
        return np.maximum(z, 0)
    return _sigmoid(z)


def conv_forward(x, layer: ConvLayer) -> np.ndarray:
    """Zero-padded 3x3 convolution plus activation, spatial size preserved.

    Accepts (C, H, W) or batched (B, C, H, W) input and preserves rank.
    """
    arr = np.asarray(x)
    single = arr.ndim == 3
    if single:
        arr = arr[None]
    if arr.ndim != 4:
        raise ValueError(f"expected (C, H, W) or (B, C, H, W), got {arr.shape}")
    if arr.shape[1] != layer.in_channels:
        raise ValueError(
            f"input has {arr.shape[1]} channels, layer expects {layer.in_channels}"
        )
    out = _conv_gemm(_im2col(arr), layer, arr.shape)
    out = _apply_activation(out, layer.activation)
    return out[0] if single else out


def _conv_gemm(cols: np.ndarray, layer: ConvLayer, shape) -> np.ndarray:
    b, _, h, w = shape
    o = layer.out_channels
    weights = layer.kernels.reshape(o, -1)
    z = cols @ weights.T
    z += layer.bias
    return z.reshape(b, h, w, o).transpose(0, 3, 1, 2)


def _forward(model: Model, x: np.ndarray, keep: bool):
    """Run all layers; optionally keep per-layer columns and activations."""
    cols_list = [] if keep else None
    acts = [] if keep else None
    h = x
    for layer in model.layers:
        cols = _im2col(h)
        h = _apply_activation(_conv_gemm(cols, layer, h.shape), layer.activation)
        if keep:
            cols_list.append(cols)
            acts.append(h)
    return h, cols_list, acts


def model_forward(model: Model, amps) -> np.ndarray:
    """Sign probabilities for an amplitude tensor (or batch of them).

    Input channel count must match the model; the output has the model's
    output channels at the same spatial size, values in (0, 1).
    """
    arr = np.asarray(amps)
    single = arr.ndim == 3
    if single:
        arr = arr[None]
    if arr.ndim != 4:
        raise ValueError(f"expected a 3D tensor or a 4D batch, got shape {arr.shape}")
    if arr.shape[1] != model.in_channels:
        raise ValueError(
            f"input has {arr.shape[1]} channels, model expects {model.in_channels}"
        )
    arr = arr.astype(model.dtype, copy=False)
    probs, _, _ = _forward(model, arr, keep=False)
    return probs[0] if single else probs


def naive_forward(model: Model, plane) -> np.ndarray:
    """Probabilities over a coefficient plane for the single-channel variant."""
    arr = np.asarray(plane)
    if arr.ndim == 2:
        arr = arr[None]
    return model_forward(model, arr)


def _bce_terms(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # log arguments clamped away from zero so saturated outputs never yield inf
    log_p = np.log(np.maximum(probs, LOG_EPS))
    log_q = np.log(np.maximum(1.0 - probs, LOG_EPS))
    return -(targets * log_p + (1.0 - targets) * log_q)


def masked_loss(probs, targets, mask, normalizer: float) -> float:
    """Masked binary cross-entropy, summed then divided by ``normalizer``."""
    terms = np.where(mask, _bce_terms(probs, targets), 0.0)
    return float(terms.sum(dtype=np.float64) / normalizer)


def masked_bce(probs, signs, amps) -> float:
    """Loss of 63-band probabilities against true signs, zero amps masked out.

    Normalized by the pixel count of the originating image (64 * H/8 * W/8),
    the constant used by the training objective.
    """
    prob_arr = np.asarray(probs)
    sign_arr = np.asarray(signs)
    amp_arr = np.asarray(amps)
    if sign_arr.shape != amp_arr.shape or sign_arr.shape[0] != NUM_BANDS:
        raise ValueError("signs and amplitudes must both be (64, H/8, W/8)")
    if prob_arr.shape != (NUM_AC_BANDS,) + sign_arr.shape[1:]:
        raise ValueError(
            f"probabilities must be (63, H/8, W/8) matching the tensors, "
            f"got {prob_arr.shape}"
        )
    targets = (sign_arr[1:] > 0).astype(prob_arr.dtype)
    mask = amp_arr[1:] > 0
    return masked_loss(prob_arr, targets, mask, float(amp_arr.size))


def batch_loss_and_gradients(model: Model, inputs, targets, mask):
    """Mean masked BCE over a batch plus gradients for every parameter.

    ``inputs`` is (B, C, H, W) in the model dtype; ``targets`` holds 0/1
    labels and ``mask`` selects the positions that carry loss. Each
    example is normalized by its own element count (the source pixel
    count) and the batch is averaged.
    """
    b = inputs.shape[0]
    normalizer = float(inputs[0].size) * b
    probs, cols_list, acts = _forward(model, inputs, keep=True)
    loss = masked_loss(probs, targets, mask, normalizer)
    # fused sigmoid + BCE delta at the final pre-activation
    delta = np.where(mask, probs - targets, 0.0).astype(model.dtype) / np.asarray(
        normalizer, dtype=model.dtype
    )
    grads = []
    for i in reversed(range(len(model.layers))):
        layer = model.layers[i]
        bsz, o, h, w = delta.shape
        dflat = delta.transpose(0, 2, 3, 1).reshape(bsz * h * w, o)
        cols = cols_list[i].reshape(bsz * h * w, -1)
        dk = (dflat.T @ cols).reshape(layer.kernels.shape)
        db = dflat.sum(axis=0)
        grads.append((dk, db))
        if i > 0:
            dcols = dflat @ layer.kernels.reshape(o, -1)
            dx = _col2im(dcols.reshape(bsz, h * w, -1), bsz, layer.in_channels, h, w)
            delta = dx * (acts[i - 1] > 0)
    grads.reverse()
    return loss, grads


def model_backward(model: Model, amps, signs):
    """Loss and gradients for one sub-band example.

    ``amps`` doubles as the network input and the significance mask;
    positions whose amplitude is zero contribute nothing to the loss or
    to any gradient.
    """
    amp_arr = as_amp_tensor(amps)
    sign_arr = np.asarray(signs)
    if sign_arr.shape != amp_arr.shape:
        raise ValueError("signs and amplitudes must share a shape")
    inputs = amp_arr.astype(model.dtype)[None]
    targets = (sign_arr[1:] > 0).astype(model.dtype)[None]
    mask = (amp_arr[1:] > 0)[None]
    return batch_loss_and_gradients(model, inputs, targets, mask)


def threshold(probs) -> np.ndarray:
    """Probabilities to signs: +1 where p >= 1/2, else -1."""
    arr = np.asarray(probs)
    return np.where(arr >= 0.5, 1, -1).astype(np.int8)


def predict_ac_signs(model: Model, amps) -> np.ndarray:
    """AC sign predictions (63, H/8, W/8) for either model variant."""
    probs = predict_ac_probabilities(model, amps)
    return threshold(probs)


def predict_ac_probabilities(model: Model, amps) -> np.ndarray:
    """AC sign probabilities in sub-band layout for either model variant.

    The naive variant is evaluated on the coefficient plane and its output
    repacked, so downstream thresholding and metrics are shared.
    """
    amp_arr = as_amp_tensor(amps)
    if model.in_channels == NUM_BANDS:
        return model_forward(model, amp_arr)
    if model.in_channels == 1:
        plane = subband.to_plane(subband.unpack(amp_arr)).astype(model.dtype)
        probs = naive_forward(model, plane)[0]
        packed = subband.pack(subband.from_plane(probs))
        return packed[1:]
    raise ValueError(
        f"model takes {model.in_channels} channels; expected {NUM_BANDS} or 1"
    )


def retrieve_signs(model: Model, amps, dc_signs) -> np.ndarray:
    """Full 64-band sign tensor: DC passthrough plus thresholded predictions."""
    amp_arr = as_amp_tensor(amps)
    dc = as_sign_plane(dc_signs, amp_arr.shape[1:], "DC sign plane")
    out = np.empty_like(amp_arr, dtype=np.int8)
    out[0] = dc
    out[1:] = predict_ac_signs(model, amp_arr)
    return out


# --- weights serialization (SRW1) -------------------------------------------


def serialize_model(model: Model) -> bytes:
    chunks = [WEIGHTS_MAGIC, struct.pack("<I", model.depth)]
    for layer in model.layers:
        chunks.append(struct.pack("<II", layer.in_channels, layer.out_channels))
        chunks.append(layer.kernels.astype("<f4").tobytes())
        chunks.append(layer.bias.astype("<f4").tobytes())
    return b"".join(chunks)


def deserialize_model(data: bytes) -> Model:
    view = memoryview(data)
    if len(view) < 8:
        raise FormatError("weights stream shorter than its header")
    if bytes(view[:4]) != WEIGHTS_MAGIC:
        raise FormatError(f"bad weights magic {bytes(view[:4])!r}")
    (depth,) = struct.unpack_from("<I", view, 4)
    pos = 8
    layers = []
    for index in range(depth + 1):
        if len(view) - pos < 8:
            raise FormatError(f"weights truncated in layer {index} header")
        cin, cout = struct.unpack_from("<II", view, pos)
        pos += 8
        if cin < 1 or cout < 1:
            raise FormatError(f"layer {index} has non-positive channel counts")
        ksize = cout * cin * KERNEL * KERNEL * 4
        if len(view) - pos < ksize + cout * 4:
            raise FormatError(f"weights truncated in layer {index} parameters")
        kernels = (
            np.frombuffer(view, dtype="<f4", count=cout * cin * KERNEL * KERNEL, offset=pos)
            .reshape(cout, cin, KERNEL, KERNEL)
            .copy()
        )
        pos += ksize
        bias = np.frombuffer(view, dtype="<f4", count=cout, offset=pos).copy()
        pos += cout * 4
        layers.append(
            ConvLayer(kernels, bias, SIGMOID if index == depth else RELU)
        )
    if pos != len(view):
        raise FormatError(f"{len(view) - pos} trailing bytes after last layer")
    try:
        return Model(layers)
    except ValueError as exc:
        raise FormatError(f"inconsistent layer dimensions: {exc}") from exc


def save_weights(model: Model, path) -> None:
    Path(path).write_bytes(serialize_model(model))


def load_weights(path) -> Model:
    return deserialize_model(Path(path).read_bytes())


def model_digest(model: Model) -> bytes:
    """SHA-256 of the serialized weights; identifies a model exactly."""
    return hashlib.sha256(serialize_model(model)).digest()
