"""Sign-residual image codec and its self-contained container format.

The encoder quantizes an image, splits coefficients into amplitudes and
signs, predicts the AC signs from the amplitudes, and stores only the
XOR residual between true and predicted signs, entropy coded with one
adaptive context per AC sub-band. Because the decoder recomputes the
same predictions from the same amplitudes and weights, applying the
residual reproduces the true signs exactly, whatever the prediction
quality.

Container layout (``SRC1``, see docs/FORMATS.md): magic, width, height,
quality factor, SHA-256 of the model weights, three payload lengths,
then the amplitude payload (LEB128 varints, sub-band scan order), the
raw DC sign bits, and the entropy-coded AC sign residual.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rangecoder
from .blockdct import blockwise_forward, blockwise_inverse, merge, quant_table_from_qf, split
from .errors import FormatError, ModelMismatchError
from .network import Model, model_digest, retrieve_signs
from .subband import pack, unpack
from .validation import (
    NUM_AC_BANDS,
    as_amp_tensor,
    as_image_plane,
    as_sign_tensor,
)

CONTAINER_MAGIC = b"SRC1"
DIGEST_SIZE = 32
_HEADER = struct.Struct("<4sIIB32sQQQ")


@dataclass
class ResidualTensor:
    """Sign disagreement bits over the significant AC positions.

    ``bits[z-1, y, x]`` is 1 where the true and predicted signs differ in
    AC band z; ``mask`` marks the significant positions, and bits are 0
    everywhere else.
    """

    bits: np.ndarray  # (63, H/8, W/8) uint8
    mask: np.ndarray  # (63, H/8, W/8) bool

    def __post_init__(self):
        if self.bits.shape != self.mask.shape or self.bits.ndim != 3:
            raise ValueError("residual bits and mask must share a 3D shape")
        if self.bits.shape[0] != NUM_AC_BANDS:
            raise ValueError(f"residual must cover {NUM_AC_BANDS} AC bands")
        if np.any(self.bits & ~self.mask):
            raise ValueError("residual bits set outside the significance mask")


def residual(true_signs, predicted_signs, amps) -> ResidualTensor:
    """XOR between true and predicted signs at significant AC positions."""
    s_true = as_sign_tensor(true_signs)
    s_pred = as_sign_tensor(predicted_signs)
    amp_arr = as_amp_tensor(amps)
    if s_true.shape != s_pred.shape or s_true.shape != amp_arr.shape:
        raise ValueError(
            f"shape mismatch: {s_true.shape}, {s_pred.shape}, {amp_arr.shape}"
        )
    mask = amp_arr[1:] > 0
    bits = ((s_true[1:] != s_pred[1:]) & mask).astype(np.uint8)
    return ResidualTensor(bits, mask)


def apply_residual(res: ResidualTensor, predicted_signs) -> np.ndarray:
    """Flip predicted signs where the residual says so; involution of
    :func:`residual`. Non-significant AC positions come back as +1; the DC
    slice passes through untouched."""
    s_pred = as_sign_tensor(predicted_signs)
    if res.bits.shape != (NUM_AC_BANDS,) + s_pred.shape[1:]:
        raise ValueError(
            f"residual shape {res.bits.shape} does not match signs {s_pred.shape}"
        )
    out = s_pred.copy()
    ac = np.where(res.bits == 1, -s_pred[1:], s_pred[1:])
    out[1:] = np.where(res.mask, ac, np.int8(1))
    return out


def _scan_bits_and_contexts(res_bits: np.ndarray, mask: np.ndarray):
    # scan order: z ascending, then y, then x (row-major within each slice)
    flat_mask = mask.reshape(NUM_AC_BANDS, -1)
    contexts = np.repeat(np.arange(NUM_AC_BANDS), flat_mask.sum(axis=1))
    bits = res_bits.reshape(NUM_AC_BANDS, -1)[flat_mask]
    return bits.tolist(), contexts.tolist()


def encode_residual(res: ResidualTensor, amps) -> bytes:
    """Entropy-code residual bits, one adaptive context per AC sub-band."""
    amp_arr = as_amp_tensor(amps)
    mask = amp_arr[1:] > 0
    if mask.shape != res.mask.shape or not np.array_equal(mask, res.mask):
        raise ValueError("residual mask does not match the amplitude tensor")
    if not mask.any():
        return b""
    bits, contexts = _scan_bits_and_contexts(res.bits, mask)
    models = [rangecoder.AdaptiveBitModel() for _ in range(NUM_AC_BANDS)]
    return rangecoder.encode_bits(bits, contexts, models)


def decode_residual(payload: bytes, amps) -> ResidualTensor:
    """Exact inverse of :func:`encode_residual` given the same amplitudes."""
    amp_arr = as_amp_tensor(amps)
    mask = amp_arr[1:] > 0
    bits = np.zeros(mask.shape, dtype=np.uint8)
    if not mask.any():
        if payload:
            raise FormatError("residual payload present but no significant positions")
        return ResidualTensor(bits, mask)
    flat_mask = mask.reshape(NUM_AC_BANDS, -1)
    contexts = np.repeat(np.arange(NUM_AC_BANDS), flat_mask.sum(axis=1)).tolist()
    models = [rangecoder.AdaptiveBitModel() for _ in range(NUM_AC_BANDS)]
    decoded = rangecoder.decode_bits(payload, contexts, models)
    flat_bits = bits.reshape(NUM_AC_BANDS, -1)
    flat_bits[flat_mask] = decoded
    return ResidualTensor(bits, mask)


# --- payload helpers ---------------------------------------------------------


_VARINT_MAX_BYTES = 5  # enough for any uint32


def _encode_varints(values: np.ndarray) -> bytes:
    """LEB128 encoding of non-negative integers, vectorized."""
    flat = np.ascontiguousarray(values.ravel(), dtype=np.uint64)
    if flat.size == 0:
        return b""
    lengths = np.ones(flat.size, dtype=np.int64)
    for k in range(1, _VARINT_MAX_BYTES):
        lengths += flat >= (1 << (7 * k))
    ends = np.cumsum(lengths)
    out = np.empty(int(ends[-1]), dtype=np.uint8)
    starts = ends - lengths
    remaining = flat.copy()
    for k in range(int(lengths.max())):
        active = lengths > k
        byte = (remaining[active] & 0x7F).astype(np.uint8)
        more = lengths[active] > k + 1
        out[starts[active] + k] = byte | (more.astype(np.uint8) << 7)
        remaining[active] >>= np.uint64(7)
    return out.tobytes()


def _decode_varints(payload: bytes, count: int) -> np.ndarray:
    """Inverse of :func:`_encode_varints` for a known value count."""
    raw = np.frombuffer(payload, dtype=np.uint8)
    terminators = np.flatnonzero(raw < 0x80)
    if terminators.size != count:
        raise FormatError(
            f"amplitude payload holds {terminators.size} values, expected {count}"
        )
    if count == 0:
        return np.zeros(0, dtype=np.int32)
    if terminators[-1] != raw.size - 1:
        raise FormatError(
            f"{raw.size - 1 - terminators[-1]} trailing bytes in amplitude payload"
        )
    starts = np.concatenate(([0], terminators[:-1] + 1))
    lengths = terminators - starts + 1
    if lengths.max() > _VARINT_MAX_BYTES:
        raise FormatError("amplitude varint too long")
    values = np.zeros(count, dtype=np.uint64)
    for k in range(int(lengths.max())):
        active = lengths > k
        values[active] |= (raw[starts[active] + k] & np.uint64(0x7F)) << np.uint64(7 * k)
    if values.max(initial=0) > np.iinfo(np.int32).max:
        raise FormatError("amplitude value out of range")
    return values.astype(np.int32)


def _encode_dc_signs(dc_signs: np.ndarray) -> bytes:
    # bit 1 encodes a negative sign, MSB-first within each byte
    return np.packbits(dc_signs.ravel() == -1).tobytes()


def _decode_dc_signs(payload: bytes, shape: tuple[int, int]) -> np.ndarray:
    count = shape[0] * shape[1]
    expected = (count + 7) // 8
    if len(payload) != expected:
        raise FormatError(
            f"DC sign payload must be {expected} bytes, got {len(payload)}"
        )
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=count)
    return np.where(bits == 1, -1, 1).astype(np.int8).reshape(shape)


# --- container ---------------------------------------------------------------


@dataclass
class Container:
    """Parsed form of one compressed image."""

    width: int
    height: int
    qf: int
    model_digest: bytes
    amp_payload: bytes
    dc_payload: bytes
    residual_payload: bytes

    def __post_init__(self):
        if len(self.model_digest) != DIGEST_SIZE:
            raise ValueError(f"model digest must be {DIGEST_SIZE} bytes")
        if not 1 <= self.qf <= 100:
            raise ValueError(f"quality factor must lie in [1, 100], got {self.qf}")
        if self.width % 8 or self.height % 8 or self.width == 0 or self.height == 0:
            raise ValueError("container dimensions must be positive multiples of 8")

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            CONTAINER_MAGIC,
            self.width,
            self.height,
            self.qf,
            self.model_digest,
            len(self.amp_payload),
            len(self.dc_payload),
            len(self.residual_payload),
        )
        return header + self.amp_payload + self.dc_payload + self.residual_payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Container":
        if len(data) < _HEADER.size:
            raise FormatError("container shorter than its header")
        magic, width, height, qf, digest, amp_len, dc_len, res_len = _HEADER.unpack_from(
            data
        )
        if magic != CONTAINER_MAGIC:
            raise FormatError(f"bad container magic {magic!r}")
        total = _HEADER.size + amp_len + dc_len + res_len
        if len(data) < total:
            raise FormatError(
                f"container truncated: need {total} bytes, have {len(data)}"
            )
        if len(data) > total:
            raise FormatError(f"{len(data) - total} trailing bytes after payloads")
        pos = _HEADER.size
        amp = data[pos : pos + amp_len]
        pos += amp_len
        dc = data[pos : pos + dc_len]
        pos += dc_len
        res = data[pos : pos + res_len]
        try:
            return cls(width, height, qf, digest, amp, dc, res)
        except ValueError as exc:
            raise FormatError(str(exc)) from exc


def encode_image(image, qf: int, model: Model) -> Container:
    """Full encoding chain from image plane to container."""
    plane = as_image_plane(image)
    table = quant_table_from_qf(qf)
    grid = blockwise_forward(plane, table)
    amp_grid, sign_grid = split(grid)
    amps = pack(amp_grid)
    signs = pack(sign_grid)
    predicted = retrieve_signs(model, amps, signs[0])
    res = residual(signs, predicted, amps)
    return Container(
        width=plane.shape[1],
        height=plane.shape[0],
        qf=qf,
        model_digest=model_digest(model),
        amp_payload=_encode_varints(amps),
        dc_payload=_encode_dc_signs(signs[0]),
        residual_payload=encode_residual(res, amps),
    )


def decode_image(container: Container, model: Model) -> tuple[np.ndarray, np.ndarray]:
    """Reverse of :func:`encode_image`: returns (image plane, level grid).

    The level grid is bit-exact against the encoder's; the image is its
    dequantized inverse transform.
    """
    digest = model_digest(model)
    if digest != container.model_digest:
        raise ModelMismatchError(
            "container was encoded with different weights: "
            f"expected {container.model_digest.hex()}, supplied model is {digest.hex()}"
        )
    nb_x = container.width // 8
    nb_y = container.height // 8
    values = _decode_varints(container.amp_payload, 64 * nb_y * nb_x)
    amps = values.reshape(64, nb_y, nb_x)
    if amps.min() < 0:
        raise FormatError("negative amplitude in payload")
    dc_signs = _decode_dc_signs(container.dc_payload, (nb_y, nb_x))
    if np.any((amps[0] == 0) & (dc_signs == -1)):
        raise FormatError("negative DC sign recorded for a zero amplitude")
    predicted = retrieve_signs(model, amps, dc_signs)
    res = decode_residual(container.residual_payload, amps)
    signs = apply_residual(res, predicted)
    grid = merge(unpack(amps), unpack(signs))
    table = quant_table_from_qf(container.qf)
    return blockwise_inverse(grid, table), grid


def write_container(path, container: Container) -> None:
    Path(path).write_bytes(container.to_bytes())


def read_container(path) -> Container:
    return Container.from_bytes(Path(path).read_bytes())
