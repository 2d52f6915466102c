"""Adaptive binary arithmetic coding via a carry-aware byte range coder.

The coder keeps a 32-bit range and renormalizes one byte at a time with
explicit carry propagation; the flush writes the full low register, so a
decoder that knows the symbol count consumes exactly the bytes produced
and is unaffected by anything appended after them.

Probabilities come from counting models: per-context zero/one counts
start at 1/1 and are halved (rounding up) once their sum reaches 2**15,
which keeps the model adaptive on long streams.
"""

from __future__ import annotations

from .errors import FormatError

PROB_BITS = 16
PROB_SCALE = 1 << PROB_BITS
_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
_REBALANCE_LIMIT = 1 << 15
_FLUSH_BYTES = 5


class AdaptiveBitModel:
    """Zero/one counting model producing scaled probabilities of zero."""

    __slots__ = ("zeros", "ones")

    def __init__(self):
        self.zeros = 1
        self.ones = 1

    def prob_zero(self) -> int:
        p = self.zeros * PROB_SCALE // (self.zeros + self.ones)
        if p < 1:
            return 1
        if p > PROB_SCALE - 1:
            return PROB_SCALE - 1
        return p

    def update(self, bit: int) -> None:
        if bit:
            self.ones += 1
        else:
            self.zeros += 1
        if self.zeros + self.ones >= _REBALANCE_LIMIT:
            self.zeros = (self.zeros + 1) >> 1
            self.ones = (self.ones + 1) >> 1


class RangeEncoder:
    def __init__(self):
        self._low = 0
        self._range = _MASK32
        self._cache = 0
        self._cache_size = 1
        self._out = bytearray()

    def encode(self, bit: int, prob_zero: int) -> None:
        """Encode one bit given P(bit=0) scaled to [1, PROB_SCALE - 1]."""
        bound = (self._range >> PROB_BITS) * prob_zero
        if bit:
            self._low += bound
            self._range -= bound
        else:
            self._range = bound
        while self._range < _TOP:
            self._shift_low()
            self._range = (self._range << 8) & _MASK32

    def _shift_low(self) -> None:
        low = self._low
        if low < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            out = self._out
            out.append((self._cache + carry) & 0xFF)
            filler = (0xFF + carry) & 0xFF
            for _ in range(self._cache_size - 1):
                out.append(filler)
            self._cache = (low >> 24) & 0xFF
            self._cache_size = 0
        self._cache_size += 1
        self._low = (low << 8) & _MASK32

    def finish(self) -> bytes:
        for _ in range(_FLUSH_BYTES):
            self._shift_low()
        return bytes(self._out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._range = _MASK32
        self._code = 0
        self._next_byte()  # encoder cache priming byte
        for _ in range(4):
            self._code = (self._code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        pos = self._pos
        self._pos = pos + 1
        if pos < len(self._data):
            return self._data[pos]
        return 0

    @property
    def overrun(self) -> bool:
        """True if decoding needed bytes beyond the supplied stream."""
        return self._pos > len(self._data)

    @property
    def bytes_consumed(self) -> int:
        return min(self._pos, len(self._data))

    def decode(self, prob_zero: int) -> int:
        bound = (self._range >> PROB_BITS) * prob_zero
        if self._code < bound:
            bit = 0
            self._range = bound
        else:
            bit = 1
            self._code -= bound
            self._range -= bound
        while self._range < _TOP:
            self._code = ((self._code << 8) | self._next_byte()) & _MASK32
            self._range = (self._range << 8) & _MASK32
        return bit


def encode_bits(bits, context_ids, models) -> bytes:
    """Encode a bit sequence, each bit under its context's adaptive model."""
    encoder = RangeEncoder()
    for bit, ctx in zip(bits, context_ids):
        model = models[ctx]
        encoder.encode(bit, model.prob_zero())
        model.update(bit)
    return encoder.finish()


def decode_bits(data: bytes, context_ids, models) -> list[int]:
    """Inverse of :func:`encode_bits`; raises on truncated input."""
    decoder = RangeDecoder(data)
    out = []
    for ctx in context_ids:
        model = models[ctx]
        bit = decoder.decode(model.prob_zero())
        model.update(bit)
        out.append(bit)
    if decoder.overrun:
        raise FormatError("bit stream truncated")
    return out
