"""Adam optimization and the deterministic training loop.

Everything random (weight init, epoch shuffling) flows from one seed
through one generator, so a given configuration and dataset always
produce bit-identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import subband
from .network import Model, batch_loss_and_gradients, build_model
from .validation import NUM_AC_BANDS, NUM_BANDS, as_amp_tensor, as_sign_tensor

VARIANTS = ("subband", "naive")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    learning_rate: float = 2e-4
    batch_size: int = 8
    epochs: int = 200
    seed: int = 0
    depth: int = 2
    hidden: int = 128
    variant: str = "subband"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if not 2 <= self.depth <= 8:
            raise ValueError(f"depth must lie in [2, 8], got {self.depth}")
        if self.hidden < 1:
            raise ValueError("hidden width must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    first: list[np.ndarray]
    second: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_model(cls, model: Model) -> "AdamState":
        params = model.parameters()
        return cls(
            first=[np.zeros_like(p) for p in params],
            second=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    learning_rate: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> AdamState:
    """One in-place Adam update with bias correction."""
    if len(params) != len(grads) or len(params) != len(state.first):
        raise ValueError("parameter, gradient and state lists must align")
    state.step += 1
    t = state.step
    correction1 = 1.0 - beta1**t
    correction2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.first, state.second):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match {p.shape}")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        m_hat = m / correction1
        v_hat = v / correction2
        p -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return state


def _flatten_grads(layer_grads) -> list[np.ndarray]:
    flat = []
    for dk, db in layer_grads:
        flat.append(dk)
        flat.append(db)
    return flat


_AC_PLANE_MASK_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _ac_plane_mask(height: int, width: int) -> np.ndarray:
    key = (height, width)
    mask = _AC_PLANE_MASK_CACHE.get(key)
    if mask is None:
        mask = np.ones((height, width), dtype=bool)
        mask[0::8, 0::8] = False  # block DC positions
        _AC_PLANE_MASK_CACHE[key] = mask
    return mask


def prepare_examples(dataset, variant: str, dtype=np.float32):
    """Stack (amplitude, sign) tensor pairs into training arrays.

    Returns (inputs, targets, mask): inputs are the network view of the
    amplitudes, targets the 0/1 sign labels, mask the positions that carry
    loss (non-zero amplitude, DC excluded).
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if len(dataset) == 0:
        raise ValueError("dataset must contain at least one example")
    amps = [as_amp_tensor(a) for a, _ in dataset]
    signs = [as_sign_tensor(s) for _, s in dataset]
    shape = amps[0].shape
    for arr in amps + signs:
        if arr.shape != shape:
            raise ValueError(f"dataset shapes differ: {arr.shape} vs {shape}")
    if variant == "subband":
        amp_arr = np.stack(amps)
        sign_arr = np.stack(signs)
        inputs = amp_arr.astype(dtype)
        targets = (sign_arr[:, 1:] > 0).astype(dtype)
        mask = amp_arr[:, 1:] > 0
        return inputs, targets, mask
    amp_planes = np.stack([subband.to_plane(subband.unpack(a)) for a in amps])
    sign_planes = np.stack([subband.to_plane(subband.unpack(s)) for s in signs])
    inputs = amp_planes[:, None].astype(dtype)
    targets = (sign_planes[:, None] > 0).astype(dtype)
    ac_mask = _ac_plane_mask(*amp_planes.shape[1:])
    mask = (amp_planes[:, None] > 0) & ac_mask
    return inputs, targets, mask


def train(
    dataset,
    config: TrainConfig,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[Model, list[float]]:
    """Train a model on (amplitude, sign) tensor pairs.

    Returns the trained model and the per-epoch mean loss values. The
    optional ``on_epoch`` callback receives (epoch_number, loss) as each
    epoch completes.
    """
    inputs, targets, mask = prepare_examples(dataset, config.variant)
    count = inputs.shape[0]
    in_ch = NUM_BANDS if config.variant == "subband" else 1
    out_ch = NUM_AC_BANDS if config.variant == "subband" else 1
    rng = np.random.default_rng(config.seed)
    model = build_model(config.depth, in_ch, out_ch, config.hidden, rng=rng)
    state = AdamState.for_model(model)
    params = model.parameters()
    losses: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(count)
        total = 0.0
        for start in range(0, count, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, layer_grads = batch_loss_and_gradients(
                model, inputs[idx], targets[idx], mask[idx]
            )
            adam_step(params, _flatten_grads(layer_grads), state, config.learning_rate)
            total += loss * len(idx)
        epoch_loss = total / count
        losses.append(epoch_loss)
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)
    return model, losses


def format_loss_log(losses: Sequence[float]) -> str:
    """One ``epoch,loss`` line per epoch, epochs numbered from 1."""
    return "".join(f"{epoch},{loss:.10g}\n" for epoch, loss in enumerate(losses, 1))
