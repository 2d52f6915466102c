"""Recovery-rate accounting, per-block heat maps, bit costs and timing.

The recovery rate counts correctly predicted signs among significant AC
coefficients only: DC and zero-amplitude positions never enter the
numerator or denominator. When an image (or a block) has no significant
AC coefficient at all, its rate is reported as 1.0 with a ``vacuous``
flag so aggregation stays total without hiding the special case.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .codec import Container
from .validation import as_amp_tensor, as_sign_tensor


@dataclass
class RecoveryReport:
    recovery_rate: float
    significant: int
    correct: int
    vacuous: bool

    def csv_row(self) -> str:
        return (
            f"{self.significant},{self.correct},"
            f"{self.recovery_rate:.6f},{int(self.vacuous)}"
        )


def recovery_rate(true_signs, predicted_signs, amps) -> RecoveryReport:
    """Fraction of significant AC signs predicted correctly."""
    s_true = as_sign_tensor(true_signs)
    s_pred = as_sign_tensor(predicted_signs)
    amp_arr = as_amp_tensor(amps)
    if s_true.shape != s_pred.shape or s_true.shape != amp_arr.shape:
        raise ValueError(
            f"shape mismatch: {s_true.shape}, {s_pred.shape}, {amp_arr.shape}"
        )
    mask = amp_arr[1:] > 0
    significant = int(mask.sum())
    if significant == 0:
        return RecoveryReport(1.0, 0, 0, vacuous=True)
    correct = int(((s_true[1:] == s_pred[1:]) & mask).sum())
    return RecoveryReport(correct / significant, significant, correct, vacuous=False)


@dataclass
class HeatMap:
    """Per-block aggregates over a set of images.

    ``worst`` and ``variance`` are (H/8, W/8) grids; blocks that carry no
    significant AC coefficient in any image are NaN there and False in
    ``defined``. ``per_image`` keeps each image's per-block rates (NaN
    where a block is vacuous in that image).
    """

    worst: np.ndarray
    variance: np.ndarray
    defined: np.ndarray
    per_image: np.ndarray


def _per_block_rates(s_true, s_pred, amps):
    mask = amps[1:] > 0
    significant = mask.sum(axis=0)
    correct = ((s_true[1:] == s_pred[1:]) & mask).sum(axis=0)
    with np.errstate(invalid="ignore"):
        rates = np.where(significant > 0, correct / np.maximum(significant, 1), np.nan)
    return rates, significant


def per_block_heatmap(examples: Sequence[tuple]) -> HeatMap:
    """Aggregate per-block recovery over (true, predicted, amplitude) triples.

    ``worst`` is the element-wise minimum and ``variance`` the population
    variance of each block's rates across the images where the block has
    significant coefficients.
    """
    if len(examples) == 0:
        raise ValueError("heat map needs at least one example")
    rate_grids = []
    shape = None
    for s_true, s_pred, amps in examples:
        st = as_sign_tensor(s_true)
        sp = as_sign_tensor(s_pred)
        am = as_amp_tensor(amps)
        if st.shape != sp.shape or st.shape != am.shape:
            raise ValueError("example tensors must share a shape")
        if shape is None:
            shape = st.shape
        elif st.shape != shape:
            raise ValueError(f"examples must share a shape: {st.shape} vs {shape}")
        rates, _ = _per_block_rates(st, sp, am)
        rate_grids.append(rates)
    per_image = np.stack(rate_grids)
    defined = ~np.all(np.isnan(per_image), axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN slices
        worst = np.nanmin(per_image, axis=0)
        variance = np.nanvar(per_image, axis=0)
    worst[~defined] = np.nan
    variance[~defined] = np.nan
    return HeatMap(worst, variance, defined, per_image)


def heatmap_to_plane(grid: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Map a heat-map grid to [0, 1] samples (0 black, full scale white).

    Undefined (NaN) blocks render black. ``scale`` is the value mapped to
    white; variance grids use 0.25, the maximum possible for rates in
    [0, 1].
    """
    plane = np.nan_to_num(grid, nan=0.0) / scale
    return np.clip(plane, 0.0, 1.0)


@dataclass
class BitsPerSign:
    bits_per_sign: float
    payload_bits: int
    significant: int
    defined: bool


def bits_per_sign(container: Container, amps) -> BitsPerSign:
    """Residual payload bits divided by the significant AC sign count."""
    amp_arr = as_amp_tensor(amps)
    significant = int((amp_arr[1:] > 0).sum())
    payload_bits = len(container.residual_payload) * 8
    if significant == 0:
        return BitsPerSign(float("nan"), payload_bits, 0, defined=False)
    return BitsPerSign(payload_bits / significant, payload_bits, significant, defined=True)


@dataclass
class TimingReport:
    median_seconds: float
    variance: float
    samples: list[float]


def time_callable(fn: Callable[[], object], runs: int = 5, warmup: int = 1) -> TimingReport:
    """Median wall time of ``fn`` over ``runs`` calls after ``warmup`` calls."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(runs):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return TimingReport(float(np.median(samples)), float(np.var(samples)), samples)


def time_retrieval(model, amps, runs: int = 5, warmup: int = 1) -> TimingReport:
    """Wall time of sign retrieval alone (no transform or file I/O)."""
    from .network import predict_ac_signs

    amp_arr = as_amp_tensor(amps)
    return time_callable(lambda: predict_ac_signs(model, amp_arr), runs, warmup)


def pooled_recovery(reports: Sequence[RecoveryReport]) -> RecoveryReport:
    """Combine per-image reports by pooling counts across the set."""
    significant = sum(r.significant for r in reports)
    correct = sum(r.correct for r in reports)
    if significant == 0:
        return RecoveryReport(1.0, 0, 0, vacuous=True)
    return RecoveryReport(correct / significant, significant, correct, vacuous=False)
