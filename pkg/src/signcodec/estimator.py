"""Scikit-learn style estimator around the sign-prediction network.

``SignRetriever`` follows the standard estimator protocol: constructor
parameters are stored verbatim and mirrored by ``get_params`` /
``set_params`` (so ``sklearn.base.clone`` and model-selection tooling
work), ``fit`` returns ``self``, and fitted state lives in
trailing-underscore attributes. ``score`` returns the pooled recovery
rate, the quantity this predictor is judged by.
"""

from __future__ import annotations

import numpy as np

from . import metrics
from .errors import NotFittedError
from .network import (
    Model,
    load_weights,
    predict_ac_probabilities,
    save_weights,
    threshold,
)
from .training import TrainConfig, train
from .validation import NUM_BANDS, as_amp_tensor, as_sign_tensor

_PARAM_NAMES = (
    "variant",
    "depth",
    "hidden",
    "learning_rate",
    "batch_size",
    "epochs",
    "seed",
)


def _as_tensor_batch(X, caster, what: str) -> list[np.ndarray]:
    arr = np.asarray(X) if not isinstance(X, (list, tuple)) else X
    if isinstance(arr, np.ndarray):
        if arr.ndim == 3:
            arr = arr[None]
        if arr.ndim != 4 or arr.shape[1] != NUM_BANDS:
            raise ValueError(
                f"{what} must be (n_samples, 64, H/8, W/8) or a list of "
                f"(64, H/8, W/8) tensors, got shape {arr.shape}"
            )
        return [caster(a) for a in arr]
    return [caster(a) for a in arr]


class SignRetriever:
    """Predicts AC coefficient signs from quantized amplitude tensors.

    Parameters
    ----------
    variant : "subband" or "naive"
        Sub-band tensors as 64 channels, or the single-channel
        full-resolution coefficient plane (ablation baseline).
    depth : int
        Layer count minus one; hidden convolutions all use ``hidden``
        channels.
    learning_rate, batch_size, epochs, seed
        Optimization settings; all randomness derives from ``seed``.
    """

    def __init__(
        self,
        variant: str = "subband",
        depth: int = 2,
        hidden: int = 128,
        learning_rate: float = 2e-4,
        batch_size: int = 8,
        epochs: int = 200,
        seed: int = 0,
    ):
        self.variant = variant
        self.depth = depth
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    # -- estimator protocol ---------------------------------------------------

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in _PARAM_NAMES}

    def set_params(self, **params) -> "SignRetriever":
        for name, value in params.items():
            if name not in _PARAM_NAMES:
                raise ValueError(
                    f"invalid parameter {name!r} for SignRetriever; "
                    f"valid parameters are {_PARAM_NAMES}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={getattr(self, k)!r}" for k in _PARAM_NAMES)
        return f"SignRetriever({args})"

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            depth=self.depth,
            hidden=self.hidden,
            variant=self.variant,
        )

    @property
    def model_(self) -> Model:
        if self._model is None:
            raise NotFittedError(
                "this SignRetriever is not fitted yet; call fit or load first"
            )
        return self._model

    _model: Model | None = None

    # -- fitting and prediction -----------------------------------------------

    def fit(self, X, y) -> "SignRetriever":
        """Train on amplitude tensors ``X`` and matching sign tensors ``y``."""
        amps = _as_tensor_batch(X, as_amp_tensor, "X")
        signs = _as_tensor_batch(y, as_sign_tensor, "y")
        if len(amps) != len(signs):
            raise ValueError(f"X has {len(amps)} samples but y has {len(signs)}")
        model, losses = train(list(zip(amps, signs)), self._config())
        self._model = model
        self.loss_history_ = losses
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Per-position probability that the sign is +1, sub-band layout.

        Output shape is (n_samples, 63, H/8, W/8) for both variants; the
        naive variant's plane output is repacked into sub-band slices.
        """
        model = self.model_
        amps = _as_tensor_batch(X, as_amp_tensor, "X")
        return np.stack([predict_ac_probabilities(model, a) for a in amps])

    def predict(self, X) -> np.ndarray:
        """Predicted AC signs, +1/-1, shape (n_samples, 63, H/8, W/8)."""
        return threshold(self.predict_proba(X))

    def score(self, X, y) -> float:
        """Pooled recovery rate of predicted signs against ``y``."""
        amps = _as_tensor_batch(X, as_amp_tensor, "X")
        signs = _as_tensor_batch(y, as_sign_tensor, "y")
        if len(amps) != len(signs):
            raise ValueError(f"X has {len(amps)} samples but y has {len(signs)}")
        predictions = self.predict(amps)
        reports = []
        for amp, sign, pred in zip(amps, signs, predictions):
            full = np.empty_like(sign)
            full[0] = sign[0]  # DC never enters the metric
            full[1:] = pred
            reports.append(metrics.recovery_rate(sign, full, amp))
        return metrics.pooled_recovery(reports).recovery_rate

    # -- persistence ------------------------------------------------------------

    def save(self, path) -> None:
        save_weights(self.model_, path)

    @classmethod
    def load(cls, path) -> "SignRetriever":
        """Rebuild an estimator from a weights file; architecture parameters
        are taken from the file, optimization parameters keep defaults."""
        model = load_weights(path)
        variant = "naive" if model.in_channels == 1 else "subband"
        hidden = (
            model.layers[0].out_channels if len(model.layers) > 1 else model.out_channels
        )
        est = cls(variant=variant, depth=model.depth, hidden=hidden)
        est._model = model
        return est
