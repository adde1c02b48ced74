"""One-hidden-layer ReLU network with a softmax output, trained by mini-batch Adam.

Parameters live in a plain dict of float64 arrays::

    w1 (d, h)   b1 (h,)   w2 (h, K)   b2 (K,)
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import structlog

from tedkit.errors import LearnerError
from tedkit.learners.base import argmax_classes, check_training_data, check_width, learner_rng
from tedkit.models import MlpConfig

logger = structlog.get_logger(__name__)

Params = dict[str, np.ndarray]
PARAM_NAMES: tuple[str, ...] = ("w1", "b1", "w2", "b2")


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted by the row maximum."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def init_params(
    n_features: int, hidden_units: int, n_classes: int, rng: np.random.Generator
) -> Params:
    """He-uniform weights, zero biases."""
    limit1 = np.sqrt(6.0 / n_features)
    limit2 = np.sqrt(6.0 / hidden_units)
    return {
        "w1": rng.uniform(-limit1, limit1, (n_features, hidden_units)),
        "b1": np.zeros(hidden_units),
        "w2": rng.uniform(-limit2, limit2, (hidden_units, n_classes)),
        "b2": np.zeros(n_classes),
    }


def forward(params: Params, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(hidden pre-activation, hidden activation, class probabilities)``."""
    z1 = X @ params["w1"] + params["b1"]
    hidden = relu(z1)
    return z1, hidden, softmax(hidden @ params["w2"] + params["b2"])


def loss_and_gradients(
    params: Params,
    X: np.ndarray,
    y: np.ndarray,
    reduction: str = "mean",
) -> tuple[float, Params]:
    """Cross-entropy of class indices *y* and its gradient by backpropagation.

    Args:
        params:    Network parameters.
        X:         ``(n, d)`` inputs.
        y:         ``(n,)`` class indices into the output layer.
        reduction: ``"mean"`` or ``"sum"`` over rows.

    Returns:
        ``(loss, gradients keyed like params)``.
    """
    if reduction not in ("mean", "sum"):
        raise LearnerError(f"unknown reduction {reduction!r}")
    n = X.shape[0]
    z1 = X @ params["w1"] + params["b1"]
    hidden = relu(z1)
    logits = hidden @ params["w2"] + params["b2"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_proba = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(n)
    scale = 1.0 / n if reduction == "mean" else 1.0
    loss = float(-log_proba[rows, y].sum() * scale)

    delta = np.exp(log_proba)
    delta[rows, y] -= 1.0
    delta *= scale
    d_hidden = delta @ params["w2"].T
    d_hidden[z1 <= 0.0] = 0.0
    grads = {
        "w1": X.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
        "w2": hidden.T @ delta,
        "b2": delta.sum(axis=0),
    }
    return loss, grads


@dataclass(eq=False)
class MlpModel:
    """Fitted network. ``classes[k]`` is the class id of output unit ``k``."""

    params: Params
    classes: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return int(self.params["w1"].shape[0])

    @property
    def hidden_units(self) -> int:
        return int(self.params["w1"].shape[1])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = check_width(X, self.n_features)
        return forward(self.params, X)[2]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return argmax_classes(self.predict_proba(X), self.classes)


class _Adam:
    def __init__(self, params: Params, config: MlpConfig) -> None:
        self._config = config
        self._m = {k: np.zeros_like(v) for k, v in params.items()}
        self._v = {k: np.zeros_like(v) for k, v in params.items()}
        self._t = 0

    def step(self, params: Params, grads: Params) -> None:
        cfg = self._config
        self._t += 1
        correction1 = 1.0 - cfg.beta1**self._t
        correction2 = 1.0 - cfg.beta2**self._t
        for name in PARAM_NAMES:
            g = grads[name]
            self._m[name] = cfg.beta1 * self._m[name] + (1.0 - cfg.beta1) * g
            self._v[name] = cfg.beta2 * self._v[name] + (1.0 - cfg.beta2) * g * g
            m_hat = self._m[name] / correction1
            v_hat = self._v[name] / correction2
            params[name] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def mlp_fit(X: np.ndarray, y: np.ndarray, config: MlpConfig) -> MlpModel:
    """Train a network on class ids *y*.

    Raises:
        LearnerError: On dimension mismatch or fewer than two classes.
    """
    X, y = check_training_data(X, y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise LearnerError(f"need at least 2 classes, got {len(classes)}")
    targets = np.searchsorted(classes, y)

    t_start = time.perf_counter()
    rng = learner_rng(config.seed)
    params = init_params(X.shape[1], config.hidden_units, len(classes), rng)
    optimizer = _Adam(params, config)
    n = X.shape[0]
    history: list[float] = []

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = loss_and_gradients(params, X[batch], targets[batch])
            optimizer.step(params, grads)
            total += loss * len(batch)
        history.append(total / n)
        if epoch % 50 == 0:
            logger.debug("mlp.epoch", epoch=epoch, loss=round(history[-1], 6))

    logger.info(
        "mlp.fitted",
        rows=n,
        classes=len(classes),
        epochs=config.epochs,
        first_loss=round(history[0], 6),
        final_loss=round(history[-1], 6),
        seconds=round(time.perf_counter() - t_start, 2),
    )
    return MlpModel(params=params, classes=classes, loss_history=history)


def mlp_gradient_check(
    config: MlpConfig,
    X: np.ndarray,
    y: np.ndarray,
    params: Params | None = None,
    step: float = 1e-5,
) -> float:
    """Largest relative gap between backprop and central-difference gradients.

    The gap for each parameter array is
    ``||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12)``.

    Args:
        config: Supplies ``hidden_units`` and ``seed`` for a fresh random network.
        X:      Non-empty batch of inputs.
        y:      Class indices of the batch; the output layer has ``max(y) + 1`` units.
        params: Check this network instead of a fresh one.
        step:   Finite-difference step.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise LearnerError("gradient check needs a non-empty batch")
    if params is None:
        rng = learner_rng(config.seed)
        params = init_params(X.shape[1], config.hidden_units, int(y.max()) + 1, rng)
    params = {k: v.astype(np.float64, copy=True) for k, v in params.items()}
    _, analytic = loss_and_gradients(params, X, y)

    worst = 0.0
    for name in PARAM_NAMES:
        values = params[name]
        numeric = np.zeros_like(values)
        for idx in np.ndindex(values.shape):
            original = values[idx]
            values[idx] = original + step
            plus, _ = loss_and_gradients(params, X, y)
            values[idx] = original - step
            minus, _ = loss_and_gradients(params, X, y)
            values[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * step)
        gap = np.linalg.norm(analytic[name] - numeric)
        scale = max(np.linalg.norm(analytic[name]) + np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(gap / scale))
    logger.debug("mlp.gradient_check", max_relative_error=worst)
    return worst


class MlpLearner:
    """:class:`~tedkit.learners.base.Learner` wrapper around :func:`mlp_fit`."""

    name = "mlp"

    def __init__(self, config: MlpConfig | None = None) -> None:
        self.config = config or MlpConfig()

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> MlpModel:
        return mlp_fit(X, y, self.config.model_copy(update={"seed": seed}))
