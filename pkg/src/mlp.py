from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.dataset import SplitMix64
from src.errors import DimensionMismatch, NonFiniteFeature, SingleClass
from src.optim import DescentTrace, armijo_descent

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-15
STALL_ROUNDS = 5
ACTIVATIONS = ("relu",)


class MlpHyper(BaseModel):
    model_config = ConfigDict(frozen=True)

    hidden_sizes: tuple[int, ...] = (5, 2)
    alpha: float = Field(1e-5, ge=0.0)
    seed: int = Field(1, ge=0, le=(1 << 64) - 1)
    tol: float = Field(1e-5, gt=0.0)
    max_iter: int = Field(500, ge=1)

    @field_validator("hidden_sizes")
    @classmethod
    def _positive_sizes(cls, sizes: tuple[int, ...]) -> tuple[int, ...]:
        if any(s < 1 for s in sizes):
            raise ValueError(f"hidden layer sizes must be >= 1, got {sizes}")
        return sizes


@dataclass(frozen=True)
class MlpModel:
    weights: tuple[np.ndarray, ...]   # each (fan_out, fan_in)
    biases: tuple[np.ndarray, ...]    # each (fan_out,)
    class_ids: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionMismatch("weights and biases must be non-empty and of equal length")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (W.shape[0],):
                raise DimensionMismatch(f"layer {i}: bias {b.shape} does not match weights {W.shape}")
            if i and W.shape[1] != self.weights[i - 1].shape[0]:
                raise DimensionMismatch(f"layer {i}: fan_in {W.shape[1]} != previous fan_out {self.weights[i - 1].shape[0]}")
        if self.weights[-1].shape[0] != self.class_ids.shape[0]:
            raise DimensionMismatch(f"{self.weights[-1].shape[0]} outputs but {self.class_ids.shape[0]} classes")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[1])

    def pack(self) -> np.ndarray:
        return np.concatenate([p.ravel() for W, b in zip(self.weights, self.biases) for p in (W, b)])

    def unpack(self, theta: np.ndarray) -> "MlpModel":
        weights, biases, pos = [], [], 0
        for W, b in zip(self.weights, self.biases):
            weights.append(theta[pos:pos + W.size].reshape(W.shape))
            pos += W.size
            biases.append(theta[pos:pos + b.size].copy())
            pos += b.size
        return MlpModel(tuple(weights), tuple(biases), self.class_ids, self.activation)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _forward(self, np.atleast_2d(np.asarray(X, dtype=np.float64)))[2]

    def predict(self, X: np.ndarray) -> np.ndarray:
        # argmax takes the first (lowest) class on ties
        return self.class_ids[np.argmax(self.predict_proba(X), axis=1)]


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def mlp_init(d: int, hyper: MlpHyper, c: int, class_ids: np.ndarray | None = None) -> MlpModel:
    """Glorot-uniform weights from SplitMix64(seed), layer by layer, row-major; zero biases."""
    if d < 1 or c < 1:
        raise DimensionMismatch(f"input and output sizes must be positive, got d={d}, c={c}")
    rng = SplitMix64(hyper.seed)
    sizes = [d, *hyper.hidden_sizes, c]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = glorot_bound(fan_in, fan_out)
        u = np.array([rng.next_unit() for _ in range(fan_out * fan_in)])
        weights.append(((2.0 * u - 1.0) * bound).reshape(fan_out, fan_in))
        biases.append(np.zeros(fan_out))
    ids = np.arange(c, dtype=np.int64) if class_ids is None else np.asarray(class_ids, dtype=np.int64)
    return MlpModel(tuple(weights), tuple(biases), ids)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward(model: MlpModel, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    if X.shape[1] != model.input_dim:
        raise DimensionMismatch(f"model expects {model.input_dim} features, got {X.shape[1]}")
    activations, pre = [X], []
    a = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W.T + b
        pre.append(z)
        if i < last:
            a = np.maximum(z, 0.0)
            activations.append(a)
    return activations, pre, _softmax(pre[-1])


def mlp_forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return model.predict_proba(np.asarray(x, dtype=np.float64).ravel())[0]


def _class_index(model: MlpModel, labels: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(model.class_ids, labels)
    idx = np.clip(idx, 0, model.class_ids.shape[0] - 1)
    if not np.all(model.class_ids[idx] == labels):
        raise DimensionMismatch(f"labels outside the model classes {model.class_ids.tolist()}")
    return idx


def mlp_loss(model: MlpModel, features: np.ndarray, labels: np.ndarray, alpha: float) -> float:
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = X.shape[0]
    probs = _forward(model, X)[2]
    p_true = probs[np.arange(n), _class_index(model, np.asarray(labels))]
    penalty = sum(float(np.sum(W * W)) for W in model.weights)
    return float(-np.mean(np.log(np.maximum(p_true, PROB_FLOOR))) + alpha / (2.0 * n) * penalty)


def mlp_loss_grad(
    model: MlpModel, features: np.ndarray, labels: np.ndarray, alpha: float
) -> tuple[float, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Cross-entropy + alpha/(2n) * sum ||W||^2, and its (weight, bias) gradients."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = X.shape[0]
    target = _class_index(model, np.asarray(labels))
    activations, pre, probs = _forward(model, X)

    p_true = probs[np.arange(n), target]
    penalty = sum(float(np.sum(W * W)) for W in model.weights)
    loss = float(-np.mean(np.log(np.maximum(p_true, PROB_FLOOR))) + alpha / (2.0 * n) * penalty)

    delta = probs.copy()
    delta[np.arange(n), target] -= 1.0
    delta /= n
    grad_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        W = model.weights[i]
        grad_w[i] = delta.T @ activations[i] + (alpha / n) * W
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ W) * (pre[i - 1] > 0.0)
    return loss, (grad_w, grad_b)


def _flat(grads: tuple[list[np.ndarray], list[np.ndarray]]) -> np.ndarray:
    grad_w, grad_b = grads
    return np.concatenate([p.ravel() for gw, gb in zip(grad_w, grad_b) for p in (gw, gb)])


def fit_mlp(features: np.ndarray, labels: np.ndarray, hyper: MlpHyper | None = None) -> tuple[MlpModel, DescentTrace]:
    hyper = hyper or MlpHyper()
    X = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise DimensionMismatch(f"features {X.shape} do not match {labels.shape[0]} labels")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("features contain NaN or infinity")
    class_ids = np.unique(labels)
    if class_ids.shape[0] < 2:
        raise SingleClass(f"need at least 2 classes for classification. Found: {class_ids.tolist()}")

    template = mlp_init(X.shape[1], hyper, class_ids.shape[0], class_ids)

    def objective(theta: np.ndarray) -> float:
        return mlp_loss(template.unpack(theta), X, labels, hyper.alpha)

    def objective_grad(theta: np.ndarray) -> tuple[float, np.ndarray]:
        loss, grads = mlp_loss_grad(template.unpack(theta), X, labels, hyper.alpha)
        return loss, _flat(grads)

    theta, trace = armijo_descent(
        objective, objective_grad, template.pack(),
        tol=hyper.tol, max_iter=hyper.max_iter, stall_rounds=STALL_ROUNDS,
    )
    logger.info("mlp %s: %d iterations, stop=%s, loss=%.6g",
                template.layer_sizes, trace.n_iter, trace.reason, trace.objectives[-1])
    if trace.reason == "max_iter":
        logger.warning("mlp stopped at max_iter=%d with |grad|=%.3g", hyper.max_iter, trace.grad_norm)
    return template.unpack(theta), trace


def mlp_train(features: np.ndarray, labels: np.ndarray, hyper: MlpHyper | None = None) -> MlpModel:
    return fit_mlp(features, labels, hyper)[0]


def mlp_predict(model: MlpModel, x: np.ndarray) -> int:
    return int(model.predict(np.asarray(x, dtype=np.float64).ravel())[0])
