from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from src.errors import DimensionMismatch, NonFiniteFeature, SingleClass
from src.optim import DescentTrace, armijo_descent

logger = logging.getLogger(__name__)


class SvmHyper(BaseModel):
    model_config = ConfigDict(frozen=True)

    c: float = Field(1.0, gt=0.0)
    tol: float = Field(1e-4, gt=0.0)
    max_iter: int = Field(1000, ge=1)


@dataclass(frozen=True)
class LinearSvmModel:
    weights: np.ndarray    # (C, d)
    biases: np.ndarray     # (C,)
    class_ids: np.ndarray  # (C,)

    def __post_init__(self):
        c = self.class_ids.shape[0]
        if c < 2:
            raise SingleClass(f"a one-vs-rest model needs at least 2 classes, got {c}")
        if self.weights.shape[0] != c or self.biases.shape != (c,):
            raise DimensionMismatch(
                f"weights {self.weights.shape} / biases {self.biases.shape} do not match {c} classes"
            )

    @property
    def input_dim(self) -> int:
        return int(self.weights.shape[1])

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise DimensionMismatch(f"model expects {self.input_dim} features, got {X.shape[-1]}")
        return X @ self.weights.T + self.biases

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = np.atleast_2d(self.decision(X))
        tied = scores == scores.max(axis=1, keepdims=True)
        # lowest class id among the tied maxima
        return np.where(tied, self.class_ids, np.iinfo(np.int64).max).min(axis=1)


# ------------------------------------------------------------------------------
# Binary squared-hinge problem over theta = [w, b]
# ------------------------------------------------------------------------------
def binary_objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, c: float) -> float:
    w, b = theta[:-1], theta[-1]
    hinge = np.maximum(1.0 - y * (X @ w + b), 0.0)
    return float(0.5 * (w @ w) + c * (hinge @ hinge))


def binary_objective_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, c: float) -> tuple[float, np.ndarray]:
    w, b = theta[:-1], theta[-1]
    hinge = np.maximum(1.0 - y * (X @ w + b), 0.0)
    coef = -2.0 * c * y * hinge
    grad = np.empty_like(theta)
    grad[:-1] = w + X.T @ coef
    grad[-1] = coef.sum()
    return float(0.5 * (w @ w) + c * (hinge @ hinge)), grad


def fit_binary(X: np.ndarray, y: np.ndarray, hyper: SvmHyper) -> tuple[np.ndarray, float, DescentTrace]:
    """Solve one +1/-1 problem from w = 0, b = 0. Returns (w, b, trace)."""
    theta0 = np.zeros(X.shape[1] + 1)
    theta, trace = armijo_descent(
        lambda t: binary_objective(t, X, y, hyper.c),
        lambda t: binary_objective_grad(t, X, y, hyper.c),
        theta0,
        tol=hyper.tol,
        max_iter=hyper.max_iter,
    )
    return theta[:-1], float(theta[-1]), trace


def _fit_class(X: np.ndarray, labels: np.ndarray, cls: int, hyper: SvmHyper) -> tuple[np.ndarray, float, DescentTrace]:
    y = np.where(labels == cls, 1.0, -1.0)
    return fit_binary(X, y, hyper)


def svm_train(features: np.ndarray, labels: np.ndarray, hyper: SvmHyper | None = None,
              n_jobs: int = 1) -> LinearSvmModel:
    """One-vs-rest linear SVM; one binary machine per digit present in labels."""
    hyper = hyper or SvmHyper()
    X = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise DimensionMismatch(f"features {X.shape} do not match {labels.shape[0]} labels")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("features contain NaN or infinity")
    class_ids = np.unique(labels)
    if class_ids.shape[0] < 2:
        raise SingleClass(f"need at least 2 classes for classification. Found: {class_ids.tolist()}")

    results = Parallel(n_jobs=n_jobs)(
        delayed(_fit_class)(X, labels, int(cls), hyper) for cls in class_ids
    )
    for cls, (_, _, trace) in zip(class_ids, results):
        logger.info("class %d: %d iterations, stop=%s, objective=%.6g", cls, trace.n_iter, trace.reason, trace.objectives[-1])
        if trace.reason == "max_iter":
            logger.warning("class %d stopped at max_iter=%d with |grad|=%.3g", cls, hyper.max_iter, trace.grad_norm)

    return LinearSvmModel(
        weights=np.vstack([w for w, _, _ in results]),
        biases=np.array([b for _, b, _ in results]),
        class_ids=class_ids.astype(np.int64),
    )


def svm_decision(model: LinearSvmModel, x: np.ndarray) -> np.ndarray:
    return model.decision(np.asarray(x, dtype=np.float64).ravel())


def svm_predict(model: LinearSvmModel, x: np.ndarray) -> int:
    return int(model.predict(np.asarray(x, dtype=np.float64).ravel())[0])
