from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.dataset import NUM_CLASSES, LabeledDataset
from src.errors import DimensionMismatch, EmptyInput

logger = logging.getLogger(__name__)

DEFAULT_K_VALUES = tuple(range(1, 30, 2))


@dataclass(frozen=True)
class KnnModel:
    train_features: np.ndarray
    train_labels: np.ndarray
    k: int

    def __post_init__(self):
        n = self.train_features.shape[0]
        if self.train_labels.shape[0] != n:
            raise DimensionMismatch(f"{n} training rows but {self.train_labels.shape[0]} labels")
        if not 1 <= self.k <= n:
            raise ValueError(f"k must be in 1..{n}, got {self.k}")

    def predict(self, x: np.ndarray) -> int:
        return knn_predict(self, x)


def neighbor_order(train: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Training indices sorted by squared distance to x; ties keep the lower index."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != train.shape[1]:
        raise DimensionMismatch(f"query has {x.shape[0]} features, model expects {train.shape[1]}")
    diff = train.astype(np.float64) - x
    dist = np.einsum("ij,ij->i", diff, diff)
    return np.argsort(dist, kind="stable")


def _vote(labels: np.ndarray) -> int:
    # argmax returns the first maximum, i.e. the smallest tied digit
    return int(np.argmax(np.bincount(labels.astype(np.int64), minlength=NUM_CLASSES)))


def knn_predict(model: KnnModel, x: np.ndarray) -> int:
    order = neighbor_order(model.train_features, x)
    return _vote(model.train_labels[order[:model.k]])


def sweep_k(
    train: LabeledDataset, val: LabeledDataset, k_values: Sequence[int] = DEFAULT_K_VALUES
) -> tuple[int, list[float]]:
    """Validation accuracy for each k; best k is the earliest maximum."""
    if not k_values:
        raise EmptyInput("k_values must not be empty")
    if len(val) == 0:
        raise EmptyInput("validation set is empty")
    for k in k_values:
        if not 1 <= k <= len(train):
            raise ValueError(f"k={k} is outside 1..{len(train)}")

    # neighbour order does not depend on k; sort once per validation point
    orders = [neighbor_order(train.features, x) for x in val.features]
    accuracies = []
    for k in k_values:
        hits = sum(_vote(train.labels[order[:k]]) == label for order, label in zip(orders, val.labels))
        accuracies.append(hits / len(val))
        logger.debug("k=%d validation accuracy %.4f", k, accuracies[-1])

    best = int(np.argmax(accuracies))
    return int(k_values[best]), accuracies
