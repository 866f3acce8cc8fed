from __future__ import annotations

import logging
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import (
    DatasetError,
    EmptySplit,
    LabelOutOfRange,
    MissingDatasetFile,
    TrailingData,
    TruncatedFile,
    WrongDimensions,
    WrongMagic,
)
from src.imageproc import GrayImage, resize_area, round_half_up

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

# Standard file names inside --mnist-dir (already gunzipped)
MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}

DEFAULT_SEED = 42
NUM_CLASSES = 10
_MASK64 = (1 << 64) - 1


# ------------------------------------------------------------------------------
# SplitMix64
# ------------------------------------------------------------------------------
def prng_next(state: int) -> tuple[int, int]:
    """One SplitMix64 step. Returns (output, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


class SplitMix64:
    """Stateful wrapper over prng_next; the output stream depends only on the seed."""

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.state = seed

    def next_u64(self) -> int:
        value, self.state = prng_next(self.state)
        return value

    def next_unit(self) -> float:
        """Uniform float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def below(self, bound: int) -> int:
        return self.next_u64() % bound


def _fisher_yates(order: list[int], rng: SplitMix64) -> None:
    for i in range(len(order) - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]


def shuffled_indices(n: int, seed: int) -> np.ndarray:
    order = list(range(n))
    _fisher_yates(order, SplitMix64(seed))
    return np.asarray(order, dtype=np.int64)


# ------------------------------------------------------------------------------
# Datasets
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray   # (n, d)
    labels: np.ndarray     # (n,)
    image_side: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise WrongDimensions(f"features must be a matrix, got shape {self.features.shape}")
        if self.features.shape[0] != self.labels.shape[0]:
            raise WrongDimensions(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES):
            raise LabelOutOfRange(f"labels must be digits, got range {self.labels.min()}..{self.labels.max()}")
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, indices: Sequence[int] | np.ndarray) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx].copy(), self.labels[idx].copy(), self.image_side)

    def images(self) -> np.ndarray:
        """Rows reshaped back to (n, side, side)."""
        return self.features.reshape(len(self), self.image_side, self.image_side)


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    test_fraction: float = Field(0.25, gt=0.0, lt=1.0)
    val_fraction: float = Field(0.10, ge=0.0, lt=1.0)
    seed: int = Field(DEFAULT_SEED, ge=0, le=_MASK64)


def _ceil_count(n: int, fraction: float) -> int:
    # plain float product: 100 * 0.07 is 7.000000000000001, so 8 items
    return math.ceil(n * fraction)


def split(
    data: LabeledDataset, spec: SplitSpec
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Seeded train / validation / test partition.

    Fisher-Yates over 0..n with SplitMix64(seed); the first ceil(n * test)
    indices are the test part. The remainder is shuffled again by the same
    generator and its first ceil(m * val) indices become validation.
    """
    n = len(data)
    if n < 4:
        raise EmptySplit(f"need at least 4 samples to split, got {n}")

    rng = SplitMix64(spec.seed)
    order = list(range(n))
    _fisher_yates(order, rng)
    n_test = _ceil_count(n, spec.test_fraction)
    test_idx, rest = order[:n_test], order[n_test:]

    _fisher_yates(rest, rng)
    n_val = _ceil_count(len(rest), spec.val_fraction)
    val_idx, train_idx = rest[:n_val], rest[n_val:]

    if not test_idx or not train_idx or (spec.val_fraction > 0 and not val_idx):
        raise EmptySplit(
            f"split of {n} samples gives train={len(train_idx)} val={len(val_idx)} test={len(test_idx)}"
        )
    return data.subset(train_idx), data.subset(val_idx), data.subset(test_idx)


# ------------------------------------------------------------------------------
# IDX files
# ------------------------------------------------------------------------------
def _read_header(data: bytes, n_fields: int, magic: int) -> tuple[int, ...]:
    header_len = 4 * n_fields
    if len(data) < header_len:
        raise TruncatedFile(f"header needs {header_len} bytes, file has {len(data)}")
    fields = struct.unpack(f">{n_fields}I", data[:header_len])
    if fields[0] != magic:
        raise WrongMagic(f"expected magic 0x{magic:08X}, found 0x{fields[0]:08X}")
    return fields[1:]


def _payload(data: bytes, offset: int, expected: int) -> bytes:
    got = len(data) - offset
    if got < expected:
        raise TruncatedFile(f"payload should hold {expected} bytes, found {got}")
    if got > expected:
        raise TrailingData(f"{got - expected} bytes after the declared payload")
    return data[offset:]


def parse_idx_images(data: bytes) -> np.ndarray:
    """(count, rows, cols) uint8 array from an idx3-ubyte buffer."""
    count, rows, cols = _read_header(data, 4, IMAGES_MAGIC)
    raw = _payload(data, 16, count * rows * cols)
    return np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols).copy()


def parse_idx_labels(data: bytes) -> np.ndarray:
    (count,) = _read_header(data, 2, LABELS_MAGIC)
    labels = np.frombuffer(_payload(data, 8, count), dtype=np.uint8).astype(np.int64)
    bad = np.flatnonzero(labels >= NUM_CLASSES)
    if bad.size:
        raise LabelOutOfRange(f"label {labels[bad[0]]} at index {bad[0]} is not a digit")
    return labels


def write_idx_images(images: np.ndarray) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise WrongDimensions(f"expected (count, rows, cols), got shape {images.shape}")
    count, rows, cols = images.shape
    return struct.pack(">4I", IMAGES_MAGIC, count, rows, cols) + images.tobytes()


def write_idx_labels(labels: Sequence[int] | np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">2I", LABELS_MAGIC, labels.shape[0]) + labels.tobytes()


def load_mnist(mnist_dir: str | os.PathLike, part: str = "train") -> LabeledDataset:
    """Read one MNIST part ("train" or "test") as raw 784-pixel rows."""
    if part not in MNIST_FILES:
        raise DatasetError(f"unknown MNIST part {part!r}; use 'train' or 'test'")
    image_name, label_name = MNIST_FILES[part]
    root = Path(mnist_dir)
    paths = [root / image_name, root / label_name]
    for p in paths:
        if not p.is_file():
            raise MissingDatasetFile(f"missing {p} (files must be gunzipped)")

    images = parse_idx_images(paths[0].read_bytes())
    labels = parse_idx_labels(paths[1].read_bytes())
    if images.shape[0] != labels.shape[0]:
        raise DatasetError(f"{images.shape[0]} images but {labels.shape[0]} labels in {root}")
    if images.shape[1] != images.shape[2]:
        raise WrongDimensions(f"expected square images, got {images.shape[1]}x{images.shape[2]}")

    logger.info("loaded %d %s images of %dx%d from %s", images.shape[0], part, images.shape[1], images.shape[2], root)
    side = images.shape[1]
    return LabeledDataset(images.reshape(images.shape[0], side * side), labels, side)


# ------------------------------------------------------------------------------
# 8x8 desk-scale digits
# ------------------------------------------------------------------------------
def downsample_to_8x8(img: GrayImage) -> np.ndarray:
    """Area-average a 28x28 digit to 8x8 and quantize to 0..16."""
    if img.shape != (28, 28):
        raise WrongDimensions(f"expected a 28x28 image, got shape {img.shape}")
    small = resize_area(np.asarray(img, dtype=np.uint8), 8, 8).astype(np.float64)
    return np.minimum(round_half_up(small * 16.0 / 255.0), 16)


def desk_scale_digits(data: LabeledDataset) -> LabeledDataset:
    """64-feature (0..16) version of a 28x28 dataset, the KNN experiment's input."""
    small = np.stack([downsample_to_8x8(img) for img in data.images()]) if len(data) else np.zeros((0, 8, 8))
    return LabeledDataset(small.reshape(len(data), 64).astype(np.float64), data.labels.copy(), 8)
