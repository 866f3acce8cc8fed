from pathlib import Path

import numpy as np

from src.dataset import MNIST_FILES, write_idx_images, write_idx_labels


def synthetic_digit(label: int, shift: int = 0) -> np.ndarray:
    """28x28 white-on-black bar whose orientation and position encode the label."""
    img = np.zeros((28, 28), dtype=np.uint8)
    off = 4 + 2 * label
    if label % 2 == 0:
        img[5:23, off:off + 4] = 255
    else:
        img[off:off + 4, 5:23] = 255
    return np.roll(img, shift, axis=0 if label % 2 == 0 else 1)


def synthetic_digits(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 10
    images = np.stack([synthetic_digit(int(d), int(rng.integers(-1, 2))) for d in labels])
    return images, labels


def write_mnist_dir(root: Path, n_train: int = 60, n_test: int = 20) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for part, n, seed in (("train", n_train, 0), ("test", n_test, 1)):
        images, labels = synthetic_digits(n, seed)
        image_name, label_name = MNIST_FILES[part]
        (root / image_name).write_bytes(write_idx_images(images))
        (root / label_name).write_bytes(write_idx_labels(labels))
    return root


