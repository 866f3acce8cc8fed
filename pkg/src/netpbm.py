"""Netpbm image I/O.

Reads binary P5/P6 and plain P2/P3 (comments allowed in headers); writes
binary P5 for grayscale and P6 for color, maxval 255.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.errors import ImageFormatError, WrongDimensions

_NETPBM_MAGICS = {b"P2", b"P3", b"P5", b"P6"}


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Return an (h, w) array for P2/P5 files and an (h, w, 3) array for P3/P6."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(2)
    if magic not in _NETPBM_MAGICS:
        raise ImageFormatError(f"{path}: not a P2/P3/P5/P6 Netpbm file (magic {magic!r})")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode == "RGB":
                return np.asarray(im, dtype=np.uint8).copy()
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8).copy()
            # maxval > 255 decodes to 16/32-bit modes; bring it down to bytes
            return np.asarray(im.convert("RGB" if magic in (b"P3", b"P6") else "L"), dtype=np.uint8).copy()
    except (UnidentifiedImageError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc


def read_rgb(path: str | os.PathLike) -> np.ndarray:
    """Read any supported Netpbm file as color; gray files are replicated to 3 channels."""
    img = read_image(path)
    if img.ndim == 2:
        return np.repeat(img[:, :, None], 3, axis=2)
    return img


def write_image(path: str | os.PathLike, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ImageFormatError(f"only 8-bit images can be written, got {img.dtype}")
    if not (img.ndim == 2 or (img.ndim == 3 and img.shape[2] == 3)):
        raise WrongDimensions(f"cannot write an image of shape {img.shape}")
    Image.fromarray(img).save(path, format="PPM")
