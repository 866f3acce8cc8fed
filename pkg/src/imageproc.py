from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from src.errors import DegenerateRoi, LengthMismatch, UnknownGlyph, WrongDimensions

GrayImage = npt.NDArray[np.uint8]     # (h, w)
BinaryImage = npt.NDArray[np.uint8]   # (h, w), values in {0, 255}
RgbImage = npt.NDArray[np.uint8]      # (h, w, 3)

THRESHOLD = 90
GAUSS_SIGMA = 1.1                      # what sigma=0 means for a 5x5 kernel
ROI_SCALE = 1.6
ROI_SIDE = 28

OUTLINE_COLOR = (0, 255, 0)
GLYPH_COLOR = (0, 255, 255)
OUTLINE_THICKNESS = 3
GLYPH_SCALE = 4

# 5x7 bitmap font, one string per row
DIGIT_GLYPHS: dict[int, tuple[str, ...]] = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}


class BoundingBox(NamedTuple):
    x: int
    y: int
    w: int
    h: int


def round_half_up(values: npt.ArrayLike) -> np.ndarray:
    """Round to the nearest integer, halves going up, then clamp to a byte.

    The tiny bias absorbs binary representation error in values such as
    127.49999999999999 that are exact halves in decimal.
    """
    out = np.floor(np.asarray(values, dtype=np.float64) + 0.5 + 1e-9)
    return np.clip(out, 0, 255).astype(np.uint8)


def to_grayscale(img: RgbImage) -> GrayImage:
    if img.ndim != 3 or img.shape[2] != 3:
        raise WrongDimensions(f"expected an (h, w, 3) color image, got shape {img.shape}")
    rgb = img.astype(np.float64)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return round_half_up(gray)


def gaussian_taps(sigma: float = GAUSS_SIGMA, radius: int = 2) -> np.ndarray:
    i = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(i * i) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def gaussian_blur_5x5(img: GrayImage) -> GrayImage:
    _require_gray(img)
    taps = gaussian_taps()
    # scipy's "mirror" border is reflect-without-repeating-edge: 2,1,0,1,2
    rows = ndimage.correlate1d(img.astype(np.float64), taps, axis=1, mode="mirror")
    both = ndimage.correlate1d(rows, taps, axis=0, mode="mirror")
    return round_half_up(both)


def threshold_inv(img: GrayImage, thresh: int = THRESHOLD) -> BinaryImage:
    _require_gray(img)
    return np.where(img <= thresh, 255, 0).astype(np.uint8)


def connected_components(img: BinaryImage) -> list[BoundingBox]:
    """Tight boxes of the 8-connected foreground components, sorted by (x, y)."""
    _require_gray(img)
    labels, count = ndimage.label(img == 255, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return []
    boxes = []
    for rows, cols in ndimage.find_objects(labels):
        boxes.append(BoundingBox(
            x=int(cols.start),
            y=int(rows.start),
            w=int(cols.stop - cols.start),
            h=int(rows.stop - rows.start),
        ))
    return sorted(boxes, key=lambda b: (b.x, b.y))


def _coverage(n_in: int, n_out: int) -> np.ndarray:
    # (n_out, n_in) matrix of the fraction of each source pixel under each output pixel
    scale = n_in / n_out
    starts = np.arange(n_out, dtype=np.float64)[:, None] * scale
    ends = starts + scale
    left = np.arange(n_in, dtype=np.float64)[None, :]
    overlap = np.minimum(ends, left + 1.0) - np.maximum(starts, left)
    return np.clip(overlap, 0.0, None) / scale


def resize_area(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Box-filter resampling with fractional coverage (area interpolation)."""
    _require_gray(img)
    if out_w < 1 or out_h < 1:
        raise WrongDimensions(f"output size must be positive, got {out_w}x{out_h}")
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    wy = _coverage(h, out_h)
    wx = _coverage(w, out_w)
    out = wy @ img.astype(np.float64) @ wx.T
    return round_half_up(out)


def dilate3x3(img: GrayImage) -> GrayImage:
    _require_gray(img)
    # zero padding is the same as ignoring outside neighbours for unsigned bytes
    return ndimage.maximum_filter(img, size=3, mode="constant", cval=0)


def roi_window(box: BoundingBox) -> tuple[int, int, int]:
    """Top row, left column and side of the square window around a box."""
    side = int(box.h * ROI_SCALE)
    top = box.y + box.h // 2 - side // 2
    left = box.x + box.w // 2 - side // 2
    return top, left, side


def extract_roi(img: BinaryImage, box: BoundingBox) -> GrayImage:
    _require_gray(img)
    top, left, side = roi_window(box)
    if side == 0:
        raise DegenerateRoi(f"box {tuple(box)} gives an empty window")

    window = np.zeros((side, side), dtype=np.uint8)
    h, w = img.shape
    r0, r1 = max(top, 0), min(top + side, h)
    c0, c1 = max(left, 0), min(left + side, w)
    if r0 < r1 and c0 < c1:
        window[r0 - top:r1 - top, c0 - left:c1 - left] = img[r0:r1, c0:c1]

    roi = resize_area(window, ROI_SIDE, ROI_SIDE)
    return dilate3x3(roi)


def _fill(img: RgbImage, x0: int, y0: int, x1: int, y1: int, color: tuple[int, int, int]) -> None:
    # inclusive corners, clipped
    h, w = img.shape[:2]
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, w - 1), min(y1, h - 1)
    if x0 <= x1 and y0 <= y1:
        img[y0:y1 + 1, x0:x1 + 1] = color


def outline_rects(box: BoundingBox) -> list[tuple[int, int, int, int]]:
    """The four bands of a 3 px outline centred on the lines x, x+w, y, y+h."""
    half = OUTLINE_THICKNESS // 2
    x0, y0, x1, y1 = box.x, box.y, box.x + box.w, box.y + box.h
    return [
        (x0 - half, y0 - half, x1 + half, y0 + half),
        (x0 - half, y1 - half, x1 + half, y1 + half),
        (x0 - half, y0 - half, x0 + half, y1 + half),
        (x1 - half, y0 - half, x1 + half, y1 + half),
    ]


def glyph_origin(box: BoundingBox) -> tuple[int, int]:
    glyph_h = len(DIGIT_GLYPHS[0]) * GLYPH_SCALE
    return box.x, box.y - OUTLINE_THICKNESS // 2 - 1 - glyph_h


def draw_annotations(img: RgbImage, boxes: Sequence[BoundingBox], labels: Sequence[int]) -> RgbImage:
    if len(boxes) != len(labels):
        raise LengthMismatch(f"{len(boxes)} boxes but {len(labels)} labels")
    if img.ndim != 3 or img.shape[2] != 3:
        raise WrongDimensions(f"expected an (h, w, 3) color image, got shape {img.shape}")
    bad = [int(d) for d in labels if int(d) not in DIGIT_GLYPHS]
    if bad:
        raise UnknownGlyph(f"no glyph for label {bad[0]}; labels must be digits 0..9")
    out = img.copy()
    for box in boxes:
        for rect in outline_rects(box):
            _fill(out, *rect, OUTLINE_COLOR)
    for box, digit in zip(boxes, labels):
        gx, gy = glyph_origin(box)
        for r, row in enumerate(DIGIT_GLYPHS[int(digit)]):
            for c, bit in enumerate(row):
                if bit == "1":
                    x = gx + c * GLYPH_SCALE
                    y = gy + r * GLYPH_SCALE
                    _fill(out, x, y, x + GLYPH_SCALE - 1, y + GLYPH_SCALE - 1, GLYPH_COLOR)
    return out


def rescale_intensity(img: np.ndarray) -> GrayImage:
    """Stretch to the full 0..255 range (min -> 0, max -> 255)."""
    arr = np.asarray(img, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if math.isclose(hi, lo):
        return np.zeros(arr.shape, dtype=np.uint8)
    return round_half_up((arr - lo) * 255.0 / (hi - lo))


def _require_gray(img: np.ndarray) -> None:
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise WrongDimensions(f"expected a non-empty (h, w) image, got shape {img.shape}")
