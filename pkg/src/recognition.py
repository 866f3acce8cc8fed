from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from src.features import hog
from src.imageproc import (
    BoundingBox,
    RgbImage,
    connected_components,
    draw_annotations,
    extract_roi,
    gaussian_blur_5x5,
    threshold_inv,
    to_grayscale,
)
from src.model_io import ModelBundle

logger = logging.getLogger(__name__)


class Detection(NamedTuple):
    box: BoundingBox
    digit: int


@dataclass(frozen=True)
class RecognitionResult:
    detections: list[Detection] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.detections)

    @property
    def boxes(self) -> list[BoundingBox]:
        return [d.box for d in self.detections]

    @property
    def digits(self) -> list[int]:
        return [d.digit for d in self.detections]

    def to_records(self) -> list[dict[str, int]]:
        return [{"x": d.box.x, "y": d.box.y, "w": d.box.w, "h": d.box.h, "digit": d.digit}
                for d in self.detections]


def recognize(bundle: ModelBundle, image: RgbImage) -> RecognitionResult:
    """grayscale -> blur -> threshold -> components -> per box ROI/HOG/scale/predict."""
    gray = gaussian_blur_5x5(to_grayscale(image))
    binary = threshold_inv(gray)
    boxes = connected_components(binary)
    logger.info("found %d candidate regions", len(boxes))
    if not boxes:
        return RecognitionResult()

    rows = np.vstack([hog(extract_roi(binary, box), bundle.hog) for box in boxes])
    digits = bundle.predict(rows)
    return RecognitionResult([Detection(box, int(d)) for box, d in zip(boxes, digits)])


def annotate(image: RgbImage, result: RecognitionResult) -> RgbImage:
    return draw_annotations(image, result.boxes, result.digits)


def compose_digit_sheet(digits: np.ndarray, scale: int = 3, gap: int = 24,
                        margin: int = 48) -> tuple[RgbImage, list[BoundingBox]]:
    """Paste white-on-black 28x28 digits as dark ink on a white page, left to right.

    Returns the page and the pasted cell of each digit (not the tight ink box).
    """
    digits = np.asarray(digits, dtype=np.uint8)
    n = digits.shape[0]
    side = 28 * scale
    width = 2 * margin + n * side + max(n - 1, 0) * gap
    height = 2 * margin + side
    page = np.full((height, width), 255, dtype=np.uint8)
    cells = []
    for i, digit in enumerate(digits):
        x = margin + i * (side + gap)
        big = np.kron(digit, np.ones((scale, scale), dtype=np.uint8))
        page[margin:margin + side, x:x + side] = 255 - big
        cells.append(BoundingBox(x, margin, side, side))
    return np.repeat(page[:, :, None], 3, axis=2), cells
