from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.preprocessing import StandardScaler
from tqdm import tqdm

from src.errors import DimensionMismatch, EmptyMatrix, WrongDimensions

logger = logging.getLogger(__name__)

EPS = 1e-10
L2HYS_CLIP = 0.2


class BlockNorm(str, Enum):
    NONE = "none"
    L1 = "l1"
    L2 = "l2"
    L2HYS = "l2hys"


class HogParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    orientations: int = Field(9, ge=1)
    cell_side: int = Field(14, ge=1)
    block_cells: int = Field(1, ge=1)
    block_norm: BlockNorm = BlockNorm.L2HYS


def hog_length(image_side: int, params: HogParams) -> int:
    cells = image_side // params.cell_side
    blocks = cells - params.block_cells + 1
    return blocks * blocks * params.block_cells ** 2 * params.orientations


def _gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # undivided central differences, zero on the outermost rows/columns
    g_row = np.zeros_like(img)
    g_col = np.zeros_like(img)
    g_row[1:-1, :] = img[2:, :] - img[:-2, :]
    g_col[:, 1:-1] = img[:, 2:] - img[:, :-2]
    return g_row, g_col


def _normalize_block(block: np.ndarray, norm: BlockNorm) -> np.ndarray:
    if norm is BlockNorm.NONE:
        return block
    if norm is BlockNorm.L1:
        return block / (np.abs(block).sum() + EPS)
    out = block / (np.sqrt(np.sum(block * block)) + EPS)
    if norm is BlockNorm.L2HYS:
        out = np.minimum(out, L2HYS_CLIP)
        out = out / (np.sqrt(np.sum(out * out)) + EPS)
    return out


def cell_histograms(img: np.ndarray, params: HogParams) -> np.ndarray:
    """(cells_y, cells_x, orientations) unnormalized, per-pixel-averaged histograms."""
    g_row, g_col = _gradients(img)
    magnitude = np.hypot(g_row, g_col)
    orientation = np.rad2deg(np.arctan2(g_row, g_col)) % 180.0
    bins = np.floor(orientation / (180.0 / params.orientations)).astype(np.int64)
    bins[bins >= params.orientations] = 0

    cell = params.cell_side
    cells_y, cells_x = img.shape[0] // cell, img.shape[1] // cell
    hist = np.zeros((cells_y, cells_x, params.orientations))
    for cy in range(cells_y):
        for cx in range(cells_x):
            window = np.s_[cy * cell:(cy + 1) * cell, cx * cell:(cx + 1) * cell]
            hist[cy, cx] = np.bincount(
                bins[window].ravel(), weights=magnitude[window].ravel(), minlength=params.orientations
            )
    return hist / float(cell * cell)


def hog(img: np.ndarray, params: HogParams | None = None) -> np.ndarray:
    """HOG descriptor; 36 values for a 28x28 image under the default params."""
    params = params or HogParams()
    img = np.asarray(img)
    if img.ndim != 2:
        raise WrongDimensions(f"expected a 2-D image, got shape {img.shape}")
    h, w = img.shape
    if h % params.cell_side or w % params.cell_side:
        raise WrongDimensions(f"{h}x{w} image is not divisible into {params.cell_side}px cells")
    b = params.block_cells
    if h // params.cell_side < b or w // params.cell_side < b:
        raise WrongDimensions(f"{h}x{w} image is too small for {b}x{b}-cell blocks")

    hist = cell_histograms(img.astype(np.float64), params)
    cells_y, cells_x = hist.shape[:2]
    blocks = []
    for by in range(cells_y - b + 1):
        for bx in range(cells_x - b + 1):
            block = hist[by:by + b, bx:bx + b].ravel()
            blocks.append(_normalize_block(block, params.block_norm))
    return np.concatenate(blocks)


def hog_matrix(images: Iterable[np.ndarray], params: HogParams | None = None,
               progress: bool = False, total: int | None = None) -> np.ndarray:
    params = params or HogParams()
    rows = [hog(img, params) for img in tqdm(images, total=total, desc="hog", disable=not progress)]
    if not rows:
        return np.zeros((0, 0))
    return np.vstack(rows)


# ------------------------------------------------------------------------------
# Standardization
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class ScalerParams:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        if self.means.shape != self.stds.shape or self.means.ndim != 1:
            raise DimensionMismatch(f"means {self.means.shape} and stds {self.stds.shape} differ")
        if not np.all(self.stds > 0):
            raise ValueError("scaler standard deviations must be strictly positive")

    @property
    def dim(self) -> int:
        return int(self.means.shape[0])


def fit_scaler(features: np.ndarray) -> ScalerParams:
    """Column means and population stds; zero-variance columns keep std 1."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix(f"cannot fit a scaler on shape {X.shape}")
    pp = StandardScaler().fit(X)
    return ScalerParams(means=pp.mean_.copy(), stds=pp.scale_.copy())


def transform(scaler: ScalerParams, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != scaler.dim:
        raise DimensionMismatch(f"scaler expects {scaler.dim} columns, got {X.shape[1]}")
    return (X - scaler.means) / scaler.stds
