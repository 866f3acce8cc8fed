from __future__ import annotations

import logging
from typing import Any, Dict

import numpy as np
import pandas as pd

from src.features import HogParams, fit_scaler, hog_matrix, transform
from src.metrics import ClassReport, confusion, report
from src.mlp import MlpHyper, fit_mlp
from src.model_io import ModelBundle
from src.svm import SvmHyper, svm_train

logger = logging.getLogger(__name__)

MODEL_KINDS = ("svm", "mlp")
TRAINER = "gd-armijo"


def class_counts(labels: np.ndarray) -> pd.Series:
    """Samples per digit, indexed by digit (the "Count of digits in dataset" line)."""
    return pd.Series(np.asarray(labels, dtype=np.int64)).value_counts().sort_index()


def extract_features(images: np.ndarray, hog_params: HogParams, progress: bool = False) -> np.ndarray:
    logger.info("extracting HOG for %d images", len(images))
    return hog_matrix(images, hog_params, progress=progress, total=len(images))


def _provenance(kind: str, hyper: SvmHyper | MlpHyper, n_train: int) -> dict[str, str]:
    prov = {"kind": kind, "trainer": TRAINER, "n_train": str(n_train)}
    for key, value in hyper.model_dump().items():
        if isinstance(value, (tuple, list)):
            value = ",".join(str(v) for v in value)
        prov[key] = repr(value) if isinstance(value, float) else str(value)
    return prov


def train_digit_model(
    images: np.ndarray,
    labels: np.ndarray,
    kind: str = "svm",
    hyper: SvmHyper | MlpHyper | None = None,
    hog_params: HogParams | None = None,
    extra_provenance: Dict[str, str] | None = None,
    progress: bool = False,
    n_jobs: int = 1,
) -> Dict[str, Any]:
    """HOG -> standardize -> fit one classifier. Returns the bundle plus training metrics."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"model kind must be one of {MODEL_KINDS}, got {kind!r}")
    hog_params = hog_params or HogParams()
    labels = np.asarray(labels, dtype=np.int64)

    hog_features = extract_features(images, hog_params, progress)
    scaler = fit_scaler(hog_features)
    X = transform(scaler, hog_features)

    if kind == "svm":
        hyper = hyper or SvmHyper()
        model = svm_train(X, labels, hyper, n_jobs=n_jobs)
        iterations = None
    else:
        hyper = hyper or MlpHyper()
        model, trace = fit_mlp(X, labels, hyper)
        iterations = trace.n_iter

    provenance = _provenance(kind, hyper, len(labels))
    provenance.update(extra_provenance or {})
    bundle = ModelBundle(kind=kind, scaler=scaler, model=model, hog=hog_params, provenance=provenance)

    preds = model.predict(X)
    metrics = {
        "train_accuracy": float(np.mean(preds == labels)),
        "class_counts": class_counts(labels),
        "model_type": kind,
        "iterations": iterations,
    }
    return {"bundle": bundle, "metrics": metrics}


def predict_digits(bundle: ModelBundle, images: np.ndarray, progress: bool = False) -> np.ndarray:
    return bundle.predict(extract_features(images, bundle.hog, progress))


def evaluate_bundle(bundle: ModelBundle, images: np.ndarray, labels: np.ndarray,
                    progress: bool = False) -> tuple[ClassReport, np.ndarray]:
    preds = predict_digits(bundle, images, progress)
    return report(confusion(labels, preds)), preds
