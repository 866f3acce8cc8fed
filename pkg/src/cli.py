from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from src.dataset import (
    DEFAULT_SEED,
    SplitMix64,
    SplitSpec,
    desk_scale_digits,
    load_mnist,
    shuffled_indices,
    split,
)
from src.errors import DatasetError, HwrError, ImageError
from src.imageproc import resize_area, rescale_intensity
from src.knn import KnnModel, knn_predict, sweep_k
from src.metrics import confusion, format_report, report
from src.mlp import MlpHyper
from src.model_io import load, save
from src.modeling import evaluate_bundle, train_digit_model
from src.netpbm import read_rgb, write_image
from src.recognition import annotate, recognize
from src.svm import SvmHyper

logger = logging.getLogger(__name__)

DEFAULT_TRAIN_LIMIT = 10000
DEFAULT_EVAL_LIMIT = 2000
DEFAULT_KNN_LIMIT = 1797
DEFAULT_K_MAX = 29
EXAMINED_DIGITS = 5
INSPECT_SIDE = 32
ASCII_LEVELS = " .:-=+*#%@"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _exit_codes(fn):
    """Map domain errors to the stable exit codes: 1 input/IO, 2 domain."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DatasetError, ImageError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except (HwrError, ValidationError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    return wrapper


def _clamp(limit: int, available: int, what: str) -> int:
    if limit > available:
        logger.warning("--limit %d exceeds the %d available %s samples; using %d", limit, available, what, available)
        return available
    return limit


def _parse_hidden(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}", param_hint="--hidden")


def ascii_digit(grid: np.ndarray, max_value: float = 16.0) -> str:
    levels = len(ASCII_LEVELS) - 1
    idx = np.clip(np.floor(np.asarray(grid, dtype=np.float64) * levels / max_value + 0.5), 0, levels).astype(int)
    return "\n".join("".join(ASCII_LEVELS[i] for i in row) for row in idx)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logging on stderr.")
def cli(verbose: int):
    """Handwritten digit recognition: HOG features with SVM / MLP / KNN classifiers."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


@cli.command("train")
@click.option("--kind", type=click.Choice(["svm", "mlp"]), default="svm", show_default=True)
@click.option("--mnist-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--limit", type=click.IntRange(min=2), default=DEFAULT_TRAIN_LIMIT, show_default=True,
              help="Train on the first N samples after a seeded shuffle.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=DEFAULT_SEED, show_default=True)
@click.option("--c", "c", type=float, default=None, help="SVM penalty (default 1.0).")
@click.option("--alpha", type=float, default=None, help="MLP L2 penalty (default 1e-5).")
@click.option("--hidden", type=str, default=None, help="MLP hidden sizes, e.g. 5,2 (default).")
@click.option("--init-seed", type=click.IntRange(0, 2**64 - 1), default=None, help="MLP weight-init seed (default 1).")
@click.option("--tol", type=float, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel one-vs-rest SVM machines.")
@click.option("--progress/--no-progress", default=True)
@_exit_codes
def train_cmd(kind, mnist_dir, out_path, limit, seed, c, alpha, hidden, init_seed, tol, max_iter, jobs, progress):
    """Train an SVM or MLP on HOG features and write an HWR1 model file."""
    data = load_mnist(mnist_dir, "train")
    limit = _clamp(limit, len(data), "training")
    subset = data.subset(shuffled_indices(len(data), seed)[:limit])

    overrides = {"tol": tol, "max_iter": max_iter}
    if kind == "svm":
        overrides["c"] = c
        hyper = SvmHyper(**{k: v for k, v in overrides.items() if v is not None})
    else:
        overrides.update(alpha=alpha, hidden_sizes=_parse_hidden(hidden), seed=init_seed)
        hyper = MlpHyper(**{k: v for k, v in overrides.items() if v is not None})

    result = train_digit_model(
        subset.images(), subset.labels, kind=kind, hyper=hyper,
        extra_provenance={"split_seed": str(seed), "limit": str(limit)},
        progress=progress, n_jobs=jobs,
    )
    counts = {int(k): int(v) for k, v in result["metrics"]["class_counts"].items()}
    click.echo(f"Count of digits in dataset {counts}")

    save(result["bundle"], out_path)
    click.echo(f"training accuracy: {result['metrics']['train_accuracy']:.4f}")
    click.echo(f"model written to {out_path}")


@cli.command("knn-eval")
@click.option("--mnist-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--limit", type=click.IntRange(min=4), default=DEFAULT_KNN_LIMIT, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=DEFAULT_SEED, show_default=True)
@click.option("--k-max", type=click.IntRange(min=1), default=DEFAULT_K_MAX, show_default=True)
@click.option("--save-digits", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Also write the examined digits as 32x32 PGM files here.")
@_exit_codes
def knn_eval_cmd(mnist_dir, limit, seed, k_max, save_digits):
    """KNN on 8x8 downsampled digits: k sweep, test report, five examined digits."""
    data = load_mnist(mnist_dir, "train")
    limit = _clamp(limit, len(data), "training")
    small = desk_scale_digits(data.subset(shuffled_indices(len(data), seed)[:limit]))
    train, val, test = split(small, SplitSpec(seed=seed))

    click.echo(f"training data points: {len(train)}")
    click.echo(f"validation data points: {len(val)}")
    click.echo(f"testing data points: {len(test)}")

    k_values = [k for k in range(1, k_max + 1, 2) if k <= len(train)]
    best_k, accuracies = sweep_k(train, val, k_values)
    for k, acc in zip(k_values, accuracies):
        click.echo("k=%d, accuracy=%.2f%%" % (k, acc * 100))
    click.echo("k=%d achieved highest accuracy of %.2f%% on validation data"
               % (best_k, accuracies[k_values.index(best_k)] * 100))

    model = KnnModel(train.features, train.labels, best_k)
    predictions = np.array([knn_predict(model, x) for x in test.features])
    click.echo("EVALUATION ON TESTING DATA")
    click.echo(format_report(report(confusion(test.labels, predictions))))

    if save_digits is not None:
        save_digits.mkdir(parents=True, exist_ok=True)
    rng = SplitMix64(seed)
    for n in range(EXAMINED_DIGITS):
        i = rng.below(len(test))
        grid = test.features[i].reshape(8, 8)
        click.echo(f"I think that digit is: {predictions[i]}")
        click.echo(ascii_digit(grid))
        if save_digits is not None:
            big = resize_area(rescale_intensity(grid), INSPECT_SIDE, INSPECT_SIDE)
            write_image(save_digits / f"digit_{n}_pred_{predictions[i]}.pgm", big)


@cli.command("recognize")
@click.option("--model", "model_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--image", "image_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--out", "out_image", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--json", "out_json", type=click.Path(dir_okay=False, path_type=Path), default=None)
@_exit_codes
def recognize_cmd(model_path, image_path, out_image, out_json):
    """Find digits in a Netpbm image, write it annotated, optionally dump JSON boxes."""
    bundle = load(model_path)
    image = read_rgb(image_path)
    result = recognize(bundle, image)

    write_image(out_image, annotate(image, result))
    if out_json is not None:
        out_json.write_text(json.dumps(result.to_records()) + "\n", encoding="utf-8")
    click.echo(f"detected {len(result)} digit(s): {' '.join(str(d) for d in result.digits)}".rstrip())


@cli.command("evaluate")
@click.option("--model", "model_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--mnist-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--limit", type=click.IntRange(min=1), default=DEFAULT_EVAL_LIMIT, show_default=True)
@click.option("--part", type=click.Choice(["test", "train"]), default="test", show_default=True)
@click.option("--json", "out_json", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--progress/--no-progress", default=True)
@_exit_codes
def evaluate_cmd(model_path, mnist_dir, limit, part, out_json, progress):
    """Report precision / recall / F1 of a saved model on the first N MNIST samples."""
    bundle = load(model_path)
    data = load_mnist(mnist_dir, part)
    limit = _clamp(limit, len(data), part)
    subset = data.subset(np.arange(limit))

    rep, _ = evaluate_bundle(bundle, subset.images(), subset.labels, progress=progress)
    click.echo("EVALUATION ON TESTING DATA" if part == "test" else "EVALUATION ON TRAINING DATA")
    click.echo(format_report(rep))
    click.echo(f"accuracy: {rep.accuracy:.4f}")
    if out_json is not None:
        out_json.write_text(json.dumps(rep.to_dict(), indent=2) + "\n", encoding="utf-8")
