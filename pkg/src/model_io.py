"""HWR1: line-oriented, diffable model file holding scaler + classifier + HOG settings.

    HWR1 <kind>
    scaler <d>
    <d means>
    <d stds>
    svm <C> <d>                     | mlp <L>
    class <id>  (C times)           | sizes <d> <h1> ... <C>
    <d weights>                     | classes <C ids>
    <bias>                          | layer <i> <out> <in>  (L times)
                                    | <out rows of in weights>
                                    | <out biases>
    hog orientations=9 cell=14 block=1 norm=l2hys
    meta <n>
    <key>=<value>  (n lines, keys sorted)
    end

Numbers are written with 17 significant digits so binary64 values round-trip exactly.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from src.errors import BadMagic, CorruptSection, DimensionMismatch, ModelFormatError, SingleClass, UnsupportedVersion
from src.features import BlockNorm, HogParams, ScalerParams, hog_length, transform
from src.mlp import MlpModel
from src.svm import LinearSvmModel

MAGIC = "HWR1"
KINDS = ("svm", "mlp")
IMAGE_SIDE = 28

Classifier = Union[LinearSvmModel, MlpModel]


@dataclass(frozen=True)
class ModelBundle:
    kind: str
    scaler: ScalerParams
    model: Classifier
    hog: HogParams = field(default_factory=HogParams)
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        expected = LinearSvmModel if self.kind == "svm" else MlpModel if self.kind == "mlp" else None
        if expected is None:
            raise ModelFormatError(f"unknown model kind {self.kind!r}")
        if not isinstance(self.model, expected):
            raise ModelFormatError(f"kind {self.kind!r} does not match a {type(self.model).__name__}")
        dims = {"scaler": self.scaler.dim, "model": self.model.input_dim,
                "hog": hog_length(IMAGE_SIDE, self.hog)}
        if len(set(dims.values())) != 1:
            raise DimensionMismatch(f"bundle dimensions disagree: {dims}")

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Digits for raw (unscaled) HOG rows."""
        return self.model.predict(transform(self.scaler, features))


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _row(values: np.ndarray) -> str:
    return " ".join(_num(v) for v in np.ravel(values))


def dumps(bundle: ModelBundle) -> str:
    lines = [f"{MAGIC} {bundle.kind}", f"scaler {bundle.scaler.dim}",
             _row(bundle.scaler.means), _row(bundle.scaler.stds)]

    m = bundle.model
    if isinstance(m, LinearSvmModel):
        lines.append(f"svm {m.class_ids.shape[0]} {m.input_dim}")
        for cid, w, b in zip(m.class_ids, m.weights, m.biases):
            lines += [f"class {int(cid)}", _row(w), _num(b)]
    else:
        lines.append(f"mlp {len(m.weights)}")
        lines.append("sizes " + " ".join(str(s) for s in m.layer_sizes))
        lines.append("classes " + " ".join(str(int(c)) for c in m.class_ids))
        for i, (W, b) in enumerate(zip(m.weights, m.biases)):
            lines.append(f"layer {i} {W.shape[0]} {W.shape[1]}")
            lines += [_row(r) for r in W]
            lines.append(_row(b))

    h = bundle.hog
    lines.append(f"hog orientations={h.orientations} cell={h.cell_side} block={h.block_cells} norm={h.block_norm.value}")
    lines.append(f"meta {len(bundle.provenance)}")
    for key in sorted(bundle.provenance):
        value = str(bundle.provenance[key])
        if "=" in key or "\n" in key or "\n" in value or not key:
            raise ModelFormatError(f"provenance entry {key!r} cannot be written")
        lines.append(f"{key}={value}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def save(bundle: ModelBundle, path: str | os.PathLike) -> None:
    Path(path).write_bytes(dumps(bundle).encode("utf-8"))


class _Lines:
    """Cursor over the file's lines that reports 1-based line numbers."""

    def __init__(self, text: str):
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.pos = 0

    @property
    def lineno(self) -> int:
        return self.pos + 1

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise CorruptSection(self.lineno, f"file ends where {what} was expected")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def fail(self, message: str) -> CorruptSection:
        return CorruptSection(self.pos, message)

    def header(self, keyword: str, n_ints: int) -> list[int]:
        parts = self.next(f"'{keyword}' header").split(" ")
        if parts[0] != keyword or len(parts) != n_ints + 1:
            raise self.fail(f"expected '{keyword}' with {n_ints} integer(s), got {' '.join(parts)!r}")
        return [self._int(p) for p in parts[1:]]

    def ints(self, keyword: str) -> list[int]:
        parts = self.next(f"'{keyword}' line").split(" ")
        if parts[0] != keyword:
            raise self.fail(f"expected '{keyword}', got {parts[0]!r}")
        return [self._int(p) for p in parts[1:]]

    def floats(self, count: int, what: str) -> np.ndarray:
        parts = self.next(what).split(" ")
        if len(parts) != count:
            raise self.fail(f"{what}: expected {count} numbers, found {len(parts)}")
        try:
            values = np.array([float(p) for p in parts])
        except ValueError as exc:
            raise self.fail(f"{what}: {exc}") from exc
        if not np.all(np.isfinite(values)):
            raise self.fail(f"{what}: non-finite value")
        return values

    def _int(self, token: str) -> int:
        try:
            return int(token)
        except ValueError:
            raise self.fail(f"{token!r} is not an integer") from None


def _check_ids(cur: _Lines, ids: list[int]) -> None:
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise cur.fail(f"class ids must be strictly increasing, got {ids}")


def _read_svm(cur: _Lines) -> LinearSvmModel:
    n_classes, d = cur.header("svm", 2)
    ids, weights, biases = [], [], []
    for _ in range(n_classes):
        (cid,) = cur.header("class", 1)
        ids.append(cid)
        weights.append(cur.floats(d, f"class {cid} weights"))
        biases.append(cur.floats(1, f"class {cid} bias")[0])
    _check_ids(cur, ids)
    return LinearSvmModel(np.vstack(weights) if weights else np.zeros((0, d)),
                          np.array(biases), np.array(ids, dtype=np.int64))


def _read_mlp(cur: _Lines) -> MlpModel:
    (n_layers,) = cur.header("mlp", 1)
    sizes = cur.ints("sizes")
    if len(sizes) != n_layers + 1:
        raise cur.fail(f"{n_layers} layers need {n_layers + 1} sizes, got {len(sizes)}")
    if any(s < 1 for s in sizes):
        raise cur.fail(f"layer sizes must be positive, got {sizes}")
    class_ids = cur.ints("classes")
    _check_ids(cur, class_ids)
    weights, biases = [], []
    for i in range(n_layers):
        idx, out_dim, in_dim = cur.header("layer", 3)
        if (idx, out_dim, in_dim) != (i, sizes[i + 1], sizes[i]):
            raise cur.fail(f"layer header {idx} {out_dim} {in_dim} does not match sizes {sizes}")
        weights.append(np.vstack([cur.floats(in_dim, f"layer {i} weights") for _ in range(out_dim)]))
        biases.append(cur.floats(out_dim, f"layer {i} biases"))
    return MlpModel(tuple(weights), tuple(biases), np.array(class_ids, dtype=np.int64))


def _read_hog(cur: _Lines) -> HogParams:
    parts = cur.next("'hog' line").split(" ")
    if parts[0] != "hog":
        raise cur.fail(f"expected 'hog', got {parts[0]!r}")
    try:
        kv = dict(p.split("=", 1) for p in parts[1:])
        return HogParams(
            orientations=int(kv["orientations"]),
            cell_side=int(kv["cell"]),
            block_cells=int(kv["block"]),
            block_norm=BlockNorm(kv["norm"]),
        )
    except (KeyError, ValueError) as exc:
        raise cur.fail(f"bad hog settings: {exc}") from None


def loads(text: str) -> ModelBundle:
    cur = _Lines(text)
    first = cur.next("magic").split(" ")
    if not first[0].startswith("HWR"):
        raise BadMagic(f"not an HWR model file (starts with {first[0][:8]!r})")
    if first[0] != MAGIC:
        raise UnsupportedVersion(f"{first[0]} files are not supported; expected {MAGIC}")
    if len(first) != 2 or first[1] not in KINDS:
        raise cur.fail(f"unknown model kind in {' '.join(first)!r}")
    kind = first[1]

    (d,) = cur.header("scaler", 1)
    means = cur.floats(d, "scaler means")
    stds = cur.floats(d, "scaler stds")
    try:
        scaler = ScalerParams(means, stds)
    except ValueError as exc:
        raise cur.fail(str(exc)) from None

    try:
        model = _read_svm(cur) if kind == "svm" else _read_mlp(cur)
    except (SingleClass, DimensionMismatch) as exc:
        raise cur.fail(str(exc)) from None
    hog = _read_hog(cur)

    (n_meta,) = cur.header("meta", 1)
    provenance = {}
    for _ in range(n_meta):
        line = cur.next("meta entry")
        if "=" not in line:
            raise cur.fail(f"meta entry {line!r} is not key=value")
        key, value = line.split("=", 1)
        provenance[key] = value
    if cur.next("'end'") != "end":
        raise cur.fail("expected 'end'")
    if cur.pos != len(cur.lines):
        raise CorruptSection(cur.lineno, "content after 'end'")

    return ModelBundle(kind=kind, scaler=scaler, model=model, hog=hog, provenance=provenance)


def load(path: str | os.PathLike) -> ModelBundle:
    raw = Path(path).read_bytes()
    if not raw.startswith(b"HWR"):
        raise BadMagic(f"{path}: not an HWR model file")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptSection(1, f"not UTF-8: {exc}") from None
    return loads(text)
