import numpy as np
import pytest

from src.imageproc import BoundingBox
from src.mlp import MlpHyper
from src.model_io import load, save
from src.modeling import train_digit_model
from src.recognition import RecognitionResult, annotate, compose_digit_sheet, recognize
from src.svm import SvmHyper
from tests.helpers import synthetic_digit, synthetic_digits


@pytest.fixture(scope="module")
def bundle():
    images, labels = synthetic_digits(60)
    return train_digit_model(images, labels, hyper=SvmHyper(max_iter=200))["bundle"]


def test_blank_page_has_no_detections(bundle):
    page = np.full((60, 80, 3), 255, dtype=np.uint8)
    result = recognize(bundle, page)
    assert len(result) == 0
    assert result.to_records() == []
    assert np.array_equal(annotate(page, result), page)


def test_digit_sheet_layout():
    digits = np.stack([synthetic_digit(d) for d in (1, 4, 7)])
    page, cells = compose_digit_sheet(digits, scale=2, gap=10, margin=20)
    assert page.shape == (2 * 20 + 56, 2 * 20 + 3 * 56 + 2 * 10, 3)
    assert cells == [BoundingBox(20, 20, 56, 56), BoundingBox(86, 20, 56, 56), BoundingBox(152, 20, 56, 56)]
    # ink is dark on white
    assert page[0, 0].tolist() == [255, 255, 255]
    assert page[cells[0].y:cells[0].y + 56, cells[0].x:cells[0].x + 56].min() == 0


def test_sheet_digits_are_found_in_order(bundle):
    labels = [2, 5, 8, 3, 6]
    page, cells = compose_digit_sheet(np.stack([synthetic_digit(d) for d in labels]))
    result = recognize(bundle, page)

    assert len(result) == len(labels)
    assert [b.x for b in result.boxes] == sorted(b.x for b in result.boxes)
    for box, cell in zip(result.boxes, cells):
        assert cell.x <= box.x and box.x + box.w <= cell.x + cell.w
        assert cell.y <= box.y and box.y + box.h <= cell.y + cell.h
    assert all(0 <= d <= 9 for d in result.digits)


def test_records_match_annotation(bundle):
    page, _ = compose_digit_sheet(np.stack([synthetic_digit(0), synthetic_digit(9)]))
    result = recognize(bundle, page)
    records = result.to_records()
    assert [set(r) for r in records] == [{"x", "y", "w", "h", "digit"}] * 2
    assert [r["digit"] for r in records] == result.digits

    out = annotate(page, result)
    for r in records:
        assert out[r["y"], r["x"]].tolist() == [0, 255, 0]


def test_result_accessors():
    result = RecognitionResult()
    assert len(result) == 0
    assert result.boxes == [] and result.digits == []


def test_mlp_bundle_runs_the_pipeline(tmp_path):
    images, labels = synthetic_digits(60)
    trained = train_digit_model(images, labels, kind="mlp", hyper=MlpHyper(max_iter=100))["bundle"]
    save(trained, tmp_path / "mlp.hwr")
    bundle = load(tmp_path / "mlp.hwr")
    assert bundle.kind == "mlp"

    page, cells = compose_digit_sheet(np.stack([synthetic_digit(d) for d in (1, 6, 8)]))
    result = recognize(bundle, page)
    assert len(result) == 3
    for box, cell in zip(result.boxes, cells):
        assert cell.x <= box.x and box.x + box.w <= cell.x + cell.w
    assert result.digits == recognize(trained, page).digits
