import numpy as np
import pytest
from pydantic import ValidationError
from scipy.optimize import minimize

from src.errors import DimensionMismatch, NonFiniteFeature, SingleClass
from src.svm import (
    LinearSvmModel,
    SvmHyper,
    binary_objective,
    binary_objective_grad,
    fit_binary,
    svm_decision,
    svm_predict,
    svm_train,
)

X_1D = np.array([[-2.0], [-1.0], [1.0], [2.0]])
Y_1D = np.array([0, 0, 1, 1])

X_TINY = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
Y_TINY = np.array([-1.0, -1.0, -1.0, 1.0])


def _blobs(seed=0, n_per_class=15, classes=(0, 1, 2)):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0, 0.0], [6.0, 0.0, 0.0], [0.0, 6.0, 0.0]])[:len(classes)]
    X = np.vstack([rng.normal(c, 0.5, size=(n_per_class, 3)) for c in centers])
    y = np.repeat(np.asarray(classes), n_per_class)
    return X, y


def test_hyper_defaults_and_validation():
    h = SvmHyper()
    assert (h.c, h.tol, h.max_iter) == (1.0, 1e-4, 1000)
    with pytest.raises(ValidationError):
        SvmHyper(c=0.0)
    with pytest.raises(ValidationError):
        SvmHyper(max_iter=0)


def test_separable_1d_set():
    model = svm_train(X_1D, Y_1D)
    assert model.predict(X_1D).tolist() == [0, 0, 1, 1]
    assert model.class_ids.tolist() == [0, 1]


def test_objective_non_increasing():
    _, _, trace = fit_binary(X_TINY, Y_TINY, SvmHyper())
    diffs = np.diff(trace.objectives)
    assert np.all(diffs <= 0)
    assert trace.n_iter == len(trace.objectives) - 1


def test_tiny_instance_reaches_grid_optimum():
    c = 1.0
    w, b, trace = fit_binary(X_TINY, Y_TINY, SvmHyper(c=c))
    final = trace.objectives[-1]

    grid = np.arange(-4.0, 4.0001, 0.1)
    w1, w2, bb = np.meshgrid(grid, grid, grid, indexing="ij")
    margins = Y_TINY[None, None, None, :] * (
        w1[..., None] * X_TINY[:, 0] + w2[..., None] * X_TINY[:, 1] + bb[..., None]
    )
    hinge = np.maximum(1.0 - margins, 0.0)
    values = 0.5 * (w1 ** 2 + w2 ** 2) + c * (hinge ** 2).sum(axis=-1)
    assert final <= values.min() + 1e-3

    ref = minimize(lambda t: binary_objective(t, X_TINY, Y_TINY, c), np.zeros(3),
                   jac=lambda t: binary_objective_grad(t, X_TINY, Y_TINY, c)[1], method="BFGS",
                   options={"gtol": 1e-10})
    assert abs(final - ref.fun) < 1e-3


def test_final_objective_below_starting_point():
    X, y = _blobs(1)
    binary = np.where(y == 1, 1.0, -1.0)
    c = 0.7
    _, _, trace = fit_binary(X, binary, SvmHyper(c=c))
    assert trace.objectives[-1] <= c * len(binary)
    assert trace.objectives[0] == pytest.approx(c * len(binary))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(12, 4))
    y = np.where(rng.random(12) < 0.5, 1.0, -1.0)
    h = 1e-6
    for _ in range(10):
        theta = rng.normal(size=5)
        _, grad = binary_objective_grad(theta, X, y, 1.3)
        fd = np.array([
            (binary_objective(theta + h * e, X, y, 1.3) - binary_objective(theta - h * e, X, y, 1.3)) / (2 * h)
            for e in np.eye(5)
        ])
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(grad) + np.linalg.norm(fd), 1e-8)
        assert rel < 1e-5


def test_objective_and_grad_agree_on_value():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(6, 2))
    y = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    theta = rng.normal(size=3)
    assert binary_objective(theta, X, y, 2.0) == binary_objective_grad(theta, X, y, 2.0)[0]


# --- model / prediction -------------------------------------------------------

def test_decision_examples():
    model = LinearSvmModel(np.zeros((2, 3)), np.array([1.0, -1.0]), np.array([0, 1]))
    assert svm_decision(model, np.array([5.0, -2.0, 1.0])).tolist() == [1.0, -1.0]
    model = LinearSvmModel(np.array([[1.0, 2.0], [3.0, -1.0]]), np.array([0.5, 0.25]), np.array([0, 1]))
    assert svm_decision(model, np.zeros(2)).tolist() == [0.5, 0.25]


def test_decision_matches_dot_product_oracle():
    rng = np.random.default_rng(4)
    W = rng.normal(size=(10, 36))
    b = rng.normal(size=10)
    model = LinearSvmModel(W, b, np.arange(10))
    x = rng.normal(size=36)
    oracle = [sum(W[c, j] * x[j] for j in range(36)) + b[c] for c in range(10)]
    np.testing.assert_allclose(svm_decision(model, x), oracle, rtol=0, atol=1e-12)


def test_predict_argmax():
    model = LinearSvmModel(np.zeros((3, 1)), np.array([0.2, 0.9, 0.1]), np.array([0, 1, 2]))
    assert svm_predict(model, np.array([0.0])) == 1


def test_predict_tie_goes_to_lower_class():
    model = LinearSvmModel(np.zeros((2, 1)), np.array([0.5, 0.5]), np.array([3, 7]))
    assert svm_predict(model, np.array([1.0])) == 3


def test_predict_invariant_to_common_offset():
    X, y = _blobs(5)
    model = svm_train(X, y)
    shifted = LinearSvmModel(model.weights, model.biases + 12.5, model.class_ids)
    assert np.array_equal(model.predict(X), shifted.predict(X))


def test_decision_dimension_mismatch():
    model = LinearSvmModel(np.zeros((2, 3)), np.zeros(2), np.array([0, 1]))
    with pytest.raises(DimensionMismatch):
        svm_decision(model, np.zeros(4))


# --- training -----------------------------------------------------------------

def test_training_is_deterministic():
    X, y = _blobs(6)
    a = svm_train(X, y)
    b = svm_train(X, y)
    assert a.weights.tobytes() == b.weights.tobytes()
    assert a.biases.tobytes() == b.biases.tobytes()


def test_parallel_training_matches_sequential():
    X, y = _blobs(7)
    seq = svm_train(X, y, n_jobs=1)
    par = svm_train(X, y, n_jobs=2)
    assert seq.weights.tobytes() == par.weights.tobytes()
    assert seq.biases.tobytes() == par.biases.tobytes()


def test_training_separates_blobs():
    X, y = _blobs(8, classes=(2, 5, 9))
    model = svm_train(X, y)
    assert model.class_ids.tolist() == [2, 5, 9]
    assert np.mean(model.predict(X) == y) == 1.0


def test_single_class_rejected():
    with pytest.raises(SingleClass):
        svm_train(np.zeros((4, 2)), np.array([3, 3, 3, 3]))
    with pytest.raises(SingleClass):
        LinearSvmModel(np.zeros((1, 2)), np.zeros(1), np.array([0]))


def test_non_finite_features_rejected():
    X = np.array([[0.0, np.nan], [1.0, 1.0]])
    with pytest.raises(NonFiniteFeature):
        svm_train(X, np.array([0, 1]))
