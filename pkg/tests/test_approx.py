import numpy as np
import pytest

from adadkrr.approx import (
    BasisExpansion,
    CoeffMatrix,
    approx_coefficients,
    eval_expansion,
    fit_local_approx,
    synthesize,
)
from adadkrr.errors import InputShapeError, WeightSumError
from adadkrr.kernels import KernelSpec, eval_kernel, gram
from adadkrr.krr import DataSet, fit_krr, predict
from adadkrr.qmc import generate_centers


def _objective(kernel, anchors, centers, targets, mu, a):
    resid = gram(kernel, anchors, centers) @ a - targets
    return np.mean(resid**2) + mu * a @ gram(kernel, centers) @ a


def test_centers_equal_training_inputs_reproduce_estimator(wendland):
    X = generate_centers("sobol", 20, 2).points
    y = np.cos(4 * X[:, 0]) * X[:, 1]
    est = fit_krr(DataSet(X, y), wendland, 1e-3)
    exp = fit_local_approx(est, X, X, 1e-12)
    np.testing.assert_allclose(eval_expansion(exp, X), predict(est, X), rtol=0, atol=1e-4)


def test_zero_estimator_gives_zero_coefficients(rng, wendland):
    X = rng.random((15, 3))
    est = fit_krr(DataSet(X, np.zeros(15)), wendland, 0.1)
    exp = fit_local_approx(est, X, generate_centers("sobol", 6, 3), 1e-4)
    np.testing.assert_array_equal(exp.coeffs, np.zeros(6))


def test_coefficients_minimise_objective(rng, wendland):
    X = rng.random((30, 3))
    est = fit_krr(DataSet(X, rng.standard_normal(30)), wendland, 1e-2)
    centers = generate_centers("sobol", 10, 3)
    mu = 1e-4
    exp = fit_local_approx(est, X, centers, mu)
    f = predict(est, X)
    best = _objective(wendland, X, centers.points, f, mu, exp.coeffs)
    for _ in range(1000):
        nudged = exp.coeffs + 1e-3 * rng.uniform(-1.0, 1.0, size=10)
        assert best <= _objective(wendland, X, centers.points, f, mu, nudged)


def test_coefficients_match_stacked_least_squares(rng, wendland):
    for _ in range(50):
        s = int(rng.integers(20, 61))
        n = int(rng.integers(3, 21))
        d = 2
        X = rng.random((s, d))
        centers = generate_centers("halton", n, d)
        mu = 1e-2
        est = fit_krr(DataSet(X, rng.standard_normal(s)), wendland, 1e-2)
        a = fit_local_approx(est, X, centers, mu).coeffs

        Knn = gram(wendland, centers.points)
        w, V = np.linalg.eigh(Knn)
        R = np.sqrt(np.clip(w, 0.0, None))[:, None] * V.T
        stacked = np.vstack([gram(wendland, X, centers.points), np.sqrt(mu * s) * R])
        rhs = np.concatenate([predict(est, X), np.zeros(n)])
        oracle, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
        np.testing.assert_allclose(a, oracle, rtol=1e-6, atol=1e-6 * np.max(np.abs(oracle)))


def test_batched_columns_match_single_columns(rng, wendland):
    X = rng.random((25, 2))
    centers = generate_centers("sobol", 8, 2)
    F = rng.standard_normal((25, 3))
    batch = approx_coefficients(wendland, X, centers, F, 1e-3)
    for k in range(3):
        np.testing.assert_allclose(
            batch[:, k], approx_coefficients(wendland, X, centers, F[:, k], 1e-3),
            rtol=1e-8,
            atol=1e-8 * np.max(np.abs(batch)),
        )


def test_eval_expansion_examples(rng):
    kern = KernelSpec.gaussian(0.4)
    centers = generate_centers("sobol", 5, 3)
    Q = rng.random((12, 3))
    np.testing.assert_array_equal(eval_expansion(BasisExpansion(centers, kern, np.zeros(5)), Q), np.zeros(12))

    one = generate_centers("sobol", 1, 3)
    vals = eval_expansion(BasisExpansion(one, kern, np.ones(1)), Q)
    np.testing.assert_allclose(vals, [eval_kernel(kern, one.points[0], q) for q in Q], rtol=1e-15)

    a, b = rng.standard_normal(5), rng.standard_normal(5)
    lhs = eval_expansion(BasisExpansion(centers, kern, a + b), Q)
    rhs = eval_expansion(BasisExpansion(centers, kern, a), Q) + eval_expansion(BasisExpansion(centers, kern, b), Q)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_synthesize_examples():
    a = CoeffMatrix(np.array([1.0, 2.0]), 1, 2)
    b = CoeffMatrix(np.array([3.0, 4.0]), 1, 2)
    np.testing.assert_allclose(synthesize([a, b]), [[2.0], [3.0]])

    c = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(synthesize([CoeffMatrix(c, 7, 7)]), c)

    ones = [CoeffMatrix(np.ones((4, 3)), k, 10) for k in (5, 3, 2)]
    np.testing.assert_allclose(synthesize(ones), np.ones((4, 3)), rtol=0, atol=1e-15)


def test_synthesize_rejects_bad_inputs():
    with pytest.raises(WeightSumError):
        synthesize([CoeffMatrix(np.ones(3), 1, 2), CoeffMatrix(np.ones(3), 1, 3)])
    with pytest.raises(InputShapeError):
        synthesize([CoeffMatrix(np.ones(3), 1, 2), CoeffMatrix(np.ones(4), 1, 2)])
    with pytest.raises(InputShapeError):
        synthesize([])


@pytest.mark.parametrize("m", [2, 5, 10])
def test_global_approximation_is_weighted_sum(rng, wendland, m):
    kern = wendland
    centers = generate_centers("sobol", 16, 3)
    sizes = rng.integers(20, 40, size=m)
    total = int(sizes.sum())
    expansions, payloads = [], []
    for size in sizes:
        X = rng.random((size, 3))
        est = fit_krr(DataSet(X, rng.standard_normal(size)), kern, 1e-2)
        exp = fit_local_approx(est, X, centers, 1e-4)
        expansions.append(exp)
        payloads.append(CoeffMatrix(exp.coeffs, int(size), total))
    glob = BasisExpansion(centers, kern, synthesize(payloads)[:, 0])
    Q = rng.random((100, 3))
    expected = sum(size / total * eval_expansion(exp, Q) for size, exp in zip(sizes, expansions))
    np.testing.assert_allclose(eval_expansion(glob, Q), expected, rtol=0, atol=1e-10)


def test_coeff_matrix_wire_format(rng):
    cm = CoeffMatrix(rng.standard_normal((7, 3)), 12, 40)
    payload = cm.serialize()
    assert len(payload) == 8 * 4 + 8 * 7 * 3
    assert cm.scalar_count() == 7 * 3 + 1
    back = CoeffMatrix.deserialize(payload)
    np.testing.assert_array_equal(back.coeffs, cm.coeffs)
    assert back.weight == cm.weight
    # column-major body
    np.testing.assert_array_equal(np.frombuffer(payload, "<f8", count=7, offset=32), cm.coeffs[:, 0])
    with pytest.raises(InputShapeError):
        CoeffMatrix.deserialize(payload[:-8])
