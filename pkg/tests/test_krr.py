import numpy as np
import pytest

from adadkrr.errors import InputShapeError, NumericalError
from adadkrr.kernels import KernelSpec, gram
from adadkrr.krr import DataSet, fit_krr, predict, truncate


def test_single_sample_gaussian():
    data = DataSet([[0.3, 0.4]], [1.0])
    est = fit_krr(data, KernelSpec.gaussian(1.0), 1.0)
    np.testing.assert_allclose(est.alpha, [0.5])
    assert predict(est, [[0.3, 0.4]])[0] == pytest.approx(0.5)


def test_large_lambda_shrinks_to_zero(rng):
    X = rng.random((30, 3))
    y = rng.standard_normal(30)
    est = fit_krr(DataSet(X, y), KernelSpec.gaussian(0.5), 1e8)
    pred = predict(est, rng.random((20, 3)))
    assert np.max(np.abs(pred)) < 1e-6 * np.max(np.abs(y))


def test_alpha_matches_dense_solve(rng, wendland):
    X = rng.random((20, 3))
    y = rng.standard_normal(20)
    lam = 1e-3
    est = fit_krr(DataSet(X, y), wendland, lam)
    K = gram(wendland, X)
    expected = np.linalg.solve(K + lam * 20 * np.eye(20), y)
    np.testing.assert_allclose(est.alpha, expected, rtol=1e-8)
    np.testing.assert_allclose(predict(est, X), K @ est.alpha, rtol=0, atol=1e-10)


def test_wendland_far_query_is_zero(rng, wendland):
    est = fit_krr(DataSet(rng.random((20, 3)), rng.standard_normal(20)), wendland, 0.01)
    assert predict(est, [[5.0, 5.0, 5.0]])[0] == 0.0


def test_interpolation_limit(wendland):
    side = np.linspace(0.0, 1.0, 5)
    X = np.array([[a, b] for a in side for b in side[:4]])
    y = np.sin(3 * X[:, 0]) + X[:, 1]
    est = fit_krr(DataSet(X, y), wendland, 1e-12)
    np.testing.assert_allclose(predict(est, X), y, rtol=1e-4, atol=1e-6)


def test_fit_is_deterministic(small_data, wendland):
    a = fit_krr(small_data, wendland, 1e-3).alpha
    b = fit_krr(small_data, wendland, 1e-3).alpha
    np.testing.assert_array_equal(a, b)


def test_truncate_examples():
    np.testing.assert_array_equal(truncate([1.5, -2.0, 0.3], 1.0), [1.0, -1.0, 0.3])
    np.testing.assert_array_equal(truncate([0.0], 3.0), [0.0])
    v = np.array([0.1, -0.2, 0.25])
    np.testing.assert_array_equal(truncate(v, 0.25), v)
    np.testing.assert_array_equal(truncate(truncate(v * 10, 1.0), 1.0), truncate(v * 10, 1.0))
    with pytest.raises(ValueError):
        truncate(v, np.inf)
    with pytest.raises(ValueError):
        truncate(v, 0.0)


def test_dataset_contract(rng):
    X = rng.random((5, 2))
    data = DataSet(X, np.arange(5.0))
    assert len(data) == 5 and data.dim == 2
    assert not data.inputs.flags.writeable
    assert X.flags.writeable
    sub = data.subset([4, 0])
    np.testing.assert_array_equal(sub.outputs, [4.0, 0.0])
    with pytest.raises(InputShapeError):
        DataSet(X, np.arange(4.0))
    with pytest.raises(NumericalError):
        DataSet(X, [0.0, 1.0, np.nan, 3.0, 4.0])


def test_bad_lambda(small_data, wendland):
    with pytest.raises(ValueError):
        fit_krr(small_data, wendland, 0.0)


def test_predict_dimension_mismatch(small_data, wendland):
    est = fit_krr(small_data, wendland, 0.1)
    with pytest.raises(InputShapeError):
        predict(est, np.zeros((2, 2)))
