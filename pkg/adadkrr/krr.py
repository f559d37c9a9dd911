"""
Batch kernel ridge regression.

The estimator minimises (1/N) sum (f(x_i) - y_i)^2 + lambda ||f||_K^2, whose
dual coefficients solve (K + lambda N I) alpha = y.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InputShapeError, NumericalError
from .kernels import KernelSpec, gram
from .utils import as_points, as_vector, check_same_dim


@dataclass(frozen=True)
class DataSet:
    """Inputs (N x d) and outputs (N,) held by one owner."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        X = as_points(self.inputs, "inputs").copy()
        y = as_vector(self.outputs, "outputs").copy()
        if X.shape[0] != y.shape[0]:
            raise InputShapeError(f"{X.shape[0]} inputs but {y.shape[0]} outputs")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InputShapeError(f"empty data set, shape {X.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise NumericalError("data set contains non-finite entries")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", y)

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.intp)
        return DataSet(self.inputs[indices], self.outputs[indices])


@dataclass(frozen=True)
class DualEstimator:
    train_inputs: np.ndarray
    kernel: KernelSpec
    lam: float
    alpha: np.ndarray


def _check_lambda(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda must be a positive finite number, got {lam}")


def solve_dual(K, y, lam):
    """Solve (K + lam N I) alpha = y by Cholesky factorisation."""
    n = K.shape[0]
    A = K + (lam * n) * np.eye(n)
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Cholesky factorisation failed: {e}") from e
    return linalg.cho_solve(factor, y, check_finite=False)


def fit_krr(data, kernel, lam):
    """Fit KRR on ``data`` with regularisation ``lam``.

    :param data: training data
    :type data: DataSet
    :param kernel: kernel to use
    :type kernel: KernelSpec
    :param lam: regularisation parameter, scaled by |data| in the solve
    :type lam: float
    :rtype: DualEstimator
    """
    _check_lambda(lam)
    K = gram(kernel, data.inputs)
    alpha = solve_dual(K, data.outputs, lam)
    return DualEstimator(data.inputs, kernel, float(lam), alpha)


def predict(est, queries):
    Q = as_points(queries, "queries")
    check_same_dim(Q, est.train_inputs, "predict")
    return gram(est.kernel, Q, est.train_inputs) @ est.alpha


def truncate(values, M):
    """Clip to [-M, M], i.e. sign(v) * min(|v|, M)."""
    if not (M > 0) or not np.isfinite(M):
        raise ValueError(f"M must be a positive finite number, got {M}")
    return np.clip(as_vector(values), -M, M)
