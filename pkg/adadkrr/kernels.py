"""
Kernel functions and Gram-matrix assembly.

Two radial families are supported:

- ``wendland``: the compactly supported function h(r) = (1 - r)^4 (4r + 1) for
  r <= 1 and 0 beyond, evaluated at r = ||x - y||_2.
- ``gaussian``: exp(-||x - y||^2 / (2 sigma^2)). ``sigma`` is the width itself,
  not a precision.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputShapeError
from .utils import as_points, check_same_dim

FAMILIES = ("wendland", "gaussian")


@dataclass(frozen=True)
class KernelSpec:
    """
    :param family: ``"wendland"`` or ``"gaussian"``
    :type family: str
    :param sigma: Gaussian width, ignored for Wendland
    :type sigma: float, optional
    """

    family: str = "wendland"
    sigma: float = 1.0

    def __post_init__(self):
        family = str(self.family).lower()
        if family not in FAMILIES:
            raise ValueError(f"Unsupported kernel family <{self.family}>")
        object.__setattr__(self, "family", family)
        if family == "gaussian":
            if not (np.isfinite(self.sigma) and self.sigma > 0):
                raise ValueError(f"Gaussian kernel needs sigma > 0, got {self.sigma}")
        object.__setattr__(self, "sigma", float(self.sigma))

    @classmethod
    def wendland(cls):
        return cls("wendland")

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma)

    def label(self):
        if self.family == "gaussian":
            return f"gaussian(sigma={self.sigma:.6g})"
        return "wendland"


def wendland_profile(r):
    r = np.asarray(r, dtype=np.float64)
    out = (1.0 - r) ** 4 * (4.0 * r + 1.0)
    return np.where(r <= 1.0, out, 0.0)


def _apply(spec, A, B):
    if spec.family == "wendland":
        return wendland_profile(cdist(A, B, metric="euclidean"))
    d2 = cdist(A, B, metric="sqeuclidean")
    return np.exp(-d2 / (2.0 * spec.sigma**2))


def eval_kernel(spec, x, y):
    """Evaluate k(x, y) for two single points."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InputShapeError(f"dimension mismatch ({x.size} vs {y.size})")
    return float(_apply(spec, x[None, :], y[None, :])[0, 0])


def gram(spec, A, B=None):
    """Assemble the |A| x |B| kernel matrix.

    With ``B`` omitted the symmetric matrix gram(spec, A, A) is returned.
    """
    A = as_points(A, "A")
    if B is None:
        return _apply(spec, A, A)
    B = as_points(B, "B")
    check_same_dim(A, B, "gram")
    return _apply(spec, A, B)
