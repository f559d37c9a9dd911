"""
Fixed-basis approximation of local estimators.

A local KRR estimator f is projected onto span{K(xi_k, .)} for the shared
center set by regularised least squares on anchor points x*_1..x*_s:

    min_g  (1/s) sum_i (g(x*_i) - f(x*_i))^2 + mu ||g||_K^2

with closed form a = (K_sn^T K_sn + mu s K_nn)^+ K_sn^T f(x*). Only the
resulting coefficients ever leave a machine, packed in a :class:`CoeffMatrix`.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import linalg

from .constants import spectral_cutoff
from .errors import InputShapeError, WeightSumError
from .kernels import gram
from .krr import predict
from .utils import as_points, check_same_dim

_HEADER = np.dtype("<i8")
_BODY = np.dtype("<f8")


@dataclass(frozen=True)
class BasisExpansion:
    centers: object
    kernel: object
    coeffs: np.ndarray


@dataclass(frozen=True)
class CoeffMatrix:
    """Coefficients (n x L) plus the sender's weight |D_j^tr| / |D^tr|.

    This is the only object exchanged in communication rounds I and II.
    """

    coeffs: np.ndarray
    weight_num: int
    weight_den: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if c.ndim != 2:
            raise InputShapeError(f"coefficients must be n x L, got shape {c.shape}")
        if self.weight_den <= 0 or self.weight_num < 0:
            raise WeightSumError(f"invalid weight {self.weight_num}/{self.weight_den}")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "weight_num", int(self.weight_num))
        object.__setattr__(self, "weight_den", int(self.weight_den))

    @property
    def weight(self):
        return Fraction(self.weight_num, self.weight_den)

    @property
    def shape(self):
        return self.coeffs.shape

    def scalar_count(self):
        """Scalars on the wire: every coefficient plus the weight."""
        return self.coeffs.size + 1

    def serialize(self):
        """Little-endian bytes: int64 (n, L, num, den) then column-major float64 coefficients."""
        n, L = self.coeffs.shape
        header = np.array([n, L, self.weight_num, self.weight_den], dtype=_HEADER)
        body = np.asarray(self.coeffs, dtype=_BODY).ravel(order="F")
        return header.tobytes() + body.tobytes()

    @classmethod
    def deserialize(cls, payload):
        header = np.frombuffer(payload, dtype=_HEADER, count=4)
        n, L, num, den = (int(v) for v in header)
        body = np.frombuffer(payload, dtype=_BODY, offset=4 * _HEADER.itemsize)
        if body.size != n * L:
            raise InputShapeError(f"payload holds {body.size} coefficients, header says {n}x{L}")
        return cls(body.reshape((n, L), order="F").copy(), num, den)


def symmetric_pinv_solve(A, B, cutoff=spectral_cutoff):
    """Apply the pseudo-inverse of symmetric ``A`` to ``B``.

    Eigenvalues below ``cutoff * max eigenvalue`` are treated as zero.
    """
    B = np.asarray(B, dtype=np.float64)
    w, V = linalg.eigh(A)
    wmax = w.max()
    if wmax <= 0:
        return np.zeros((A.shape[0],) + B.shape[1:])
    keep = w > cutoff * wmax
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    rhs = (V.T @ B.reshape(B.shape[0], -1)) * inv[:, None]
    return (V @ rhs).reshape((A.shape[0],) + B.shape[1:])


def approx_coefficients(kernel, anchors, centers, targets, mu):
    """Batched closed form for one kernel and several target columns.

    :param targets: values to approximate at the anchors, shape (s,) or (s, k)
    :return: coefficients, shape (n,) or (n, k)
    """
    if not (mu > 0):
        raise ValueError(f"mu must be positive, got {mu}")
    X = as_points(anchors, "anchors")
    C = as_points(centers.points if hasattr(centers, "points") else centers, "centers")
    check_same_dim(X, C, "local approximation")
    F = np.asarray(targets, dtype=np.float64)
    if F.shape[0] != X.shape[0]:
        raise InputShapeError(f"{F.shape[0]} targets for {X.shape[0]} anchors")
    s = X.shape[0]
    Ksn = gram(kernel, X, C)
    Knn = gram(kernel, C)
    A = Ksn.T @ Ksn + (mu * s) * Knn
    return symmetric_pinv_solve(A, Ksn.T @ F)


def fit_local_approx(est, anchor_points, centers, mu):
    """Approximate a fitted estimator on the shared basis.

    :param est: local KRR estimator
    :type est: DualEstimator
    :param anchor_points: s x d points where ``est`` is matched
    :param centers: shared center set
    :type centers: CenterSet
    :param mu: regularisation of the approximation
    :type mu: float
    :rtype: BasisExpansion
    """
    f = predict(est, anchor_points)
    a = approx_coefficients(est.kernel, anchor_points, centers, f, mu)
    return BasisExpansion(centers, est.kernel, a)


def eval_expansion(exp, queries):
    Q = as_points(queries, "queries")
    C = exp.centers.points if hasattr(exp.centers, "points") else as_points(exp.centers)
    check_same_dim(Q, C, "eval_expansion")
    return gram(exp.kernel, Q, C) @ np.asarray(exp.coeffs, dtype=np.float64)


def synthesize(locals_, tol=1e-12):
    """Weighted sum of local coefficient matrices, in list order.

    :param locals_: one CoeffMatrix per machine
    :type locals_: list
    :return: global coefficients, n x L
    :rtype: numpy.ndarray
    """
    if len(locals_) == 0:
        raise InputShapeError("nothing to synthesize")
    shape = locals_[0].shape
    for j, cm in enumerate(locals_):
        if cm.shape != shape:
            raise InputShapeError(f"machine {j} sent {cm.shape}, expected {shape}")
    total = sum(float(cm.weight) for cm in locals_)
    if abs(total - 1.0) > tol:
        raise WeightSumError(f"weights sum to {total!r}, not 1")
    out = np.zeros(shape, dtype=np.float64)
    for cm in locals_:
        out += float(cm.weight) * cm.coeffs
    return out
