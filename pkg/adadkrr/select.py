"""
Data splitting and parameter selection.

Three selection strategies live here:

- :func:`validate_global` scores every grid candidate's *global* approximation
  on a machine's validation data (AdaDKRR, hold-out or ι-fold).
- :func:`local_cv_select` picks a candidate from the machine's own data only
  (the DKRR baseline).
- :func:`log_transform` rescales a locally selected (lambda, sigma) by the
  exponent ln|D| / ln|D_j| (the DKRRLog baseline).

Grid candidates are ordered by decreasing lambda, and every argmin breaks
ties toward the larger lambda.
"""
import math
from dataclasses import dataclass

import numpy as np
from sklearn.model_selection import KFold, train_test_split

from .constants import (
    default_folds,
    default_holdout_fraction,
    grid_bases,
    grid_floor,
    lambda_floor,
    sigma_count,
    sigma_intervals,
)
from .errors import DomainError, InputShapeError, SplitError
from .kernels import KernelSpec, gram
from .krr import solve_dual, truncate


@dataclass(frozen=True)
class ParamGrid:
    """Ordered (lambda, kernel) candidates; the index is shared by all machines."""

    candidates: tuple

    def __post_init__(self):
        cands = tuple((float(lam), kern) for lam, kern in self.candidates)
        if len(cands) == 0:
            raise ValueError("parameter grid is empty")
        seen = set()
        for lam, kern in cands:
            if not (np.isfinite(lam) and lam > 0):
                raise ValueError(f"grid lambda must be positive, got {lam}")
            if not isinstance(kern, KernelSpec):
                raise TypeError(f"grid kernel must be a KernelSpec, got {kern!r}")
            if (lam, kern) in seen:
                raise ValueError(f"duplicate candidate lambda={lam} for {kern.label()}")
            seen.add((lam, kern))
        object.__setattr__(self, "candidates", cands)

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]

    @property
    def lambdas(self):
        return np.array([lam for lam, _ in self.candidates])

    def kernels(self):
        """Distinct kernels in first-appearance order."""
        out = []
        for _, kern in self.candidates:
            if kern not in out:
                out.append(kern)
        return out

    def columns(self, kernel):
        return [i for i, (_, kern) in enumerate(self.candidates) if kern == kernel]

    def single(self, i):
        return ParamGrid((self.candidates[i],))


@dataclass(frozen=True)
class SplitPlan:
    """
    :param kind: ``"holdout"`` or ``"kfold"``
    :param train_fraction: hold-out training share, in (0, 1)
    :param folds: number of folds (iota) for ``"kfold"``, at least 2
    :param seed: split seed
    """

    kind: str = "holdout"
    train_fraction: float = default_holdout_fraction
    folds: int = default_folds
    seed: int = 0

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in ("holdout", "kfold"):
            raise ValueError(f"Unsupported split kind <{self.kind}>")
        object.__setattr__(self, "kind", kind)
        if kind == "holdout" and not (0.0 < self.train_fraction < 1.0):
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if kind == "kfold" and int(self.folds) < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")

    @classmethod
    def holdout(cls, train_fraction=default_holdout_fraction, seed=0):
        return cls("holdout", train_fraction=train_fraction, seed=seed)

    @classmethod
    def kfold(cls, folds=default_folds, seed=0):
        return cls("kfold", folds=folds, seed=seed)

    def with_seed(self, seed):
        return SplitPlan(self.kind, self.train_fraction, self.folds, seed)

    def min_size(self):
        return 2 if self.kind == "holdout" else int(self.folds)


def lambda_grid(base, floor=grid_floor):
    """{base^-q : base^-q >= floor, q = 0, 1, ...}, decreasing."""
    out = []
    q = 0
    while True:
        lam = 1.0 / float(base) ** q
        if lam < floor:
            break
        out.append(lam)
        q += 1
    return out


def sigma_grid(low, high, count=sigma_count):
    return list(np.logspace(math.log10(low), math.log10(high), count))


def make_grid(lambdas, kernels):
    """Cartesian product grid, lambdas decreasing in the outer loop."""
    lambdas = sorted(set(float(v) for v in lambdas), reverse=True)
    return ParamGrid(tuple((lam, kern) for lam in lambdas for kern in kernels))


def preset_grid(name):
    """Grids used by the simulations and the two real-data experiments.

    ``wendland`` pairs the base-2 lambda grid with the Wendland kernel; the
    others pair their lambda base with 10 log-spaced Gaussian widths.
    """
    if name not in grid_bases:
        raise ValueError(f"Unsupported grid preset <{name}>")
    lambdas = lambda_grid(grid_bases[name])
    if name == "wendland":
        return make_grid(lambdas, [KernelSpec.wendland()])
    low, high = sigma_intervals[name]
    return make_grid(lambdas, [KernelSpec.gaussian(s) for s in sigma_grid(low, high)])


def split(n, plan):
    """Train/validation index pairs for a shard of ``n`` samples.

    :rtype: list of (numpy.ndarray, numpy.ndarray)
    """
    n = int(n)
    if n < plan.min_size():
        raise SplitError(f"{n} samples are too few for a {plan.kind} split")
    idx = np.arange(n)
    if plan.kind == "holdout":
        n_train = min(max(int(math.floor(plan.train_fraction * n + 0.5)), 1), n - 1)
        tr, va = train_test_split(idx, train_size=n_train, random_state=plan.seed, shuffle=True)
        return [(np.sort(tr), np.sort(va))]
    kf = KFold(n_splits=int(plan.folds), shuffle=True, random_state=plan.seed)
    return [(np.sort(tr), np.sort(va)) for tr, va in kf.split(idx)]


def pick_best(errors, grid):
    """argmin of ``errors``; ties go to the larger lambda, then the earlier index."""
    errors = np.asarray(errors, dtype=np.float64)
    ties = np.flatnonzero(errors == errors.min())
    return int(min(ties, key=lambda i: (-grid[i][0], i)))


def validate_global(global_coeffs, grid, centers, val_data, M):
    """Validation MSE of the truncated global approximation for every candidate.

    Column l of ``global_coeffs`` is evaluated with candidate l's kernel;
    ``M=None`` skips truncation.

    :return: (errors of length L, best index)
    """
    A = np.asarray(global_coeffs, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != len(grid):
        raise InputShapeError(f"global coefficients {A.shape} do not match grid of {len(grid)}")
    pts = centers.points if hasattr(centers, "points") else centers
    if A.shape[0] != len(pts):
        raise InputShapeError(f"{A.shape[0]} coefficient rows for {len(pts)} centers")
    errors = np.empty(len(grid))
    for kern in grid.kernels():
        cols = grid.columns(kern)
        vals = gram(kern, val_data.inputs, pts) @ A[:, cols]
        if M is not None:
            vals = np.clip(vals, -M, M)
        resid = vals - val_data.outputs[:, None]
        errors[cols] = np.mean(resid**2, axis=0)
    return errors, pick_best(errors, grid)


def cv_errors(shard, grid, plan):
    """Mean validation MSE per candidate using only the shard's own data."""
    folds = split(len(shard), plan)
    errors = np.zeros(len(grid))
    for tr, va in folds:
        X_tr, y_tr = shard.inputs[tr], shard.outputs[tr]
        X_va, y_va = shard.inputs[va], shard.outputs[va]
        for kern in grid.kernels():
            K = gram(kern, X_tr)
            K_va = gram(kern, X_va, X_tr)
            for i in grid.columns(kern):
                alpha = solve_dual(K, y_tr, grid[i][0])
                errors[i] += np.mean((K_va @ alpha - y_va) ** 2)
    return errors / len(folds)


def local_cv_select(shard, grid, plan):
    """Pick (lambda, kernel) from the shard alone.

    :rtype: tuple
    """
    return grid[pick_best(cv_errors(shard, grid, plan), grid)]


def log_transform(lam, sigma, total_N, shard_N):
    """Raise lambda (and a Gaussian sigma) to the power ln(total_N) / ln(shard_N).

    :return: (lambda', sigma'); sigma' is None when sigma is None
    """
    if shard_N <= 1:
        raise DomainError(f"shard size must be >= 2, got {shard_N}")
    if total_N < shard_N:
        raise DomainError(f"total size {total_N} is below shard size {shard_N}")
    if not (0.0 < lam <= 1.0):
        raise DomainError(f"lambda must lie in (0, 1], got {lam}")
    expo = math.log(total_N) / math.log(shard_N)
    lam_new = lam**expo
    if lam_new <= 0.0:
        lam_new = lambda_floor
    sigma_new = None if sigma is None else float(sigma) ** expo
    return lam_new, sigma_new
