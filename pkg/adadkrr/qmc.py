"""
Center sets for the shared basis.

``sobol`` and ``halton`` are unscrambled low-discrepancy sequences; ``random``
draws i.i.d. uniform points from an explicitly seeded generator.

Sobol points use the Joe-Kuo direction numbers shipped with
:class:`scipy.stats.qmc.Sobol` (Gray-code order) and skip the initial all-zeros
point. Halton points are radical inverses in the first d primes starting at
index 1, so the base-2 coordinate reads 1/2, 1/4, 3/4, ...
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import UnsupportedDimensionError

KINDS = ("sobol", "halton", "random")

# size of the bundled Joe-Kuo direction-number table
SOBOL_MAX_DIM = qmc.Sobol.MAXDIM


@dataclass(frozen=True)
class CenterSet:
    kind: str
    points: np.ndarray
    seed: int = None

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


def _sobol(n, d):
    engine = qmc.Sobol(d, scramble=False)
    engine.fast_forward(1)
    with warnings.catch_warnings():
        # n need not be a power of two here
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)


def _halton(n, d):
    engine = qmc.Halton(d, scramble=False)
    engine.fast_forward(1)
    return engine.random(n)


def _random(n, d, seed):
    rng = np.random.default_rng(seed)
    return rng.random((n, d))


def generate_centers(kind, n, d, seed=None):
    """Generate ``n`` centers in [0, 1)^d.

    :param kind: ``"sobol"``, ``"halton"`` or ``"random"``
    :type kind: str
    :param n: number of centers
    :type n: int
    :param d: dimension
    :type d: int
    :param seed: required for ``"random"``, rejected otherwise
    :type seed: int, optional
    :rtype: CenterSet
    """
    kind = str(kind).lower()
    if kind not in KINDS:
        raise ValueError(f"Unsupported center kind <{kind}>")
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if kind != "random" and seed is not None:
        raise ValueError(f"{kind} centers are deterministic, got seed {seed}")
    if kind == "sobol":
        if d > SOBOL_MAX_DIM:
            raise UnsupportedDimensionError(
                f"Sobol direction numbers cover d <= {SOBOL_MAX_DIM}, got {d}"
            )
        pts = _sobol(n, d)
    elif kind == "halton":
        pts = _halton(n, d)
    else:
        if seed is None:
            raise ValueError("random centers need a seed")
        pts = _random(n, d, seed)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    pts.setflags(write=False)
    return CenterSet(kind, pts, seed)


def center_count(policy, total_N, m):
    """Number of centers for a run.

    ``policy`` is an int (fixed count) or ``"adaptive"`` for floor(N/m), at least 1.
    """
    if isinstance(policy, str):
        if policy.lower() != "adaptive":
            raise ValueError(f"Unsupported center-count policy <{policy}>")
        return max(1, int(total_N) // int(m))
    n = int(policy)
    if n < 1:
        raise ValueError(f"center count must be >= 1, got {policy}")
    return n
