"""
Simulated data silos.

Each :class:`LocalMachine` owns one shard and never hands it out. The
orchestrating functions (:func:`run_adadkrr`, :func:`run_baseline`) talk to
machines only through

- serialized :class:`~adadkrr.approx.CoeffMatrix` payloads (rounds I and II),
- truncated or raw prediction vectors at the query points (round III),

plus public metadata (shard sizes). Every exchanged scalar is booked in a
:class:`CommLedger`.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .approx import CoeffMatrix, approx_coefficients, synthesize
from .errors import AdaDKRRError, InputShapeError, MachineError, PartitionError
from .kernels import KernelSpec, gram
from .krr import fit_krr, predict, solve_dual, truncate
from .qmc import center_count, generate_centers
from .select import local_cv_select, log_transform, pick_best, split, validate_global
from .utils import as_points, as_vector, derive_seed

logger = logging.getLogger(__name__)

STRATEGIES = ("dkrr", "dkrrlog")


@dataclass(frozen=True)
class Partition:
    """m disjoint, sorted, nonempty index blocks covering 0..N-1."""

    assignments: tuple

    def __post_init__(self):
        blocks = tuple(np.sort(np.asarray(b, dtype=np.intp)) for b in self.assignments)
        if any(b.size == 0 for b in blocks):
            raise PartitionError("every machine needs at least one sample")
        allidx = np.concatenate(blocks) if blocks else np.empty(0, dtype=np.intp)
        if np.unique(allidx).size != allidx.size:
            raise PartitionError("machine index blocks overlap")
        if allidx.size and not np.array_equal(np.sort(allidx), np.arange(allidx.size)):
            raise PartitionError("machine index blocks do not cover 0..N-1")
        object.__setattr__(self, "assignments", blocks)

    def __len__(self):
        return len(self.assignments)

    @property
    def sizes(self):
        return [int(b.size) for b in self.assignments]


def partition_uniform(N, m, seed):
    """Seeded permutation cut into m blocks; the first N mod m blocks get one extra."""
    if m < 1 or N < m:
        raise PartitionError(f"cannot split {N} samples over {m} machines")
    perm = np.random.default_rng(seed).permutation(N)
    base, extra = divmod(N, m)
    bounds = np.cumsum([0] + [base + (1 if j < extra else 0) for j in range(m)])
    return Partition(tuple(perm[bounds[j] : bounds[j + 1]] for j in range(m)))


def partition_random_min(N, m, R, seed):
    """Every machine gets R samples, the rest go to uniformly drawn machines."""
    if m < 1 or R < 1 or N < m * R:
        raise PartitionError(f"cannot give {m} machines at least {R} of {N} samples")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(N)
    owner = np.concatenate([np.repeat(np.arange(m), R), rng.integers(0, m, size=N - m * R)])
    return Partition(tuple(perm[owner == j] for j in range(m)))


@dataclass(frozen=True)
class LedgerEntry:
    round_id: str
    direction: str
    kind: str
    scalar_count: int
    fold: int = None


@dataclass
class CommLedger:
    rounds: list = field(default_factory=list)

    def record(self, round_id, direction, kind, scalar_count, fold=None):
        entry = LedgerEntry(round_id, direction, kind, int(scalar_count), fold)
        self.rounds.append(entry)
        logger.debug("round %s %s %s: %d scalars (fold %s)", round_id, direction, kind, scalar_count, fold)
        return entry

    @property
    def total_scalars(self):
        return sum(e.scalar_count for e in self.rounds)

    def count(self, round_id, kind=None):
        return sum(
            e.scalar_count
            for e in self.rounds
            if e.round_id == round_id and (kind is None or e.kind == kind)
        )


@dataclass(frozen=True)
class GlobalPrediction:
    values: np.ndarray
    per_machine_values: np.ndarray = None
    # truncation level applied to every machine, None when untruncated
    bound: float = None


@dataclass(frozen=True)
class Selection:
    machine: int
    lam: float
    kernel: KernelSpec

    @property
    def sigma(self):
        return self.kernel.sigma if self.kernel.family == "gaussian" else None


class LocalMachine(object):
    """A data silo running KRR on its own shard.

    :param index: machine index j
    :type index: int
    :param shard: the machine's private data
    :type shard: DataSet
    :param grid: shared parameter grid
    :type grid: ParamGrid
    :param plan: split plan; its seed is already machine specific
    :type plan: SplitPlan
    """

    def __init__(self, index, shard, grid, plan):
        self._index = index
        self._shard = shard
        self._grid = grid
        self._plan = plan
        self._folds = None
        self._errors = []
        self._estimator = None

    @property
    def index(self):
        return self._index

    def _splits(self):
        if self._folds is None:
            self._folds = split(len(self._shard), self._plan)
        return self._folds

    @property
    def n_folds(self):
        return len(self._splits())

    def n_train(self, fold):
        return int(self._splits()[fold][0].size)

    # rounds I / II
    def local_coefficients(self, fold, centers, mu, total_train, anchors="train"):
        """Fit every candidate on the fold's training part and project it on the basis.

        :return: serialized CoeffMatrix (n x L, weight n_train / total_train)
        :rtype: bytes
        """
        tr, _ = self._splits()[fold]
        X, y = self._shard.inputs[tr], self._shard.outputs[tr]
        grid = self._grid
        coeffs = np.empty((len(centers), len(grid)))
        for kern in grid.kernels():
            cols = grid.columns(kern)
            K = gram(kern, X)
            if anchors == "train":
                A, K_at = X, K
            elif anchors == "centers":
                A, K_at = centers.points, gram(kern, centers.points, X)
            else:
                raise ValueError(f"Unsupported anchor choice <{anchors}>")
            F = np.column_stack([K_at @ solve_dual(K, y, grid[i][0]) for i in cols])
            coeffs[:, cols] = approx_coefficients(kern, A, centers, F, mu)
        return CoeffMatrix(coeffs, tr.size, total_train).serialize()

    def validate(self, fold, payload, centers, M):
        """Score the broadcast global coefficients on the fold's validation part."""
        _, va = self._splits()[fold]
        glob = CoeffMatrix.deserialize(payload)
        errors, _ = validate_global(glob.coeffs, self._grid, centers, self._shard.subset(va), M)
        self._errors.append(errors)

    def select_adaptive(self):
        """Average the fold errors, pick lambda*_j and refit on the full shard."""
        if not self._errors:
            raise AdaDKRRError("no validation errors recorded")
        mean = np.mean(self._errors, axis=0)
        lam, kern = self._grid[pick_best(mean, self._grid)]
        self._estimator = fit_krr(self._shard, kern, lam)
        return Selection(self._index, lam, kern)

    def select_local(self, log_total=None):
        """Cross-validate on the shard alone, optionally log-transform, and refit."""
        lam, kern = local_cv_select(self._shard, self._grid, self._plan)
        if log_total is not None:
            sigma = kern.sigma if kern.family == "gaussian" else None
            lam, sigma = log_transform(lam, sigma, log_total, len(self._shard))
            if sigma is not None:
                kern = KernelSpec.gaussian(sigma)
        self._estimator = fit_krr(self._shard, kern, lam)
        return Selection(self._index, lam, kern)

    # round III
    def predict(self, queries, M=None):
        if self._estimator is None:
            raise AdaDKRRError("machine has not been fitted")
        vals = predict(self._estimator, queries)
        return vals if M is None else truncate(vals, M)


def _run_machines(fn, machines, threads=None):
    """Apply ``fn`` to every machine, results in machine order."""

    def call(mach):
        try:
            return fn(mach)
        except MachineError:
            raise
        except ValueError as e:
            raise MachineError(mach.index, e) from e

    workers = threads or os.cpu_count() or 1
    if workers == 1 or len(machines) == 1:
        return [call(mach) for mach in machines]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(call, machines))


def build_machines(train, partition, grid, plan):
    """One machine per partition block; split seeds derive from the plan seed and j."""
    if partition.sizes and sum(partition.sizes) != len(train):
        raise PartitionError(f"partition covers {sum(partition.sizes)} of {len(train)} samples")
    return [
        LocalMachine(j, train.subset(block), grid, plan.with_seed(derive_seed(plan.seed, j)))
        for j, block in enumerate(partition.assignments)
    ]


def _combine(preds, sizes, keep, bound=None):
    w = np.asarray(sizes, dtype=np.float64) / float(sum(sizes))
    values = np.zeros(preds[0].shape[0])
    for wj, pj in zip(w, preds):
        values += wj * pj
    return GlobalPrediction(values, np.vstack(preds) if keep else None, bound)


def run_adadkrr(
    train,
    test_inputs,
    partition,
    grid,
    plan,
    centers_policy="adaptive",
    mu=1e-4,
    M=None,
    center_kind="sobol",
    center_seed=0,
    anchors="train",
    threads=None,
    keep_per_machine=False,
):
    """Adaptive distributed KRR end to end.

    Per fold (one for hold-out, iota for k-fold): machines send local
    coefficient matrices (round I), the global machine synthesizes and
    broadcasts them (round II), machines score the global approximation on
    their validation data. Each machine then picks lambda*_j from its
    fold-averaged errors, refits on its full shard and sends truncated
    predictions at ``test_inputs`` (round III), which are averaged with
    weights |D_j| / |D|.

    :param M: truncation level, defaults to max |y| over ``train``; no
        truncation when that maximum is 0
    :return: (GlobalPrediction, list of Selection, CommLedger)
    """
    Q = as_points(test_inputs, "test_inputs")
    if Q.shape[1] != train.dim:
        raise InputShapeError(f"test inputs have dimension {Q.shape[1]}, data {train.dim}")
    if M is None:
        M = float(np.max(np.abs(train.outputs)))
        # all-zero outputs: every estimator is identically zero
        if M == 0.0:
            M = None
    elif not M > 0:
        raise ValueError(f"truncation level must be positive, got {M}")
    m = len(partition)
    n = center_count(centers_policy, len(train), m)
    centers = generate_centers(
        center_kind, n, train.dim, seed=center_seed if str(center_kind).lower() == "random" else None
    )
    machines = build_machines(train, partition, grid, plan)
    ledger = CommLedger()
    n_folds = _run_machines(lambda mach: mach.n_folds, machines, threads)
    if len(set(n_folds)) != 1:
        raise AdaDKRRError(f"machines disagree on the number of folds: {n_folds}")
    logger.debug("AdaDKRR: m=%d n=%d L=%d folds=%d", m, n, len(grid), n_folds[0])

    for fold in range(n_folds[0]):
        total_train = sum(mach.n_train(fold) for mach in machines)
        payloads = _run_machines(
            lambda mach: mach.local_coefficients(fold, centers, mu, total_train, anchors),
            machines,
            threads,
        )
        locals_ = [CoeffMatrix.deserialize(p) for p in payloads]
        ledger.record("I", "up", "coefficients", sum(c.coeffs.size for c in locals_), fold)
        ledger.record("I", "up", "weights", len(locals_), fold)

        glob = synthesize(locals_)
        broadcast = CoeffMatrix(glob, 1, 1).serialize()
        ledger.record("II", "down", "coefficients", glob.size * m, fold)
        _run_machines(lambda mach: mach.validate(fold, broadcast, centers, M), machines, threads)

    selected = _run_machines(lambda mach: mach.select_adaptive(), machines, threads)
    preds = _run_machines(lambda mach: mach.predict(Q, M), machines, threads)
    ledger.record("III", "up", "predictions", sum(p.size for p in preds))
    return _combine(preds, partition.sizes, keep_per_machine, M), selected, ledger


def run_baseline(
    strategy,
    train,
    test_inputs,
    partition,
    grid,
    plan,
    M=None,
    threads=None,
    keep_per_machine=False,
):
    """DKRR or DKRRLog: per-machine cross-validation, refit, weighted average.

    Predictions are not truncated; ``M`` is accepted for signature symmetry
    with :func:`run_adadkrr` and unused.

    :param strategy: ``"dkrr"`` or ``"dkrrlog"``
    :return: (GlobalPrediction, list of Selection, CommLedger)
    """
    strategy = str(strategy).lower()
    if strategy not in STRATEGIES:
        raise ValueError(f"Unsupported baseline strategy <{strategy}>")
    Q = as_points(test_inputs, "test_inputs")
    if Q.shape[1] != train.dim:
        raise InputShapeError(f"test inputs have dimension {Q.shape[1]}, data {train.dim}")
    machines = build_machines(train, partition, grid, plan)
    log_total = len(train) if strategy == "dkrrlog" else None
    selected = _run_machines(lambda mach: mach.select_local(log_total), machines, threads)
    preds = _run_machines(lambda mach: mach.predict(Q), machines, threads)
    ledger = CommLedger()
    ledger.record("III", "up", "predictions", sum(p.size for p in preds))
    return _combine(preds, partition.sizes, keep_per_machine), selected, ledger


def test_mse(pred, truth):
    pred = as_vector(pred, "pred")
    truth = as_vector(truth, "truth")
    if pred.shape != truth.shape:
        raise InputShapeError(f"{pred.size} predictions for {truth.size} targets")
    return float(np.mean((pred - truth) ** 2))


# not a pytest test
test_mse.__test__ = False
