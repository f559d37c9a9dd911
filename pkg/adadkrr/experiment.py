"""
Experiment harness: config-driven trials over methods, machine counts and
partition policies, with CSV output.

A run is a list of *cells* ``(method variant, partition policy, m, trial)``.
Every cell is a pure function of the config and the master seed, so cells can
be executed in any order (or on different MPI ranks) and merged afterwards.
"""
import json
import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import constants
from .data import Preprocessor, Schema, gen_synthetic, holdout_rows, load_csv
from .errors import ConfigError
from .kernels import KernelSpec
from .krr import DataSet, fit_krr, predict
from .select import SplitPlan, lambda_grid, local_cv_select, make_grid, preset_grid, sigma_grid
from .silo import (
    Selection,
    partition_random_min,
    partition_uniform,
    run_adadkrr,
    run_baseline,
    test_mse,
)
from .utils import derive_seed, rst2df

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent / "presets"


def _reject_unknown(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unsupported key(s) {sorted(unknown)}")


@dataclass(frozen=True)
class DatasetConfig:
    """
    ``kind="synthetic"``: ``target`` (g1|g2), ``dim``, ``train_size``,
    ``test_size``, ``noise_std``. ``kind="csv"``: ``path``, ``schema`` (preset
    name, JSON path or inline mapping) and ``train_fraction``.
    """

    kind: str = "synthetic"
    target: str = "g1"
    dim: int = 3
    train_size: int = constants.default_train_size
    test_size: int = constants.default_test_size
    noise_std: float = constants.default_noise_std
    path: str = None
    schema: object = None
    train_fraction: float = 0.5

    @classmethod
    def from_dict(cls, d, base_dir=None):
        d = dict(d)
        _reject_unknown(d, list(cls.__dataclass_fields__) + ["noise_variance"], "dataset")
        if "noise_variance" in d:
            if "noise_std" in d:
                raise ConfigError("dataset: give noise_std or noise_variance, not both")
            var = float(d.pop("noise_variance"))
            if var < 0:
                raise ConfigError(f"dataset: negative noise variance {var}")
            d["noise_std"] = float(np.sqrt(var))
        cfg = cls(**d)
        if cfg.kind == "synthetic":
            if cfg.target not in ("g1", "g2"):
                raise ConfigError(f"dataset: unsupported target <{cfg.target}>")
            if cfg.train_size < 1 or cfg.test_size < 1 or cfg.dim < 1:
                raise ConfigError("dataset: sizes and dim must be >= 1")
            if cfg.noise_std < 0:
                raise ConfigError("dataset: noise_std must be >= 0")
        elif cfg.kind == "csv":
            if cfg.path is None or cfg.schema is None:
                raise ConfigError("dataset: csv datasets need 'path' and 'schema'")
            if not (0.0 < cfg.train_fraction < 1.0):
                raise ConfigError(f"dataset: train_fraction must lie in (0, 1), got {cfg.train_fraction}")
            path = Path(cfg.path)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            cfg = replace(cfg, path=str(path), schema=_resolve_schema(cfg.schema, base_dir))
        else:
            raise ConfigError(f"dataset: unsupported kind <{cfg.kind}>")
        return cfg


def _resolve_schema(schema, base_dir=None):
    if isinstance(schema, Schema):
        return schema
    try:
        if isinstance(schema, dict):
            return Schema.from_dict(schema)
        preset = PRESET_DIR / f"{schema}.json"
        if preset.exists():
            return Schema.from_json(preset)
        path = Path(schema)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return Schema.from_json(path)
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"dataset: cannot load schema {schema!r}: {e}") from e


@dataclass(frozen=True)
class MethodConfig:
    name: str
    centers: str = "sobol"
    n_centers: object = "adaptive"
    anchors: str = "train"
    label: str = None

    @classmethod
    def from_value(cls, v):
        if isinstance(v, str):
            v = {"name": v}
        if not isinstance(v, dict):
            raise ConfigError(f"methods: unsupported entry {v!r}")
        _reject_unknown(v, cls.__dataclass_fields__, "method")
        cfg = cls(**v)
        if cfg.name not in constants.method_names:
            raise ConfigError(f"methods: unsupported method <{cfg.name}>")
        if cfg.centers not in ("sobol", "halton", "random"):
            raise ConfigError(f"methods: unsupported center kind <{cfg.centers}>")
        if cfg.anchors not in ("train", "centers"):
            raise ConfigError(f"methods: unsupported anchors <{cfg.anchors}>")
        if cfg.n_centers != "adaptive" and not (isinstance(cfg.n_centers, int) and cfg.n_centers >= 1):
            raise ConfigError(f"methods: n_centers must be 'adaptive' or a positive integer")
        return cfg

    @property
    def adaptive(self):
        return self.name.startswith("AdaDKRR")

    def display(self):
        if self.label:
            return self.label
        if not self.adaptive:
            return self.name
        extra = []
        if self.centers != "sobol" or self.n_centers != "adaptive":
            extra.append(f"{self.centers},n={self.n_centers}")
        if self.anchors != "train":
            extra.append(f"anchors={self.anchors}")
        return self.name + (f"[{';'.join(extra)}]" if extra else "")


@dataclass(frozen=True)
class PartitionConfig:
    kind: str = "uniform"
    R: int = None

    @classmethod
    def from_value(cls, v):
        if isinstance(v, str):
            v = {"kind": v}
        _reject_unknown(v, cls.__dataclass_fields__, "partition")
        cfg = cls(**v)
        if cfg.kind == "random_min":
            if not (isinstance(cfg.R, int) and cfg.R >= 1):
                raise ConfigError("partition: random_min needs an integer R >= 1")
        elif cfg.kind != "uniform":
            raise ConfigError(f"partition: unsupported kind <{cfg.kind}>")
        return cfg

    def suffix(self):
        return "{Usplit}" if self.kind == "uniform" else f"{{R={self.R}}}"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on; see the JSON presets for examples."""

    dataset: DatasetConfig
    methods: tuple
    m: tuple
    grid: object = "wendland"
    partitions: tuple = (PartitionConfig(),)
    mu: float = constants.default_mu
    trials: int = constants.default_trials
    seed: int = 0
    holdout_fraction: float = constants.default_holdout_fraction
    folds: int = constants.default_folds
    M: float = None
    record_wall_time: bool = False
    threads: int = None
    out_dir: str = "results"
    name: str = ""
    description: str = ""

    @classmethod
    def from_dict(cls, d, base_dir=None):
        d = dict(d)
        _reject_unknown(d, cls.__dataclass_fields__, "config")
        for key in ("dataset", "methods", "m"):
            if key not in d:
                raise ConfigError(f"config: missing '{key}'")
        try:
            d["dataset"] = DatasetConfig.from_dict(d["dataset"], base_dir)
            d["methods"] = tuple(MethodConfig.from_value(v) for v in d["methods"])
            d["m"] = tuple(int(v) for v in d["m"])
            d["partitions"] = tuple(
                PartitionConfig.from_value(v) for v in d.get("partitions", ["uniform"])
            )
            cfg = cls(**d)
        except TypeError as e:
            raise ConfigError(f"config: {e}") from e
        cfg.validate()
        return cfg

    def validate(self):
        if self.trials < 1:
            raise ConfigError(f"config: trials must be >= 1, got {self.trials}")
        if not self.methods:
            raise ConfigError("config: no methods")
        if not self.m or any(v < 1 for v in self.m):
            raise ConfigError(f"config: m values must be >= 1, got {list(self.m)}")
        if not self.mu > 0:
            raise ConfigError(f"config: mu must be positive, got {self.mu}")
        if self.M is not None and not self.M > 0:
            raise ConfigError(f"config: M must be positive, got {self.M}")
        if not (0 < self.holdout_fraction < 1) or self.folds < 2:
            raise ConfigError("config: holdout_fraction must be in (0, 1) and folds >= 2")
        labels = [label for label, _, _ in self.variants()]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"config: duplicate method labels {labels}")
        self.param_grid()

    def param_grid(self):
        g = self.grid
        try:
            if isinstance(g, str):
                return preset_grid(g)
            if isinstance(g, dict):
                _reject_unknown(g, ["preset", "family", "lambdas", "lambda_base", "sigmas", "sigma_range"], "grid")
                if "preset" in g:
                    return preset_grid(g["preset"])
                lambdas = g.get("lambdas") or lambda_grid(g.get("lambda_base", 2))
                if g.get("family", "wendland") == "wendland":
                    kernels = [KernelSpec.wendland()]
                else:
                    sigmas = g.get("sigmas") or sigma_grid(*g.get("sigma_range", (0.1, 10.0)))
                    kernels = [KernelSpec.gaussian(s) for s in sigmas]
                return make_grid(lambdas, kernels)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"grid: {e}") from e
        raise ConfigError(f"grid: unsupported value {g!r}")

    def variants(self):
        """(label, method, partition) for every method x partition policy."""
        tag = len(self.partitions) > 1 or self.partitions[0].kind != "uniform"
        return [
            (meth.display() + (part.suffix() if tag else ""), meth, part)
            for meth in self.methods
            for part in self.partitions
        ]


def load_config(source, **overrides):
    """Load a config from a preset name, JSON path or mapping.

    Keyword overrides (e.g. ``seed``, ``out_dir``, ``threads``) replace
    config values when not None.
    """
    base_dir = None
    if isinstance(source, dict):
        raw = dict(source)
    else:
        path = Path(source)
        if path.exists():
            base_dir = path.parent
        else:
            # data paths in shipped presets are relative to the working directory
            path = PRESET_DIR / f"{source}.json"
            if not path.exists():
                raise ConfigError(f"config file or preset not found: {source}")
        try:
            with open(path) as f:
                raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
    for k, v in overrides.items():
        if v is not None:
            raw[k] = v
    return ExperimentConfig.from_dict(raw, base_dir)


def list_presets():
    """(name, description) for every shipped preset."""
    out = []
    for path in sorted(PRESET_DIR.glob("*.json")):
        with open(path) as f:
            out.append((path.stem, json.load(f).get("description", "")))
    return out


@dataclass(frozen=True)
class Cell:
    label: str
    method: MethodConfig
    partition: PartitionConfig
    m: int
    trial: int


@dataclass(frozen=True)
class TrialData:
    train: DataSet
    test_inputs: np.ndarray
    test_truth: np.ndarray


@dataclass
class CellResult:
    cell: Cell
    test_mse: float = None
    comm_scalars: int = None
    wall_ms: float = None
    selections: list = field(default_factory=list)
    error: str = None
    max_abs_prediction: float = None
    truncation_level: float = None


@dataclass
class ExperimentResult:
    """One row per (method, m, trial) that completed, plus aborted rows."""

    results: list = field(default_factory=list)
    selections: list = field(default_factory=list)
    aborted: list = field(default_factory=list)
    variants: dict = field(default_factory=dict)
    partitions: dict = field(default_factory=dict)
    # (method, m, trial, max |prediction|, truncation level) per completed row
    bounds: list = field(default_factory=list)

    def add(self, res):
        c = res.cell
        self.variants.setdefault(c.label, c.method)
        self.partitions.setdefault(c.label, c.partition)
        if res.error is not None:
            self.aborted.append([c.label, c.m, c.trial, res.error])
            return
        self.results.append([c.label, c.m, c.trial, res.test_mse, res.comm_scalars, res.wall_ms])
        self.bounds.append([c.label, c.m, c.trial, res.max_abs_prediction, res.truncation_level])
        for s in res.selections:
            self.selections.append([c.label, c.m, c.trial, s.machine, s.lam, s.sigma])

    def frame(self):
        return rst2df(self.results, list(constants.results_columns))

    def bounds_frame(self):
        return rst2df(self.bounds, list(constants.bound_columns))


def iter_cells(config):
    return [
        Cell(label, meth, part, m, trial)
        for trial in range(config.trials)
        for label, meth, part in config.variants()
        for m in config.m
    ]


class TrialCache(object):
    """Builds (and memoises) the train/test data of each trial."""

    def __init__(self, config):
        self._config = config
        self._trials = {}
        self._raw = None

    def __call__(self, trial):
        if trial not in self._trials:
            self._trials[trial] = self._build(trial)
        return self._trials[trial]

    def _build(self, trial):
        ds = self._config.dataset
        tseed = derive_seed(self._config.seed, trial)
        if ds.kind == "synthetic":
            train, _ = gen_synthetic(ds.target, ds.train_size, ds.dim, ds.noise_std, derive_seed(tseed, 0))
            test, clean = gen_synthetic(ds.target, ds.test_size, ds.dim, 0.0, derive_seed(tseed, 1))
            return TrialData(train, test.inputs, clean)
        if self._raw is None:
            self._raw = load_csv(ds.path, ds.schema)
            self._columns = list(ds.schema.inputs)
        tr, te = holdout_rows(len(self._raw), derive_seed(tseed, 0), ds.train_fraction)
        prep = Preprocessor(ds.schema, self._columns)
        train, test = prep.fit_transform(self._raw.subset(tr), self._raw.subset(te))
        return TrialData(train, test.inputs, test.outputs)


def _partition(cell, N, tseed):
    pseed = derive_seed(tseed, 2, cell.m, 0 if cell.partition.R is None else cell.partition.R)
    if cell.partition.kind == "uniform":
        return partition_uniform(N, cell.m, pseed)
    return partition_random_min(N, cell.m, cell.partition.R, pseed)


def run_cell(config, cell, cache):
    """Run one (method, partition, m, trial) cell; errors are captured, not raised."""
    res = CellResult(cell)
    t0 = time.perf_counter()
    try:
        data = cache(cell.trial)
        tseed = derive_seed(config.seed, cell.trial)
        split_seed = derive_seed(tseed, 3)
        grid = config.param_grid()
        name = cell.method.name
        Q = len(data.test_truth)
        if name == "KRR-whole-data":
            # same fold seed as machine 0 of a one-machine run
            plan = SplitPlan.kfold(config.folds, derive_seed(split_seed, 0))
            lam, kern = local_cv_select(data.train, grid, plan)
            pred = predict(fit_krr(data.train, kern, lam), data.test_inputs)
            res.selections = [Selection(0, lam, kern)]
            res.comm_scalars = 0
        else:
            partition = _partition(cell, len(data.train), tseed)
            if cell.method.adaptive:
                plan = (
                    SplitPlan.holdout(config.holdout_fraction, split_seed)
                    if name == "AdaDKRR-holdout"
                    else SplitPlan.kfold(config.folds, split_seed)
                )
                gp, sel, ledger = run_adadkrr(
                    data.train,
                    data.test_inputs,
                    partition,
                    grid,
                    plan,
                    centers_policy=cell.method.n_centers,
                    mu=config.mu,
                    M=config.M,
                    center_kind=cell.method.centers,
                    center_seed=derive_seed(tseed, 4),
                    anchors=cell.method.anchors,
                    threads=config.threads,
                )
                res.truncation_level = gp.bound
            else:
                plan = SplitPlan.kfold(config.folds, split_seed)
                strategy = "dkrrlog" if name == "DKRRLog" else "dkrr"
                gp, sel, ledger = run_baseline(
                    strategy,
                    data.train,
                    data.test_inputs,
                    partition,
                    grid,
                    plan,
                    threads=config.threads,
                    keep_per_machine=name == "DKRR-best",
                )
            res.selections = sel
            res.comm_scalars = ledger.total_scalars
            pred = gp.values
            if name == "DKRR-best":
                mses = [test_mse(p, data.test_truth) for p in gp.per_machine_values]
                best = int(np.argmin(mses))
                pred = gp.per_machine_values[best]
        res.test_mse = test_mse(pred, data.test_truth)
        res.max_abs_prediction = float(np.max(np.abs(pred))) if Q else 0.0
    except Exception as e:
        msg = f"{type(e).__name__}: {e}"
        warnings.warn(f"failed to run {cell.label} m={cell.m} trial={cell.trial}: {msg}")
        logger.warning("aborted %s m=%d trial=%d: %s", cell.label, cell.m, cell.trial, msg)
        res.error = msg
        return res
    if config.record_wall_time:
        res.wall_ms = (time.perf_counter() - t0) * 1000.0
    return res


def run_experiment(config, progress=True, cells=None):
    """Run every cell of ``config`` in a fixed order.

    :param config: experiment configuration
    :type config: ExperimentConfig
    :param progress: show a tqdm bar
    :param cells: optional subset of :func:`iter_cells` (e.g. one MPI rank's share)
    :rtype: ExperimentResult
    """
    cache = TrialCache(config)
    result = ExperimentResult()
    cells = iter_cells(config) if cells is None else cells
    for cell in tqdm(cells, disable=not progress, desc=config.name or "cells"):
        logger.info("cell %s m=%d trial=%d", cell.label, cell.m, cell.trial)
        result.add(run_cell(config, cell, cache))
    return result


def merge_results(parts, config):
    """Merge per-rank lists of CellResult back into :func:`iter_cells` order."""
    merged = ExperimentResult()
    position = {(c.label, c.m, c.trial): i for i, c in enumerate(iter_cells(config))}
    cell_results = [r for part in parts for r in part]
    for r in sorted(cell_results, key=lambda r: position[(r.cell.label, r.cell.m, r.cell.trial)]):
        merged.add(r)
    return merged


def summarize(result):
    """Mean and population std of test MSE over trials per (method, m)."""
    df = result.frame()
    if df.empty:
        return pd.DataFrame(columns=constants.summary_columns)
    g = df.groupby(["method", "m"], sort=False)
    out = g.agg(
        trials=("test_mse", "size"),
        mse_mean=("test_mse", "mean"),
        mse_std_pop=("test_mse", lambda s: float(np.std(s.to_numpy(), ddof=0))),
        comm_scalars_mean=("comm_scalars", "mean"),
    ).reset_index()[constants.summary_columns]
    best = _best_over_n(out, result)
    if best:
        out = pd.concat([out, rst2df(best, list(constants.summary_columns))], ignore_index=True)
    return out


def _best_over_n(summary, result):
    """Rows for the best fixed center count per (variant family, m).

    A family is an AdaDKRR method with one center kind, anchor choice and
    partition policy swept over two or more fixed ``n_centers``; its row is
    labelled e.g. ``AdaDKRR-holdout[sobol,n=best]``.
    """
    families = {}
    for label, meth in result.variants.items():
        if not meth.adaptive or meth.n_centers == "adaptive" or meth.label:
            continue
        suffix = result.partitions[label].suffix()
        extra = "" if meth.anchors == "train" else f";anchors={meth.anchors}"
        key = f"{meth.name}[{meth.centers},n=best{extra}]" + (suffix if label.endswith(suffix) else "")
        families.setdefault(key, []).append(label)
    rows = []
    for key, labels in families.items():
        if len(labels) < 2:
            continue
        sub = summary[summary["method"].isin(labels)]
        for m, g in sub.groupby("m", sort=False):
            top = g.loc[g["mse_mean"].idxmin()]
            rows.append([key, m, top["trials"], top["mse_mean"], top["mse_std_pop"], top["comm_scalars_mean"]])
    return rows


def plot_frames(summary, variants):
    """Plot-data tables: mean MSE vs m per method, and vs n for fixed-n variants."""
    if summary.empty:
        vs_m = pd.DataFrame(columns=["m"])
    else:
        vs_m = summary.pivot(index="m", columns="method", values="mse_mean")
        vs_m = vs_m[list(dict.fromkeys(summary["method"]))].reset_index()
        vs_m.columns.name = None
    rows = []
    for _, r in summary.iterrows():
        meth = variants.get(r["method"])
        if meth is not None and meth.adaptive and meth.n_centers != "adaptive":
            rows.append([f"{meth.name}[{meth.centers}]", r["m"], meth.n_centers, r["mse_mean"]])
    vs_n = pd.DataFrame(rows, columns=["method", "m", "n", "mse_mean"])
    return vs_m, vs_n


def emit_outputs(result, out_dir):
    """Write results, summary, selections, aborted rows and plot data as CSV.

    :return: list of written paths
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out_dir}: {e}") from e
    summary = summarize(result)
    vs_m, vs_n = plot_frames(summary, result.variants)
    tables = {
        "results.csv": result.frame(),
        "summary.csv": summary,
        "selections.csv": rst2df(result.selections, list(constants.selection_columns)),
        "aborted.csv": rst2df(result.aborted, list(constants.aborted_columns)),
        "plot_mse_vs_m.csv": vs_m,
        "plot_mse_vs_n.csv": vs_n,
    }
    written = []
    for name, df in tables.items():
        path = out_dir / name
        try:
            df.to_csv(path, index=False, float_format=constants.float_format)
        except OSError as e:
            raise OSError(f"failed to write {path}: {e}") from e
        written.append(path)
    return written
