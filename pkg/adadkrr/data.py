"""
Synthetic targets and the real-data ingestion pipeline.

Real data arrive as CSV files described by a JSON schema::

    {
        "name": "sgemm",
        "header": true,
        "inputs": ["MWG", "NWG", ...],
        "targets": ["Run1 (ms)", "Run2 (ms)", "Run3 (ms)", "Run4 (ms)"],
        "average": "mean",
        "derived": [{"name": "usage_time", "op": "date_diff_days",
                     "end": "creationDate", "start": "regDate", "format": "%Y%m%d"}],
        "bins": [{"column": "power", "boundaries": [...], "labels": [...]}],
        "minmax": true,
        "log_target": true,
        "dropna": false,
        "sep": ",",
        "na_values": ["-"]
    }

:func:`load_csv` applies column extraction, derived columns and target
averaging; :class:`Preprocessor` then bins, min-max scales (extrema from the
training rows only) and log-transforms the target.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.preprocessing import MinMaxScaler

from .errors import (
    DataParseError,
    DegenerateColumnError,
    DomainError,
    EmptyDataError,
    OutOfRangeError,
)
from .krr import DataSet
from .utils import as_points

TARGETS = ("g1", "g2")


def eval_target(kind, x):
    """Evaluate g1 or g2 at one point (returns float) or at each row of a matrix."""
    kind = str(kind).lower()
    if kind not in TARGETS:
        raise ValueError(f"Unsupported target <{kind}>")
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim <= 1
    r = np.linalg.norm(as_points(arr.reshape(1, -1) if single else arr), axis=1)
    if kind == "g1":
        val = np.where(r <= 1.0, (1.0 - r) ** 6 * (35.0 * r**2 + 18.0 * r + 3.0), 0.0)
    else:
        val = (r - 1.0) * (r - 2.0) * (r - 3.0)
    return float(val[0]) if single else val


def gen_synthetic(kind, N, d, noise_std, seed):
    """Draw N uniform inputs on [0, 1]^d and noisy outputs g(x) + N(0, noise_std^2).

    :return: (training data, noise-free targets)
    :rtype: tuple
    """
    if N < 1 or d < 1:
        raise ValueError(f"need N >= 1 and d >= 1, got N={N}, d={d}")
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    rng = np.random.default_rng(seed)
    X = rng.random((N, d))
    clean = eval_target(kind, X)
    y = clean
    if noise_std > 0:
        y = clean + noise_std * rng.standard_normal(N)
    return DataSet(X, y), clean


def fit_apply_minmax(train_cols, test_cols=None):
    """Min-max scale columns with training extrema; test values are clamped to [0, 1].

    :return: (scaled train, scaled test or None)
    """
    train = np.asarray(train_cols, dtype=np.float64)
    if train.ndim == 1:
        train = train.reshape(-1, 1)
    span = train.max(axis=0) - train.min(axis=0)
    flat = np.flatnonzero(~(span > 0))
    if flat.size:
        raise DegenerateColumnError(f"constant training column(s) at position {flat.tolist()}")
    scaler = MinMaxScaler(clip=True).fit(train)
    out_train = scaler.transform(train)
    out_test = None
    if test_cols is not None:
        test = np.asarray(test_cols, dtype=np.float64)
        if test.ndim == 1:
            test = test.reshape(-1, 1)
        out_test = scaler.transform(test)
    return out_train, out_test


def bin_column(values, boundaries, labels=None):
    """Map values to bin labels; bin k covers (b_k, b_{k+1}], the first bin is closed.

    :param boundaries: strictly increasing edges, the last may be ``inf``
    :param labels: one label per bin, defaults to 0..k-1
    """
    edges = np.asarray(boundaries, dtype=np.float64)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin boundaries must be strictly increasing with at least two edges")
    if labels is None:
        labels = list(range(edges.size - 1))
    if len(labels) != edges.size - 1:
        raise ValueError(f"{len(labels)} labels for {edges.size - 1} bins")
    vals = np.asarray(values, dtype=np.float64)
    codes = pd.cut(vals, bins=edges, right=True, include_lowest=True, labels=False)
    codes = np.asarray(codes, dtype=np.float64)
    bad = np.flatnonzero(np.isnan(codes))
    if bad.size:
        raise OutOfRangeError(
            f"value {vals[bad[0]]!r} at position {bad[0]} is outside [{edges[0]}, {edges[-1]}]"
        )
    return np.asarray(labels)[codes.astype(np.intp)]


def log_target(values):
    v = np.asarray(values, dtype=np.float64)
    if np.any(~(v > 0)):
        raise DomainError("log target needs strictly positive values")
    return np.log(v)


@dataclass(frozen=True)
class BinSpec:
    column: object
    boundaries: tuple
    labels: tuple = None


@dataclass(frozen=True)
class Schema:
    """Column roles and transform flags for one CSV layout."""

    inputs: tuple
    targets: tuple
    name: str = ""
    header: bool = True
    average: str = "mean"
    derived: tuple = ()
    bins: tuple = ()
    minmax: bool = True
    log_target: bool = False
    dropna: bool = False
    sep: str = ","
    na_values: tuple = ()

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known - {"description"}
        if unknown:
            raise ValueError(f"Unsupported schema key(s) <{sorted(unknown)}>")
        d.pop("description", None)
        if "inputs" not in d or "targets" not in d:
            raise ValueError("schema needs 'inputs' and 'targets'")
        bins = []
        for b in d.get("bins", ()):
            edges = [float(e) for e in b["boundaries"]]
            labels = tuple(b["labels"]) if b.get("labels") is not None else None
            bins.append(BinSpec(b["column"], tuple(edges), labels))
        d["bins"] = tuple(bins)
        d["inputs"] = tuple(d["inputs"])
        d["targets"] = tuple(d["targets"])
        d["derived"] = tuple(dict(x) for x in d.get("derived", ()))
        d["na_values"] = tuple(str(v) for v in d.get("na_values", ()))
        if d.get("average", "mean") not in ("mean", "median", "first"):
            raise ValueError(f"Unsupported averaging rule <{d['average']}>")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _derive(frame, spec):
    op = spec.get("op")
    if op == "date_diff_days":
        fmt = spec.get("format", "%Y%m%d")
        end = pd.to_datetime(frame[spec["end"]].astype(str), format=fmt, errors="coerce")
        start = pd.to_datetime(frame[spec["start"]].astype(str), format=fmt, errors="coerce")
        return (end - start).dt.days.astype("float64")
    raise ValueError(f"Unsupported derived column op <{op}>")


def _numeric(frame, column):
    raw = frame[column]
    num = pd.to_numeric(raw, errors="coerce")
    bad = np.flatnonzero(num.isna().to_numpy())
    if bad.size:
        row = int(bad[0])
        cell = raw.iloc[row]
        what = "missing" if pd.isna(cell) else f"non-numeric ({cell!r})"
        raise DataParseError(f"{what} value at row {row}, column {column!r}", row=row, column=column)
    return num.to_numpy(dtype=np.float64)


def read_table(path, schema):
    """Read a CSV into (raw input frame, averaged target vector).

    Derived columns are appended before input extraction; no scaling happens here.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path,
            header=0 if schema.header else None,
            sep=schema.sep,
            na_values=list(schema.na_values) or None,
        )
    except pd.errors.EmptyDataError as e:
        raise EmptyDataError(f"{path}: empty file") from e
    if len(frame) == 0:
        raise EmptyDataError(f"{path}: no data rows")
    for spec in schema.derived:
        frame[spec["name"]] = _derive(frame, spec)
    wanted = list(schema.inputs) + list(schema.targets)
    missing = [c for c in wanted if c not in frame.columns]
    if missing:
        raise DataParseError(f"{path}: missing column(s) {missing}", column=missing[0])
    if schema.dropna:
        frame = frame.dropna(subset=wanted).reset_index(drop=True)
        if len(frame) == 0:
            raise EmptyDataError(f"{path}: no complete rows")
    inputs = pd.DataFrame({c: _numeric(frame, c) for c in schema.inputs})
    runs = np.column_stack([_numeric(frame, c) for c in schema.targets])
    if schema.average == "mean":
        target = runs.mean(axis=1)
    elif schema.average == "median":
        target = np.median(runs, axis=1)
    else:
        target = runs[:, 0]
    return inputs, target


def load_csv(path, schema):
    """Load a CSV as a DataSet of raw inputs and the averaged target.

    :param path: CSV file
    :param schema: column roles
    :type schema: Schema or dict
    :rtype: DataSet
    """
    if isinstance(schema, dict):
        schema = Schema.from_dict(schema)
    inputs, target = read_table(path, schema)
    return DataSet(inputs.to_numpy(dtype=np.float64), target)


@dataclass
class Preprocessor:
    """Binning, min-max scaling and log target, fitted on training rows.

    :param schema: column roles and flags
    :param columns: input column names in DataSet column order
    """

    schema: Schema
    columns: list
    fitted_min: np.ndarray = field(default=None, init=False)
    fitted_max: np.ndarray = field(default=None, init=False)

    def _bin(self, X):
        X = X.copy()
        for b in self.schema.bins:
            if b.column not in self.columns:
                raise DataParseError(f"binned column {b.column!r} is not an input", column=b.column)
            j = self.columns.index(b.column)
            X[:, j] = bin_column(X[:, j], b.boundaries, b.labels).astype(np.float64)
        return X

    def _target(self, y):
        return log_target(y) if self.schema.log_target else np.asarray(y, dtype=np.float64)

    def fit_transform(self, train, test):
        """:return: (train DataSet, test DataSet) ready for the silo"""
        X_tr = self._bin(train.inputs)
        X_te = self._bin(test.inputs)
        if self.schema.minmax:
            self.fitted_min = X_tr.min(axis=0)
            self.fitted_max = X_tr.max(axis=0)
            try:
                X_tr, X_te = fit_apply_minmax(X_tr, X_te)
            except DegenerateColumnError as e:
                flat = np.flatnonzero(~(self.fitted_max > self.fitted_min))
                names = [self.columns[j] for j in flat]
                raise DegenerateColumnError(f"constant training column(s) {names}") from e
        return (
            DataSet(X_tr, self._target(train.outputs)),
            DataSet(X_te, self._target(test.outputs)),
        )


def holdout_rows(n, seed, train_fraction=0.5):
    """Random train/test division of ``n`` rows (each half sorted)."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(np.floor(train_fraction * n + 0.5))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])
