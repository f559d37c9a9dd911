import numpy as np
import pandas as pd

from .errors import InputShapeError


def as_points(x, name="points"):
    """Coerce ``x`` to a C-ordered float64 matrix of shape (N, d).

    A 1-D input is read as N points in one dimension.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise InputShapeError(f"{name} must be a point list, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def as_vector(v, name="values"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    elif arr.ndim != 1:
        raise InputShapeError(f"{name} must be a vector, got shape {arr.shape}")
    return arr


def check_same_dim(a, b, what="points"):
    if a.shape[1] != b.shape[1]:
        raise InputShapeError(
            f"{what}: dimension mismatch ({a.shape[1]} vs {b.shape[1]})"
        )


def derive_seed(master, *keys):
    """Derive an independent 32-bit seed from ``master`` and an index path.

    The value only depends on (master, keys), never on call order.
    """
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def rst2df(result, keys=None):
    if isinstance(keys, str):
        return pd.DataFrame(result, columns=[keys])
    elif isinstance(keys, list):
        return pd.DataFrame(result, columns=keys)
    else:
        return pd.DataFrame(result)
