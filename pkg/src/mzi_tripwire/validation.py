"""Input validation helpers shared by the estimators and the config layer."""

from __future__ import annotations

import math
from numbers import Real

import numpy as np


def check_scalar(value, name: str, *, min_val=None, max_val=None,
                 include_min: bool = True, include_max: bool = True,
                 allow_inf: bool = False) -> float:
    """Validate a real scalar and return it as ``float``.

    Mirrors :func:`sklearn.utils.check_scalar` but keeps physics-friendly
    messages and optionally admits ``inf`` (used for full-time windows).
    """
    if isinstance(value, bool) or not isinstance(value, Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if math.isnan(value):
        raise ValueError(f"{name} must not be NaN")
    if math.isinf(value) and not allow_inf:
        raise ValueError(f"{name} must be finite, got {value}")
    if min_val is not None:
        if include_min and value < min_val:
            raise ValueError(f"{name} == {value}, must be >= {min_val}")
        if not include_min and value <= min_val:
            raise ValueError(f"{name} == {value}, must be > {min_val}")
    if max_val is not None:
        if include_max and value > max_val:
            raise ValueError(f"{name} == {value}, must be <= {max_val}")
        if not include_max and value >= max_val:
            raise ValueError(f"{name} == {value}, must be < {max_val}")
    return value


def check_probability(value, name: str) -> float:
    return check_scalar(value, name, min_val=0.0, max_val=1.0)


def check_clicks(X) -> np.ndarray:
    """Coerce click data to an ``(n, 2)`` integer indicator array.

    Accepts a sequence of :class:`~mzi_tripwire.detection.DetectionRecord`
    or anything array-like with two 0/1 columns (port w1, port w2).
    """
    if isinstance(X, np.ndarray):
        arr = X
    else:
        X = list(X)
        if X and hasattr(X[0], "outcome"):
            return np.array([r.outcome.indicators for r in X], dtype=np.int64).reshape(-1, 2)
        arr = np.asarray(X)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"click data must have shape (n, 2), got {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("click indicators must be 0 or 1")
    return arr.astype(np.int64, copy=False)
