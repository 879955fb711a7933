"""Small input-validation helpers used at module boundaries.

All numeric payloads are converted to contiguous float64 arrays once, on the
way in; inner loops then run unchecked.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DataError


def as_matrix(a, name: str = "matrix", *, check_finite: bool = True) -> np.ndarray:
    """Coerce to a 2-D C-contiguous float64 array."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DataError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.size == 0:
        raise DataError(f"{name} must be non-empty, got shape {m.shape}")
    if check_finite and not np.isfinite(m).all():
        raise DataError(f"{name} contains NaN or Inf entries")
    return m


def as_vector(a, name: str = "vector", *, check_finite: bool = True) -> np.ndarray:
    """Coerce to a 1-D C-contiguous float64 array."""
    v = np.ascontiguousarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise DataError(f"{name} must be 1-D, got ndim={v.ndim}")
    if check_finite and not np.isfinite(v).all():
        raise DataError(f"{name} contains NaN or Inf entries")
    return v


def require(condition: bool, message: str, error=ConfigurationError) -> None:
    if not condition:
        raise error(message)


def positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def finite_float(value, name: str) -> float:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(f):
        raise ConfigurationError(f"{name} must be finite, got {f!r}")
    return f
