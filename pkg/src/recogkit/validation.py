"""Input validation helpers shared by the public API."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DegenerateVectorError, DimensionMismatchError


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-d float64 array with nonzero Euclidean norm."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DegenerateVectorError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if v.size == 0:
        raise DegenerateVectorError(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise DegenerateVectorError(f"{name} contains non-finite entries")
    if not np.any(v):
        raise DegenerateVectorError(f"{name} has zero norm")
    return v


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float64 array."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DegenerateVectorError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DegenerateVectorError(f"{name} contains non-finite entries")
    return m


def check_same_dim(expected: int, actual: int, name: str = "vector") -> None:
    if expected != actual:
        raise DimensionMismatchError(
            f"{name} has dimension {actual}, expected {expected}"
        )


def check_positive(value, name: str) -> None:
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")


def check_nonnegative(value, name: str) -> None:
    if not value >= 0:
        raise ConfigError(f"{name} must be nonnegative, got {value!r}")


def check_unit_interval(value, name: str, *, open_ends: bool = True) -> None:
    ok = 0.0 < value < 1.0 if open_ends else 0.0 <= value <= 1.0
    if not ok:
        bounds = "(0, 1)" if open_ends else "[0, 1]"
        raise ConfigError(f"{name} must lie in {bounds}, got {value!r}")
