from typing import Sequence

import numpy as np

from .exceptions import DimensionMismatchError, ValidationError


def validate_dimension(vector: np.ndarray, expected: int, what: str = "vector"):
    if vector.ndim != 1 or vector.shape[0] != expected:
        raise DimensionMismatchError(
            f"{what} has shape {vector.shape}, expected ({expected},)"
        )


def validate_time_grid(times: Sequence[float], allow_negative: bool = False):
    values = np.asarray(list(times), dtype=float)
    if values.size == 0:
        raise ValidationError("Time grid is empty")
    if not np.all(np.isfinite(values)):
        raise ValidationError("Time grid contains non-finite values")
    if not allow_negative and np.any(values < 0):
        raise ValidationError(f"Negative times are not allowed: min={values.min()}")
    if np.any(np.diff(values) < 0):
        raise ValidationError("Time grid must be ascending")
    return values


def validate_distribution(p: np.ndarray, tolerance: float = 1e-10, what: str = "distribution"):
    if np.any(~np.isfinite(p)):
        raise ValidationError(f"{what} contains non-finite entries")
    if np.any(p < -1e-12):
        raise ValidationError(f"{what} has negative entries (min {p.min():.3e})")
    total = float(np.sum(p))
    if abs(total - 1.0) > tolerance:
        raise ValidationError(f"{what} sums to {total!r}, expected 1 within {tolerance:g}")

