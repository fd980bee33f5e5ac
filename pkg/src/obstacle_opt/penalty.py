"""Piecewise penalty function used to relax the obstacle constraint.

beta(r) vanishes for r >= 0, is -r^2/delta on [-1/2, 0] and continues
linearly as (r + 1/4)/delta below -1/2; it is C^1 with 0 <= beta' <= 1/delta.
Accepts scalars or arrays and returns the matching shape.
"""

from __future__ import annotations

import numpy as np

__all__ = ["beta", "beta_prime"]


def _check_delta(delta: float) -> float:
    if not delta > 0.0:
        raise ValueError(f"penalty parameter delta must be positive, got {delta}")
    return float(delta)


def beta(r, delta: float):
    delta = _check_delta(delta)
    r = np.asarray(r, dtype=float)
    out = np.where(
        r >= 0.0, 0.0, np.where(r >= -0.5, -(r * r) / delta, (r + 0.25) / delta)
    )
    return float(out) if out.ndim == 0 else out


def beta_prime(r, delta: float):
    delta = _check_delta(delta)
    r = np.asarray(r, dtype=float)
    out = np.where(
        r >= 0.0, 0.0, np.where(r >= -0.5, -2.0 * r / delta, 1.0 / delta)
    )
    return float(out) if out.ndim == 0 else out
