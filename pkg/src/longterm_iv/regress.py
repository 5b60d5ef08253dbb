"""Sample-space primitives.

Every product here is the raw inner product ``A.B = sum_i A_i B_i``; nothing
subtracts means unless the caller asks for it (see ``center`` in the
estimators). Only ``ratio_eps_over_d`` works with sample means by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateRegressorError,
    NearPoleError,
    SingularDesignError,
    UnstableDenominatorError,
    ValidationError,
)
from .series import Series

# |denominator| < POLE_TOL * n counts as zero
POLE_TOL = 1e-8
# |mean(x)| < RATIO_TOL * sd(x)/sqrt(n) counts as zero
RATIO_TOL = 2.0


def _vec(u, name="vector") -> np.ndarray:
    arr = np.asarray(getattr(u, "values", u), dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValidationError(f"{name} must be a non-empty 1-d array")
    return arr


def _pair(u, v):
    u, v = _vec(u, "u"), _vec(v, "v")
    if u.size != v.size:
        raise ValidationError(f"length mismatch: {u.size} != {v.size}")
    return u, v


@dataclass(frozen=True)
class Residual:
    values: np.ndarray
    source: str = "R_c"

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def dot(u, v) -> float:
    u, v = _pair(u, v)
    return float(u @ v)


def ols_slope(y, x) -> float:
    """No-intercept slope ``y.x / x.x``."""
    y, x = _pair(y, x)
    xx = float(x @ x)
    if xx <= 0.0:
        raise DegenerateRegressorError("regressor has zero norm", denom=xx)
    return float(y @ x) / xx


def residual(y, x, source: str = "R_c") -> Residual:
    """``y - ols_slope(y, x) * x``; orthogonal to x up to rounding."""
    y, x = _pair(y, x)
    return Residual(y - ols_slope(y, x) * x, source)


def ratio_eps_over_d(m, x, c: float, tol: float = RATIO_TOL) -> float:
    """Ratio estimator ``mean(m - c x) / mean(x)`` of eps/d.

    Needs the confounder to have nonzero mean; a mean of x within ``tol``
    standard errors of zero raises :class:`UnstableDenominatorError`.
    """
    m, x = _pair(m, x)
    n = x.size
    xbar = float(x.mean())
    se = float(x.std()) / math.sqrt(n) if n > 1 else 0.0
    if xbar == 0.0 or abs(xbar) < tol * se:
        raise UnstableDenominatorError(
            f"mean(x)={xbar:.3g} within {tol} standard errors ({se:.3g}) of zero", denom=xbar
        )
    return float((m - c * x).mean()) / xbar


def poly_regress(r, x, order: int, intercept: bool = False, cond_max: float = 1e12):
    """Least-squares fit of ``r`` on ``x, x**2, ..., x**order``.

    Returns a :class:`Series`; with ``intercept=True`` a constant column is
    added and ``(const, Series)`` is returned. The design is built on
    ``x / max|x|`` and solved by SVD (``lstsq``); a condition number above
    ``cond_max`` on that scaled design raises :class:`SingularDesignError`.
    """
    r, x = _pair(r, x)
    if order < 1:
        raise ValidationError("order must be >= 1")
    n_cols = order + int(intercept)
    if x.size <= n_cols:
        raise ValidationError(f"need more than {n_cols} samples for an order-{order} fit")
    scale = float(np.max(np.abs(x)))
    if scale == 0.0:
        raise SingularDesignError("regressor is identically zero")
    xs = x / scale
    powers = range(0 if intercept else 1, order + 1)
    A = np.column_stack([xs**k for k in powers])
    coef, _, rank, sv = np.linalg.lstsq(A, r, rcond=None)
    if rank < n_cols or sv[0] > cond_max * sv[-1]:
        raise SingularDesignError(
            f"design of rank {rank}/{n_cols}, condition {sv[0] / max(sv[-1], 1e-300):.3g}"
        )
    coef = coef / np.array([scale**k for k in powers])
    if intercept:
        return float(coef[0]), Series(tuple(coef[1:]))
    return Series(tuple(coef))


def iv_estimate(r, m, y, tol: float | None = None) -> float:
    """Scalar instrumental estimate ``r.y / r.m``.

    ``tol`` is an absolute bound on ``|r.m|``, default ``POLE_TOL * n``.
    """
    r, m = _pair(r, m)
    _, y = _pair(r, y)
    den = float(r @ m)
    if tol is None:
        tol = POLE_TOL * r.size
    if abs(den) <= tol:
        raise NearPoleError(f"instrument denominator {den:.3g} below {tol:.3g}", denom=den)
    return float(r @ y) / den
