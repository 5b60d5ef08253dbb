"""Truncated power series without a constant term.

A :class:`Series` stores ``c_1, ..., c_m`` for ``p(x) = sum_k c_k x**k`` in the
plain monomial convention (no ``1/k!`` normalisation). The same type doubles
as the polynomial couplings ``d(W)`` and ``eps(W)`` of the partial linear
model, where it is exported as ``PolyCoeffs``.

Reversion is done by coefficient matching: knowing ``b_1..b_{k-1}`` of the
inverse, the ``x**k`` coefficient of ``d(b(x))`` is linear in ``b_k`` with
slope ``d_1``, so each step solves one scalar equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvertibilityError, ValidationError


@dataclass(frozen=True)
class Series:
    coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) < 1:
            raise ValidationError("a series needs at least the linear coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValidationError(f"non-finite series coefficient in {coeffs}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_polynomial(cls, coeffs: Sequence[float]) -> "Series":
        """Build from ``[c_0, c_1, ...]``; a nonzero ``c_0`` is rejected, not shifted."""
        coeffs = list(coeffs)
        if len(coeffs) < 2:
            raise ValidationError("polynomial must have at least a linear term")
        if coeffs[0] != 0:
            raise ValidationError(
                f"constant term {coeffs[0]!r} not allowed: couplings pass through the origin"
            )
        return cls(tuple(coeffs[1:]))

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        """Index of the highest nonzero coefficient (0 for the zero series)."""
        nz = [k + 1 for k, c in enumerate(self.coeffs) if c != 0.0]
        return nz[-1] if nz else 0

    def __getitem__(self, k: int) -> float:
        """1-based coefficient access; coefficients past the order read as 0."""
        if k < 1:
            raise IndexError("series coefficients are indexed from 1")
        return self.coeffs[k - 1] if k <= len(self.coeffs) else 0.0

    def __call__(self, x):
        # Horner; a single coefficient reduces to exactly ``c1 * x``.
        x = np.asarray(x, dtype=float)
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc * x

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x) + self.order * self.coeffs[-1]
        for k in range(self.order - 1, 0, -1):
            acc = acc * x + k * self.coeffs[k - 1]
        return acc

    def truncate(self, m: int) -> "Series":
        padded = self.coeffs + (0.0,) * max(0, m - self.order)
        return Series(padded[:m])

    def as_array(self, m: int | None = None) -> np.ndarray:
        """Coefficients ``[0, c_1, ..., c_m]`` including the zero constant."""
        m = self.order if m is None else m
        out = np.zeros(m + 1)
        k = min(m, self.order)
        out[1 : k + 1] = self.coeffs[:k]
        return out


PolyCoeffs = Series


def _truncated_mul(p: np.ndarray, q: np.ndarray, m: int) -> np.ndarray:
    out = np.convolve(p, q)[: m + 1]
    if out.size < m + 1:
        out = np.pad(out, (0, m + 1 - out.size))
    return out


def _compose_arrays(outer: np.ndarray, inner: np.ndarray, m: int) -> np.ndarray:
    """``outer(inner(x))`` through order m; both arrays carry a zero constant."""
    result = np.zeros(m + 1)
    power = np.zeros(m + 1)
    power[0] = 1.0
    # inner has no constant term, so inner**j starts at x**j and j > m contributes nothing
    for j in range(1, min(len(outer) - 1, m) + 1):
        power = _truncated_mul(power, inner, m)
        if outer[j] != 0.0:
            result += outer[j] * power
    return result


def compose_series(outer: Series, inner: Series, m: int | None = None) -> Series:
    """Coefficients of ``outer(inner(x))`` through order ``m``.

    ``m`` defaults to the larger of the two input orders.
    """
    if m is None:
        m = max(outer.order, inner.order)
    if m < 1:
        raise ValidationError("truncation order must be >= 1")
    res = _compose_arrays(outer.as_array(m), inner.as_array(m), m)
    return Series(tuple(res[1:]))


def invert_series(d: Series, m: int | None = None) -> Series:
    """Compositional inverse ``b`` with ``d(b(x)) = x + O(x**(m+1))``.

    ``m`` defaults to the order of ``d`` (the "m = n" choice); raising it adds
    the higher terms that every finite-order ``d`` induces in its inverse.

    >>> invert_series(Series((1.0, 0.5)), 3).coeffs
    (1.0, -0.5, 0.5)
    """
    if m is None:
        m = d.order
    if m < 1:
        raise ValidationError("truncation order must be >= 1")
    d1 = d[1]
    if d1 == 0.0:
        raise InvertibilityError("linear coefficient d1 is zero: series is not invertible")
    darr = d.as_array(m)
    b = np.zeros(m + 1)
    b[1] = 1.0 / d1
    for k in range(2, m + 1):
        # every term except d1*b_k is already fixed by b_1..b_{k-1}
        partial = _compose_arrays(darr, b, k)
        b[k] = -partial[k] / d1
    return Series(tuple(b[1:]))


def identity_series(m: int) -> Series:
    return Series((1.0,) + (0.0,) * (m - 1))


@dataclass(frozen=True)
class InvertibilityCheck:
    ok: bool
    witness: str

    def __bool__(self):
        return self.ok


def check_invertible_cubic(d1: float, d2: float, d3: float) -> InvertibilityCheck:
    """Global monotonicity of ``d1 w + d2 w^2 + d3 w^3`` on the real line.

    ``d'(w) = d1 + 2 d2 w + 3 d3 w^2`` keeps one sign iff ``d2**2 <= 3 d1 d3``,
    which needs ``d1`` and ``d3`` of the same sign (or ``d3 = 0``, then
    ``d2 = 0`` and ``d1 != 0``).
    """
    if d1 == 0.0 and d2 == 0.0 and d3 == 0.0:
        return InvertibilityCheck(False, "d is identically zero")
    if d3 == 0.0:
        if d2 != 0.0:
            return InvertibilityCheck(False, f"quadratic term d2={d2} with d3=0 folds d")
        if d1 == 0.0:
            return InvertibilityCheck(False, "d1 = 0 with no other terms")
        return InvertibilityCheck(True, "linear")
    prod = 3.0 * d1 * d3
    if prod < 0.0:
        return InvertibilityCheck(
            False, f"d1={d1} and d3={d3} have opposite signs (3*d1*d3={prod} < 0)"
        )
    bound = math.sqrt(prod)
    if d2 > bound:
        return InvertibilityCheck(False, f"d2={d2} > sqrt(3*d1*d3)={bound:.6g}")
    if d2 < -bound:
        return InvertibilityCheck(False, f"d2={d2} < -sqrt(3*d1*d3)={-bound:.6g}")
    return InvertibilityCheck(True, f"-{bound:.6g} <= d2={d2} <= {bound:.6g}")


def check_invertible(d: Series, lo: float = -np.inf, hi: float = np.inf,
                     n_grid: int = 20001) -> InvertibilityCheck:
    """Invertibility of ``d`` on ``[lo, hi]``.

    On the whole real line, degree <= 3 uses the closed-form cubic condition.
    On a finite interval a degree <= 3 ``d`` is checked exactly (``d'`` at
    the endpoints and at its vertex); higher degrees scan ``d'`` on a grid,
    which requires a finite interval.
    """
    finite = np.isfinite(lo) and np.isfinite(hi)
    if lo > hi:
        raise ValidationError(f"empty interval [{lo}, {hi}]")
    if d.degree <= 3:
        if not finite:
            return check_invertible_cubic(d[1], d[2], d[3])
        pts = [lo, hi]
        if d[3] != 0.0:
            vertex = -d[2] / (3.0 * d[3])
            if lo < vertex < hi:
                pts.append(vertex)
        slope = d.derivative(np.array(pts))
    elif not finite:
        raise ValidationError("degree > 3 invertibility needs a finite interval")
    else:
        slope = d.derivative(np.linspace(lo, hi, n_grid))
    if not np.any(slope != 0.0):
        return InvertibilityCheck(False, f"d' vanishes on [{lo:.6g}, {hi:.6g}]")
    if np.all(slope >= 0.0) or np.all(slope <= 0.0):
        return InvertibilityCheck(True, f"d' keeps one sign on [{lo:.6g}, {hi:.6g}]")
    return InvertibilityCheck(False, f"d' changes sign on [{lo:.6g}, {hi:.6g}]")


def eps_over_d_series(eps: Series, d: Series, m: int | None = None) -> Series:
    """Backdoor series ``eps o d^{-1}`` through order ``m``."""
    if m is None:
        m = max(eps.order, d.order)
    return compose_series(eps, invert_series(d, m), m)


def series_stability(eps: Series, d: Series, x, m: int) -> float:
    """Max pointwise change of ``eps o d^{-1}`` between orders ``m`` and ``m+1`` on x."""
    lo = eps_over_d_series(eps, d, m)(x)
    hi = eps_over_d_series(eps, d, m + 1)(x)
    return float(np.max(np.abs(hi - lo)))
