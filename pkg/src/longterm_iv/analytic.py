"""Closed-form bias and variance expressions, plus Gaussian covariance algebra.

Every expression takes raw :class:`~longterm_iv.model.ModelParams`. Where a
prior instrument is present, ``g**2 var_v`` simply adds to the treatment
noise ``var_x`` (V enters X the same way u_X does), so setting ``g = 0``
recovers the single-stage formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateError, PoleError, ValidationError
from .model import ModelParams, node_labels, population_covariance, population_mean


def _nonzero(den, what):
    if den == 0.0:
        raise DegenerateError(f"{what}: zero denominator", denom=den)
    return den


def _treatment_noise(p: ModelParams) -> float:
    return p.var_x + p.g**2 * p.var_v


def bias_ols_c(p: ModelParams) -> float:
    """Asymptotic bias of the OLS slope of M on X for ``c``."""
    sx = _treatment_noise(p)
    den = _nonzero(p.d**2 * p.var_w + sx, "bias_ols_c")
    return p.d * p.eps * p.var_w / den


def bias_ifdc(p: ModelParams) -> float:
    """Asymptotic bias of the IFDC (= FDC) when the mediator is confounded.

    ``b eps s_w s_x / (eps^2 s_w s_x + s_m (s_x + d^2 s_w))``
    """
    sx = _treatment_noise(p)
    den = p.eps**2 * p.var_w * sx + p.var_m * (sx + p.d**2 * p.var_w)
    return p.b * p.eps * p.var_w * sx / _nonzero(den, "bias_ifdc")


def bias_ifdc_homoscedastic(b: float, d: float, eps: float) -> float:
    """``b eps / (1 + d^2 + eps^2)``: :func:`bias_ifdc` with equal noise variances."""
    return bias_ifdc(ModelParams.homoscedastic(1.0, b=b, d=d, eps=eps))


def ifdc_bias_extremum(b: float, d: float) -> tuple[float, float]:
    """Location and height of the maximum of the homoscedastic IFDC bias over eps."""
    eps_star = math.sqrt(1.0 + d * d)
    return eps_star, b / (2.0 * eps_star)


def ifdc_moment_terms(p: ModelParams) -> tuple[float, float]:
    """Leading-order ``E[X.X M.Y - X.Y M.X] / n^2`` and ``E[X.X M.M - (X.M)^2] / n^2``.

    Their ratio minus ``a`` reproduces :func:`bias_ifdc` exactly. The
    denominator carries no factor ``a`` on the ``var_m`` term.
    """
    sx = _treatment_noise(p)
    tot_x = sx + p.d**2 * p.var_w
    num = p.eps * (p.b + p.a * p.eps) * p.var_w * sx + p.a * p.var_m * tot_x
    den = p.eps**2 * p.var_w * sx + p.var_m * tot_x
    return num, den


def improved_expectations(p: ModelParams, c: float | None = None) -> tuple[float, float]:
    """Per-sample ``E[R_R.Y]`` and ``E[R_R.M]`` at the true eps/d.

    ``R_R = M - (c + eps/d) X``; numerator ``a (s_m - c eps s_x / d)``,
    denominator ``s_m - c eps s_x / d``. Raises :class:`PoleError` when both vanish.
    """
    c = p.c if c is None else c
    if p.d == 0.0:
        raise ValidationError("eps/d undefined for d = 0")
    den = p.var_m - c * p.eps * _treatment_noise(p) / p.d
    if abs(den) <= 1e-12 * max(p.var_m, 1e-300):
        raise PoleError(f"on the pole: s_m = c eps s_x / d (denominator {den:.3g})", denom=den)
    return p.a * den, den


def prior_expectations(p: ModelParams) -> tuple[float, float]:
    """Per-sample ``E[R_V.Y]``, ``E[R_V.M]`` for the prior-instrument residual.

    ``R_V -> u_M - (eps/d) u_X`` removes V as well as W, so only ``var_x``
    (not ``g^2 var_v``) enters and the pole sits at ``eps/d = var_m / (c var_x)``.
    """
    if p.g == 0.0:
        raise ValidationError("the prior-instrument residual needs g != 0")
    return improved_expectations(p.replace(g=0.0))


def pole_location(c: float, g: float = 0.0) -> float:
    """Homoscedastic pole of ``R_R = M - (c + eps/d) X``: ``eps/d = 1 / (c (g^2 + 1))``.

    ``g`` is the strength of a prior instrument present in X; ``g = 0`` gives ``1/c``.
    """
    if c == 0.0:
        raise ValidationError("no pole for c = 0")
    return 1.0 / (c * (g * g + 1.0))


def var_fdc(p: ModelParams) -> float:
    """Asymptotic ``n Var`` of the FDC estimate (no mediator confounding)."""
    tot_x = p.d**2 * p.var_w + p.var_x
    den = _nonzero(tot_x * p.var_m, "var_fdc")
    return (p.b**2 * p.var_w * p.var_x + p.var_y * tot_x) / den


def var_c(p: ModelParams) -> float:
    return p.var_m / _nonzero(p.d**2 * p.var_w + p.var_x, "var_c")


def var_total(p: ModelParams) -> float:
    """Delta-method ``n Var`` of the product ``a c``, assuming ``Cov(a, c) = 0``."""
    return p.c**2 * var_fdc(p) + p.a**2 * var_c(p)


def var_improved(p: ModelParams, c: float | None = None) -> float:
    """Approximate asymptotic ``n Var`` of the improved IFDC."""
    c = p.c if c is None else c
    ratio = p.eps / p.d
    sx_over_sm = p.var_x / _nonzero(p.var_m, "var_improved")
    den = (1.0 - c * ratio * sx_over_sm) ** 2
    if den <= 1e-24:
        raise PoleError("variance unbounded on the pole", denom=den)
    return var_fdc(p) * (1.0 + ratio**2 * sx_over_sm) / den


def bias_rv_naive(p: ModelParams, c: float | None = None) -> float:
    """Bias of the discarded ``Res[M, V]`` instrument (uncorrelated-ratio approximation)."""
    c = p.c if c is None else c
    d = p.d
    den = p.var_m + c * d * (c * d + p.eps) * p.var_w + c * (c * d - p.eps) / d * p.var_x
    return p.b * c * d * p.var_w / _nonzero(den, "bias_rv_naive")


def bias_cubic_d(d2: float, d3: float) -> float:
    """Improved-IFDC bias for ``d(W) = W + d2 W^2 + d3 W^3``, linear eps, unit parameters."""
    num = 6.0 * (2.0 * d2**2 - d3) * (1.0 + 3.0 * d3)
    den = (1.0 + 72.0 * d2**4 - 30.0 * d3 - 108.0 * d3**2 - 180.0 * d3**3
           + 18.0 * d2**2 * (3.0 + 10.0 * d3 + 20.0 * d3**2))
    return num / _nonzero(den, "bias_cubic_d")


def bias_cubic_eps(e2: float, e3: float) -> float:
    """Improved-IFDC bias for ``eps(W) = W + e2 W^2 + e3 W^3``, linear d, unit parameters."""
    if e3 == 0.0:
        return 0.0
    return 3.0 * e3 / _nonzero(e2**2 + 12.0 * e3 + 9.0 * e3**2, "bias_cubic_eps")


# --- Gaussian covariance algebra -------------------------------------------


@dataclass(frozen=True)
class GaussianFamily:
    mean: np.ndarray
    cov: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        k = mean.size
        if cov.shape != (k, k):
            raise ValidationError(f"cov shape {cov.shape} does not match mean of size {k}")
        scale = max(1.0, float(np.max(np.abs(cov)))) if cov.size else 1.0
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * scale):
            raise ValidationError("covariance is not symmetric")
        if np.any(np.diag(cov) < 0):
            raise ValidationError("negative variance on the diagonal")
        labels = tuple(self.labels) or tuple(str(i) for i in range(k))
        if len(labels) != k:
            raise ValidationError("one label per component required")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "labels", labels)

    def index(self, keys) -> list[int]:
        out = []
        for key in keys:
            if isinstance(key, (int, np.integer)):
                out.append(int(key))
            else:
                out.append(self.labels.index(key))
        return out


def family_from_params(p: ModelParams) -> GaussianFamily:
    return GaussianFamily(population_mean(p), population_covariance(p), node_labels(p))


def condition_gaussian(fam: GaussianFamily, keep: Sequence, given: Sequence,
                       values, cond_max: float = 1e12) -> GaussianFamily:
    """Distribution of ``fam[keep]`` given ``fam[given] = values``.

    Mean ``mu_a + S_ab S_b^-1 (x_b - mu_b)``, covariance is the Schur
    complement ``S_a - S_ab S_b^-1 S_ba``.
    """
    ia, ib = fam.index(keep), fam.index(given)
    if set(ia) & set(ib):
        raise ValidationError("keep and given overlap")
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size != len(ib):
        raise ValidationError("one conditioning value per conditioned component")
    s_a = fam.cov[np.ix_(ia, ia)]
    s_ab = fam.cov[np.ix_(ia, ib)]
    s_b = fam.cov[np.ix_(ib, ib)]
    if np.linalg.cond(s_b) > cond_max:
        raise DegenerateError("conditioning block is singular")
    w = np.linalg.solve(s_b, s_ab.T).T
    mean = fam.mean[ia] + w @ (values - fam.mean[ib])
    cov = s_a - w @ s_ab.T
    cov = 0.5 * (cov + cov.T)
    # clip rounding noise, e.g. rho = 1 exactly
    cov[np.diag_indices_from(cov)] = np.maximum(np.diag(cov), 0.0)
    return GaussianFamily(mean, cov, tuple(fam.labels[i] for i in ia))


def isserlis_moment(cov, indices: Sequence[int]) -> float:
    """``E[prod_k x_{i_k}]`` for a zero-mean Gaussian: sum over perfect pairings."""
    cov = np.asarray(cov, dtype=float)
    idx = tuple(indices)
    if len(idx) % 2:
        return 0.0
    cache: dict[tuple, float] = {}

    def pairings(rest: tuple) -> float:
        if not rest:
            return 1.0
        key = tuple(sorted(rest))
        if key in cache:
            return cache[key]
        first, tail = rest[0], rest[1:]
        total = 0.0
        for k, partner in enumerate(tail):
            c = cov[first, partner]
            if c != 0.0:
                total += c * pairings(tail[:k] + tail[k + 1:])
        cache[key] = total
        return total

    return float(pairings(idx))
