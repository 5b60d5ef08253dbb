"""Estimators of the mediator-to-outcome effect ``a``.

All estimators take raw observed columns. With ``center=True`` the columns
are demeaned before any inner product (the ratio estimator still sees the
raw means, which it needs); the bias and variance closed forms in
:mod:`longterm_iv.analytic` describe the centred estimators.

Diagnostics: an instrumental denominator below the absolute tolerance
raises :class:`~longterm_iv.errors.NearPoleError`. A denominator that is
merely within ``pole_z`` standard errors of zero sets
``EstimateResult.near_pole`` and still returns a value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import regress
from .errors import DegenerateError, ValidationError, WeakInstrumentError
from .regress import POLE_TOL, RATIO_TOL, Residual
from .series import Series

POLE_Z = 1.0
WEAK_Z = 3.0


class Estimator(str, enum.Enum):
    OLS_C = "OLS_C"
    FDC = "FDC"
    IFDC = "IFDC"
    IMPROVED = "IMPROVED"
    IMPROVED_PRIOR = "IMPROVED_PRIOR"
    IMPROVED_NONLINEAR = "IMPROVED_NONLINEAR"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EstimateResult:
    estimator_id: Estimator
    value: float
    denom: float
    near_pole: bool = False
    aux: dict = field(default_factory=dict)


def _cols(*cols):
    arrs = [np.asarray(getattr(c, "values", c), dtype=float) for c in cols]
    n = arrs[0].size
    if any(a.ndim != 1 or a.size != n for a in arrs):
        raise ValidationError("columns must be 1-d with equal length")
    if n < 2:
        raise ValidationError("need at least 2 samples")
    return arrs


def _demean(*cols):
    return [c - c.mean() for c in cols]


def _iv(estimator_id, r, m, y, tol, pole_z, aux, source):
    """IV step shared by every residual-instrument estimator."""
    n = r.size
    tol = POLE_TOL * n if tol is None else tol
    value = regress.iv_estimate(r, m, y, tol=tol)
    prod = r * m
    den = float(prod.sum())
    spread = float(prod.std()) * math.sqrt(n)
    near = abs(den) < pole_z * spread
    aux = dict(aux, instrument=source, denom_se=spread)
    return EstimateResult(estimator_id, value, den, near, aux)


def ols_c(x, m, center: bool = False) -> EstimateResult:
    """OLS slope of M on X; biased for ``c`` whenever eps != 0."""
    x, m = _cols(x, m)
    if center:
        x, m = _demean(x, m)
    xx = float(x @ x)
    return EstimateResult(Estimator.OLS_C, regress.ols_slope(m, x), xx)


def fdc(x, m, y, center: bool = False, rel_tol: float = 1e-12) -> EstimateResult:
    """Front-door estimator ``[(X.X)(M.Y) - (X.M)(X.Y)] / [(X.X)(M.M) - (X.M)^2]``.

    >>> fdc([1, 2], [1, 1], [2, 3]).value
    1.0
    """
    x, m, y = _cols(x, m, y)
    if center:
        x, m, y = _demean(x, m, y)
    xx, mm, xm = x @ x, m @ m, x @ m
    den = float(xx * mm - xm * xm)
    if abs(den) <= rel_tol * float(xx * mm) or den == 0.0:
        raise DegenerateError("X and M are collinear: front-door denominator vanishes", denom=den)
    num = float(xx * (m @ y) - xm * (x @ y))
    return EstimateResult(Estimator.FDC, num / den, den)


def ifdc(x, m, y, center: bool = False, tol: float | None = None,
         pole_z: float = POLE_Z) -> EstimateResult:
    """Instrumental FDC: the OLS residual of M on X used as instrument.

    Algebraically identical to :func:`fdc`.
    """
    x, m, y = _cols(x, m, y)
    if center:
        x, m, y = _demean(x, m, y)
    r_c = regress.residual(m, x, source="R_c")
    c_hat = regress.ols_slope(m, x)
    return _iv(Estimator.IFDC, r_c.values, m, y, tol, pole_z, {"c_ols": c_hat}, r_c.source)


def improved_ifdc(x, m, y, c: float, center: bool = False, tol: float | None = None,
                  pole_z: float = POLE_Z, ratio_tol: float = RATIO_TOL) -> EstimateResult:
    """eps/d-improved IFDC with ``c`` supplied from an experiment.

    1. ``r = mean(M - cX) / mean(X)`` estimates eps/d;
    2. ``R_R = M - (c + r) X``;
    3. ``a = R_R.Y / R_R.M``.

    Unbiased away from the pole where ``E[R_R.M]`` vanishes
    (``eps/d = var_m / (c var_x)`` without a prior instrument).
    """
    x, m, y = _cols(x, m, y)
    r_hat = regress.ratio_eps_over_d(m, x, c, tol=ratio_tol)
    r_r = m - (c + r_hat) * x
    if center:
        r_r, m, y = _demean(r_r, m, y)
    return _iv(Estimator.IMPROVED, r_r, m, y, tol, pole_z,
               {"c": float(c), "eps_over_d": r_hat}, "R_R")


def improved_ifdc_prior(v, x, m, y, center: bool = False, tol: float | None = None,
                        pole_z: float = POLE_Z, weak_z: float = WEAK_Z,
                        ratio_tol: float = RATIO_TOL) -> EstimateResult:
    """Improved IFDC built on a prior instrument ``V -> X``; no external ``c``.

    ``c`` comes from the instrument, ``c = M.V / X.V``, and the treatment
    residual from OLS on V, ``X - (X.V / V.V) V``. The instrument for ``a``
    is::

        R_V = (M - c X) - r (X - (X.V / V.V) V),   r = mean(M - c X) / mean(X)

    which removes W and V, leaving ``u_M - (eps/d) u_X`` in the population.
    The instrument is rejected as weak when ``|corr(X, V)| sqrt(n) < weak_z``.
    """
    v, x, m, y = _cols(v, x, m, y)
    n = x.size
    xv, vv, xx = float(x @ v), float(v @ v), float(x @ x)
    if vv == 0.0 or xx == 0.0 or abs(xv) * math.sqrt(n) < weak_z * math.sqrt(xx * vv):
        raise WeakInstrumentError(f"prior instrument too weak: X.V={xv:.3g}", denom=xv)
    c_hat = float(m @ v) / xv
    g_hat = xv / vv
    r_hat = regress.ratio_eps_over_d(m, x, c_hat, tol=ratio_tol)
    r_v = (m - c_hat * x) - r_hat * (x - g_hat * v)
    if center:
        r_v, m, y = _demean(r_v, m, y)
    return _iv(Estimator.IMPROVED_PRIOR, r_v, m, y, tol, pole_z,
               {"c_iv": c_hat, "g_ols": g_hat, "eps_over_d": r_hat}, "R_V")


def improved_ifdc_nonlinear(x, m, y, c: float, order: int = 3, series: Series | None = None,
                            intercept: bool = False, center: bool = False,
                            tol: float | None = None, pole_z: float = POLE_Z) -> EstimateResult:
    """Improved IFDC for polynomial couplings: ``R_R = M - cX - (eps o d^-1)(X)``.

    By default the backdoor series is fitted by polynomial regression of
    ``M - cX`` on ``X`` up to ``order``. That fit recovers ``eps o d^-1`` only
    in the ``var_x -> 0`` regime; at order 1 it makes ``R_R`` the OLS residual
    and the estimate collapses to :func:`ifdc`. Pass ``series`` (e.g. from
    :func:`longterm_iv.series.eps_over_d_series` on known couplings) to skip
    the fit.
    """
    x, m, y = _cols(x, m, y)
    base = m - c * x
    aux = {"c": float(c)}
    if series is None:
        if intercept:
            const, series = regress.poly_regress(base, x, order, intercept=True)
            aux["intercept"] = const
            r_r = base - const - series(x)
        else:
            series = regress.poly_regress(base, x, order)
            r_r = base - series(x)
        aux["fitted"] = True
    else:
        r_r = base - series(x)
        aux["fitted"] = False
    aux["series"] = series.coeffs
    if center:
        r_r, m, y = _demean(r_r, m, y)
    return _iv(Estimator.IMPROVED_NONLINEAR, r_r, m, y, tol, pole_z, aux, "nonlinear-R_R")


def residual_instrument(x, m, c: float, ratio_tol: float = RATIO_TOL) -> Residual:
    """The improved residual ``R_R`` itself, for inspection."""
    x, m = _cols(x, m)
    r_hat = regress.ratio_eps_over_d(m, x, c, tol=ratio_tol)
    return Residual(m - (c + r_hat) * x, "R_R")
