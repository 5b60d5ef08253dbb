"""Seeded Monte-Carlo grids over model parameters.

A :class:`GridSpec` names up to two axes. Each axis is either a
:class:`~longterm_iv.model.ModelParams` field or one of the special names

* ``sigma2``: sets every variance listed in ``GridSpec.sigma2_targets``;
* ``d2``, ``d3``, ``e2``, ``e3``: set the quadratic / cubic coefficient of
  ``d_poly`` / ``eps_poly`` (nonlinear grids only).

Every cell draws its own seed from ``SeedSequence(base_seed, spawn_key=cell
index)``, and every run within the cell from ``SeedSequence(cell_seed,
spawn_key=(run,))``. Results therefore do not depend on evaluation order,
worker count, or which other cells exist.
"""

from __future__ import annotations

import io
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np

from . import estimators as E
from .errors import DegenerateError, ValidationError
from .estimators import EstimateResult, Estimator
from .ingest import CohortTable, gen_semi_synthetic
from .model import ModelParams, sample_linear_cmm, sample_partial_cmm
from .series import Series, check_invertible, check_invertible_cubic, eps_over_d_series

CSV_COLUMNS = (
    "estimator", "axis1_name", "axis1_value", "axis2_name", "axis2_value",
    "mean", "bias", "variance", "near_pole_frac", "n_samples", "n_runs", "seed",
)
POLY_AXES = {"d2": ("d_poly", 2), "d3": ("d_poly", 3), "e2": ("eps_poly", 2), "e3": ("eps_poly", 3)}
ALL_VARIANCES = ("var_w", "var_x", "var_m", "var_y")
PARAM_FIELDS = {f.name for f in fields(ModelParams)}


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValidationError(f"axis {self.name!r} has no values")
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"axis {self.name!r} has non-finite values")
        if self.name != "sigma2" and self.name not in POLY_AXES and self.name not in PARAM_FIELDS:
            raise ValidationError(f"unknown axis {self.name!r}")
        object.__setattr__(self, "values", vals)


_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)$")


def parse_axis(text: str) -> Axis:
    """``"eps=0.1,0.5,1"`` or ``"eps=linspace(0, 3, 20)"``."""
    name, sep, vals = text.partition("=")
    if not sep:
        raise ValidationError(f"axis {text!r}: expected name=values")
    vals = vals.strip()
    m = _LINSPACE.match(vals)
    try:
        if m:
            values = np.linspace(float(m.group(1)), float(m.group(2)), int(m.group(3)))
        else:
            values = [float(v) for v in vals.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"axis {text!r}: {exc}") from None
    return Axis(name.strip(), tuple(values))


@dataclass(frozen=True)
class GridSpec:
    axes: tuple
    params: ModelParams = ModelParams()
    n_samples: int = 10_000
    n_runs: int = 100
    base_seed: int = 0
    center: bool = True
    sigma2_targets: tuple = ALL_VARIANCES
    d_poly: tuple | None = None
    eps_poly: tuple | None = None
    order: int = 3
    series_mode: str = "fit"
    intercept: bool = False

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 2:
            raise ValidationError("a grid has one or two axes")
        if len(axes) == 2 and axes[0].name == axes[1].name:
            raise ValidationError("the two axes must differ")
        object.__setattr__(self, "axes", axes)
        if int(self.n_runs) != self.n_runs or self.n_runs < 2:
            raise ValidationError("n_runs >= 2 required (variance needs two runs)")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ValidationError("n_samples >= 2 required")
        if int(self.base_seed) != self.base_seed or self.base_seed < 0:
            raise ValidationError("base_seed must be a non-negative integer")
        if self.series_mode not in ("fit", "oracle"):
            raise ValidationError("series_mode is 'fit' or 'oracle'")
        for t in self.sigma2_targets:
            if t not in PARAM_FIELDS or not t.startswith("var_"):
                raise ValidationError(f"sigma2 target {t!r} is not a variance")
        for name in ("d_poly", "eps_poly"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(float(c) for c in val))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a.values) for a in self.axes)

    def cells(self) -> list[tuple[int, ...]]:
        return [tuple(int(i) for i in idx) for idx in np.ndindex(*self.shape)]

    def cell_values(self, idx) -> tuple[float, ...]:
        return tuple(ax.values[i] for ax, i in zip(self.axes, idx))

    def cell_seed(self, idx) -> int:
        ss = np.random.SeedSequence(self.base_seed, spawn_key=tuple(idx))
        return int(ss.generate_state(1, np.uint64)[0])

    def cell_setup(self, idx) -> tuple[ModelParams, Series | None, Series | None]:
        p = self.params
        polys = {"d_poly": list(self.d_poly or ()), "eps_poly": list(self.eps_poly or ())}
        for ax, val in zip(self.axes, self.cell_values(idx)):
            if ax.name == "sigma2":
                p = p.replace(**{t: val for t in self.sigma2_targets})
            elif ax.name in POLY_AXES:
                which, k = POLY_AXES[ax.name]
                coeffs = polys[which]
                if not coeffs:
                    raise ValidationError(f"axis {ax.name!r} needs {which} set")
                coeffs.extend([0.0] * (k - len(coeffs)))
                coeffs[k - 1] = val
            else:
                p = p.replace(**{ax.name: val})
        d = Series(tuple(polys["d_poly"])) if polys["d_poly"] else None
        e = Series(tuple(polys["eps_poly"])) if polys["eps_poly"] else None
        return p, d, e


def run_seed(cell_seed: int, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cell_seed, spawn_key=(run,))


# --- summaries ---------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    axis_names: tuple
    axis_values: tuple
    mean: float
    bias: float
    variance: float
    near_pole_frac: float
    n_samples: int
    n_runs: int
    seed: int
    truth: float = float("nan")
    n_used: int = 0
    n_failed: int = 0
    failed: bool = False
    skipped: str = ""
    fallback: bool = False
    # over every finite run, near-pole ones included
    mean_all: float = float("nan")
    variance_all: float = float("nan")

    def csv_fields(self) -> list[str]:
        names = list(self.axis_names) + [""] * (2 - len(self.axis_names))
        values = [repr(float(v)) for v in self.axis_values] + [""] * (2 - len(self.axis_values))
        return [
            self.estimator, names[0], values[0], names[1], values[1],
            repr(float(self.mean)), repr(float(self.bias)), repr(float(self.variance)),
            repr(float(self.near_pole_frac)), str(self.n_samples), str(self.n_runs), str(self.seed),
        ]


def _split(estimates) -> tuple[list[float], list[float], int, int]:
    """(used, finite, n_near_pole, n_failed)."""
    used, finite, near, failed = [], [], 0, 0
    for est in estimates:
        flag = False
        if isinstance(est, EstimateResult):
            flag, est = est.near_pole, est.value
        if est is None or not math.isfinite(est):
            failed += 1
            continue
        finite.append(float(est))
        if flag:
            near += 1
        else:
            used.append(float(est))
    return used, finite, near, failed


def _moments(vals):
    if not vals:
        return float("nan"), float("nan")
    arr = np.asarray(vals)
    var = float(arr.var(ddof=1)) if arr.size >= 2 else float("nan")
    return float(arr.mean()), var


def summarize(estimates: Sequence, true_a: float, **row) -> SummaryRow:
    """Mean, bias and unbiased variance over usable runs.

    An entry is a float, ``None``/non-finite (failed run) or an
    :class:`EstimateResult` (whose ``near_pole`` flag excludes it from the
    mean). ``near_pole_frac`` is over all runs. If exclusion would leave
    fewer than two runs, every finite run is used and ``fallback`` is set.

    >>> r = summarize([0.9, 1.1], 1.0)
    >>> round(r.bias, 12), round(r.variance, 12)
    (0.0, 0.02)
    """
    estimates = list(estimates)
    used, finite, near, failed = _split(estimates)
    # exclusion must not leave the cell without a variance
    fallback = len(used) < 2 <= len(finite)
    if fallback:
        used = finite
    mean, var = _moments(used)
    mean_all, var_all = _moments(finite)
    n_runs = row.pop("n_runs", len(estimates))
    defaults = dict(estimator="", axis_names=(), axis_values=(), n_samples=0, seed=0)
    defaults.update(row)
    return SummaryRow(
        mean=mean, bias=mean - true_a, variance=var,
        near_pole_frac=near / len(estimates) if estimates else float("nan"),
        n_runs=n_runs, truth=float(true_a), n_used=len(used), n_failed=failed,
        failed=not used, mean_all=mean_all, variance_all=var_all, fallback=fallback, **defaults,
    )


@dataclass
class GridSummary:
    rows: list = field(default_factory=list)
    spec: GridSpec | None = None

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            buf.write(",".join(r.csv_fields()) + "\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def select(self, estimator) -> list[SummaryRow]:
        return [r for r in self.rows if r.estimator == str(estimator)]

    def table(self, estimator, attr: str = "bias") -> np.ndarray:
        """``attr`` of ``estimator`` reshaped to the grid shape."""
        rows = self.select(estimator)
        return np.array([getattr(r, attr) for r in rows], dtype=float).reshape(self.spec.shape)


# --- cell evaluation ---------------------------------------------------------

_LINEAR_DEFAULT = (Estimator.FDC, Estimator.IFDC, Estimator.IMPROVED)
_ORDER = list(Estimator)
_ESTIMATE_ERRORS = (DegenerateError, ValidationError, FloatingPointError)


def _normalize_estimators(estimators) -> tuple[Estimator, ...]:
    ests = {Estimator(str(e)) for e in estimators}
    if not ests:
        raise ValidationError("no estimators requested")
    return tuple(e for e in _ORDER if e in ests)


def _truth(est: Estimator, p: ModelParams) -> float:
    return p.c if est is Estimator.OLS_C else p.a


def _apply(est: Estimator, ds, p: ModelParams, spec: GridSpec, series: Series | None):
    ctr = spec.center
    if est is Estimator.OLS_C:
        return E.ols_c(ds.x, ds.m, center=ctr)
    if est is Estimator.FDC:
        return E.fdc(ds.x, ds.m, ds.y, center=ctr)
    if est is Estimator.IFDC:
        return E.ifdc(ds.x, ds.m, ds.y, center=ctr)
    if est is Estimator.IMPROVED:
        return E.improved_ifdc(ds.x, ds.m, ds.y, c=p.c, center=ctr)
    if est is Estimator.IMPROVED_PRIOR:
        if ds.v is None:
            raise ValidationError("IMPROVED_PRIOR needs a prior instrument (g != 0)")
        return E.improved_ifdc_prior(ds.v, ds.x, ds.m, ds.y, center=ctr)
    if est is Estimator.IMPROVED_NONLINEAR:
        return E.improved_ifdc_nonlinear(ds.x, ds.m, ds.y, c=p.c, order=spec.order, series=series,
                                         intercept=spec.intercept, center=ctr)
    raise ValidationError(f"unsupported estimator {est}")


def _rows_for_cell(spec, idx, ests, p, seed, per_est, skipped=""):
    names = tuple(a.name for a in spec.axes)
    vals = spec.cell_values(idx)
    out = []
    for est in ests:
        row = summarize(per_est.get(est, [None] * spec.n_runs), _truth(est, p),
                        estimator=str(est), axis_names=names, axis_values=vals,
                        n_samples=spec.n_samples, n_runs=spec.n_runs, seed=seed)
        if skipped:
            row = replace(row, skipped=skipped, failed=True, near_pole_frac=float("nan"))
        out.append(row)
    return out


def _global_check(d: Series):
    if d.degree <= 3:
        return check_invertible_cubic(d[1], d[2], d[3])
    return check_invertible(d, -50.0, 50.0)


def _cell(kind: str, spec: GridSpec, idx, ests, cohort=None):
    p, d_poly, e_poly = spec.cell_setup(idx)
    seed = spec.cell_seed(idx)
    series = None
    if kind == "nonlinear":
        d_poly = d_poly or Series((p.d,))
        e_poly = e_poly or Series((p.eps,))
        chk = _global_check(d_poly)
        if not chk:
            return _rows_for_cell(spec, idx, ests, p, seed, {}, skipped=chk.witness)
        if spec.series_mode == "oracle":
            series = eps_over_d_series(e_poly, d_poly, spec.order)
    per_est = {e: [] for e in ests}
    with np.errstate(all="ignore"):
        for r in range(spec.n_runs):
            rs = run_seed(seed, r)
            if kind == "linear":
                ds = sample_linear_cmm(p, spec.n_samples, rs)
            elif kind == "nonlinear":
                ds = sample_partial_cmm(p, d_poly, e_poly, spec.n_samples, rs)
            else:
                ds = gen_semi_synthetic(cohort, p, rs)
            for est in ests:
                try:
                    per_est[est].append(_apply(est, ds, p, spec, series))
                except _ESTIMATE_ERRORS:
                    per_est[est].append(None)
    rows = _rows_for_cell(spec, idx, ests, p, seed, per_est)
    if kind == "ist":
        rows = [replace(r, n_samples=cohort.n) for r in rows]
    return rows


def _cell_job(args):
    return _cell(*args)


def _run(kind, spec: GridSpec, ests, cohort=None, workers: int = 1) -> GridSummary:
    cells = spec.cells()
    jobs = [(kind, spec, idx, ests, cohort) for idx in cells]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(cells, pool.map(_cell_job, jobs, chunksize=1)))
    else:
        results = {idx: _cell_job(job) for idx, job in zip(cells, jobs)}
    rows = []
    for est_pos in range(len(ests)):
        for idx in cells:
            rows.append(results[idx][est_pos])
    return GridSummary(rows, spec)


def run_grid_linear(spec: GridSpec, estimators: Iterable = _LINEAR_DEFAULT,
                    workers: int = 1) -> GridSummary:
    """Linear-CMM grid. Rows are grouped by estimator, then cells in C order."""
    ests = _normalize_estimators(estimators)
    if Estimator.IMPROVED_PRIOR in ests and spec.params.g == 0.0 and "g" not in [a.name for a in spec.axes]:
        raise ValidationError("IMPROVED_PRIOR requested but g = 0")
    if any(a.name in POLY_AXES for a in spec.axes):
        raise ValidationError("polynomial axes belong to run_grid_nonlinear")
    return _run("linear", spec, ests, workers=workers)


def run_grid_nonlinear(spec: GridSpec,
                       estimators: Iterable = (Estimator.IFDC, Estimator.IMPROVED_NONLINEAR),
                       workers: int = 1) -> GridSummary:
    """Partial-linear grid; non-invertible ``d_poly`` cells are skipped and flagged."""
    ests = _normalize_estimators(estimators)
    return _run("nonlinear", spec, ests, workers=workers)


def run_ist(cohort: CohortTable, spec: GridSpec,
            estimators: Iterable = (Estimator.IFDC, Estimator.IMPROVED),
            workers: int = 1) -> GridSummary:
    """Semi-synthetic grid over a fixed cohort; ``n_samples`` is ignored (cohort size is used)."""
    ests = _normalize_estimators(estimators)
    if Estimator.IMPROVED_PRIOR in ests or Estimator.IMPROVED_NONLINEAR in ests:
        raise ValidationError("cohort grids support the linear estimators only")
    return _run("ist", spec, ests, cohort=cohort, workers=workers)


# --- presets -----------------------------------------------------------------


def eps_grid_fig2() -> tuple[float, ...]:
    """30 points ``k * 2/30``, ``k = 1..30``; includes the pole at 1."""
    return tuple(k * 2.0 / 30.0 for k in range(1, 31))


def fig2_spec(n_samples: int = 10_000, n_runs: int = 100, base_seed: int = 0, **kw) -> GridSpec:
    """Linear study: 30 eps values by sigma2 in {0.1, 0.5, 1.0}, unit coefficients."""
    axes = (Axis("eps", eps_grid_fig2()), Axis("sigma2", (0.1, 0.5, 1.0)))
    return GridSpec(axes, ModelParams(), n_samples, n_runs, base_seed, **kw)


def prior_spec(n_samples: int = 10_000, n_runs: int = 100, base_seed: int = 0, g: float = 1.0,
               **kw) -> GridSpec:
    """Prior-instrument study: eps grid at unit variances with ``g`` in X."""
    axes = (Axis("eps", eps_grid_fig2()),)
    return GridSpec(axes, ModelParams(g=g), n_samples, n_runs, base_seed, **kw)


def nonlinear_d_spec(n_samples: int = 1_000, n_runs: int = 100, base_seed: int = 0, **kw) -> GridSpec:
    """``d(W) = W + d2 W^2 + d3 W^3``, ``eps(W) = 2 W``, sigma2 = 0.3: a 6 x 5 grid."""
    axes = (Axis("d2", tuple(np.linspace(-0.5, 0.5, 6))), Axis("d3", (0.1, 0.2, 0.3, 0.4, 0.5)))
    params = ModelParams.homoscedastic(0.3, eps=2.0)
    return GridSpec(axes, params, n_samples, n_runs, base_seed,
                    d_poly=(1.0, 0.0, 0.0), eps_poly=(2.0,), **kw)


def nonlinear_e_spec(n_samples: int = 1_000, n_runs: int = 100, base_seed: int = 0, **kw) -> GridSpec:
    """``eps(W) = W + e2 W^2 + e3 W^3``, linear ``d``, sigma2 = 0.3: a 6 x 5 grid."""
    axes = (Axis("e2", tuple(np.linspace(-1.0, 1.0, 6))),
            Axis("e3", tuple(np.linspace(-0.4, 0.4, 5))))
    params = ModelParams.homoscedastic(0.3)
    return GridSpec(axes, params, n_samples, n_runs, base_seed,
                    d_poly=(1.0,), eps_poly=(1.0, 0.0, 0.0), **kw)


def ist_spec(n_runs: int = 200, base_seed: int = 0, **kw) -> GridSpec:
    """Cohort study: 20 eps values on [0, 3] by sigma2 in {0.1, 0.5, 1.0} on the M, Y noise."""
    axes = (Axis("eps", tuple(np.linspace(0.0, 3.0, 20))), Axis("sigma2", (0.1, 0.5, 1.0)))
    kw.setdefault("sigma2_targets", ("var_m", "var_y"))
    return GridSpec(axes, ModelParams(), 2, n_runs, base_seed, **kw)


PRESETS = {
    "fig2": fig2_spec,
    "prior": prior_spec,
    "nonlinear-d": nonlinear_d_spec,
    "nonlinear-e": nonlinear_e_spec,
    "ist": ist_spec,
}
