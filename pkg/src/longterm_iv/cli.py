"""Command-line interface: ``longterm-iv <subcommand>`` or ``python3 -m longterm_iv``.

Options can come from an INI config file (``--config``) with sections::

    [params]   a, b, c, d, eps, g, mu_w, var_* (any ModelParams field)
    [grid]     preset, axis1, axis2, n_samples, n_runs, base_seed, center,
               workers, estimators, sigma2_targets
    [poly]     d, eps, order, series, intercept

Flags override the config; ``--set key=value`` overrides a single
``[params]`` entry.

Exit codes: 0 success, 2 validation error, 3 degenerate or near-pole
estimate from ``estimate``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import fields, replace

import numpy as np

from . import analytic, estimators as E, harness, ingest
from .errors import DegenerateError, ValidationError
from .estimators import Estimator
from .model import Dataset, ModelParams, sample_linear_cmm, sample_partial_cmm
from .series import Series

EXIT_OK, EXIT_VALIDATION, EXIT_DEGENERATE = 0, 2, 3
PARAM_NAMES = [f.name for f in fields(ModelParams)]


def _floats(text) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text) -> bool:
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def load_config(path) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg.read_file(fh)
    for sec in ("params", "grid", "poly"):
        if not cfg.has_section(sec):
            cfg.add_section(sec)
    return cfg


def _opt(args, cfg, section, key, flag=None, conv=str, default=None):
    val = getattr(args, flag or key, None)
    if val is not None:
        return conv(val)
    if cfg.has_option(section, key):
        return conv(cfg.get(section, key))
    return default


def build_params(args, cfg, base: ModelParams | None = None) -> ModelParams:
    vals = {}
    for key, raw in cfg.items("params"):
        if key not in PARAM_NAMES:
            raise ValidationError(f"unknown [params] key {key!r}")
        vals[key] = raw
    for key in PARAM_NAMES:
        if getattr(args, key, None) is not None:
            vals[key] = getattr(args, key)
    for item in getattr(args, "set", None) or []:
        key, sep, raw = item.partition("=")
        if not sep or key.strip() not in PARAM_NAMES:
            raise ValidationError(f"--set {item!r}: expected <param>=<value>")
        vals[key.strip()] = raw
    try:
        conv = {k: float(v) for k, v in vals.items()}
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return replace(base or ModelParams(), **conv)


def _add_params(p: argparse.ArgumentParser):
    g = p.add_argument_group("model parameters")
    for name in PARAM_NAMES:
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=None)
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter")
    p.add_argument("--config", help="INI config file")


def _add_poly(p: argparse.ArgumentParser):
    g = p.add_argument_group("polynomial couplings")
    g.add_argument("--d-poly", dest="d_poly", help="d_1,d_2,...")
    g.add_argument("--eps-poly", dest="eps_poly", help="e_1,e_2,...")
    g.add_argument("--order", type=int, default=None, help="series order for the nonlinear estimator")
    g.add_argument("--series", choices=("fit", "oracle"), default=None)
    g.add_argument("--intercept", default=None, help="true/false: intercept in the series fit")


def _write(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# --- subcommands -------------------------------------------------------------


def cmd_simulate(args, cfg) -> int:
    p = build_params(args, cfg)
    n = _opt(args, cfg, "grid", "n_samples", flag="n", conv=int, default=1000)
    seed = _opt(args, cfg, "grid", "base_seed", flag="seed", conv=int, default=0)
    d_poly = _opt(args, cfg, "poly", "d", flag="d_poly", conv=_floats)
    e_poly = _opt(args, cfg, "poly", "eps", flag="eps_poly", conv=_floats)
    if d_poly or e_poly:
        ds = sample_partial_cmm(p, Series(d_poly or (p.d,)), Series(e_poly or (p.eps,)), n, seed)
    else:
        ds = sample_linear_cmm(p, n, seed)
    _write(dataset_to_csv(ds), args.out)
    return EXIT_OK


def dataset_to_csv(ds: Dataset) -> str:
    cols = {k: v for k, v in ds.columns().items() if k in ("V", "W", "X", "M", "Y")}
    lines = [",".join(cols)]
    for row in zip(*cols.values()):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().upper() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    missing = [c for c in ("X", "M", "Y") if c not in header]
    if missing:
        raise ValidationError(f"{path}: missing column(s) {missing}")
    try:
        data = np.array(rows, dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValidationError(f"{path}: ragged rows")
    col = {h: data[:, i] for i, h in enumerate(header)}
    w = col.get("W", np.zeros(data.shape[0]))
    return Dataset(w=w, x=col["X"], m=col["M"], y=col["Y"], v=col.get("V"))


def cmd_estimate(args, cfg) -> int:
    p = build_params(args, cfg)
    ds = read_dataset_csv(args.data)
    center = _opt(args, cfg, "grid", "center", conv=_bool, default=False)
    order = _opt(args, cfg, "poly", "order", conv=int, default=3)
    intercept = _opt(args, cfg, "poly", "intercept", conv=_bool, default=False)
    jobs = [
        (Estimator.OLS_C, lambda: E.ols_c(ds.x, ds.m, center=center)),
        (Estimator.FDC, lambda: E.fdc(ds.x, ds.m, ds.y, center=center)),
        (Estimator.IFDC, lambda: E.ifdc(ds.x, ds.m, ds.y, center=center)),
        (Estimator.IMPROVED, lambda: E.improved_ifdc(ds.x, ds.m, ds.y, c=p.c, center=center)),
        (Estimator.IMPROVED_NONLINEAR, lambda: E.improved_ifdc_nonlinear(
            ds.x, ds.m, ds.y, c=p.c, order=order, intercept=intercept, center=center)),
    ]
    if ds.v is not None:
        jobs.append((Estimator.IMPROVED_PRIOR,
                     lambda: E.improved_ifdc_prior(ds.v, ds.x, ds.m, ds.y, center=center)))
    lines, warn = ["estimator,value"], False
    for est, job in jobs:
        try:
            res = job()
        except DegenerateError as exc:
            print(f"warning: {est}: {exc}", file=sys.stderr)
            lines.append(f"{est},nan")
            warn = True
            continue
        if res.near_pole:
            print(f"warning: {est}: instrument denominator is near zero", file=sys.stderr)
            warn = True
        lines.append(f"{est},{res.value!r}")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_DEGENERATE if warn else EXIT_OK


def cmd_analytic(args, cfg) -> int:
    p = build_params(args, cfg)
    out = []

    def put(key, fn):
        try:
            out.append(f"{key},{float(fn())!r}")
        except (DegenerateError, ValidationError) as exc:
            out.append(f"{key},nan")
            print(f"note: {key}: {exc}", file=sys.stderr)

    put("bias_ols_c", lambda: analytic.bias_ols_c(p))
    put("bias_ifdc", lambda: analytic.bias_ifdc(p))
    put("improved_numer", lambda: analytic.improved_expectations(p)[0])
    put("improved_denom", lambda: analytic.improved_expectations(p)[1])
    put("pole_location", lambda: analytic.pole_location(p.c, p.g))
    put("var_fdc", lambda: analytic.var_fdc(p))
    put("var_c", lambda: analytic.var_c(p))
    put("var_total", lambda: analytic.var_total(p))
    put("var_improved", lambda: analytic.var_improved(p))
    put("bias_rv_naive", lambda: analytic.bias_rv_naive(p))
    if args.cubic_d:
        d2, d3 = _floats(args.cubic_d)
        put("bias_cubic_d", lambda: analytic.bias_cubic_d(d2, d3))
    if args.cubic_eps:
        e2, e3 = _floats(args.cubic_eps)
        put("bias_cubic_eps", lambda: analytic.bias_cubic_eps(e2, e3))
    _write("key,value\n" + "\n".join(out) + "\n", args.out)
    return EXIT_OK


def build_spec(args, cfg, default_preset: str) -> harness.GridSpec:
    preset = _opt(args, cfg, "grid", "preset", default=default_preset)
    if preset not in harness.PRESETS:
        raise ValidationError(f"unknown preset {preset!r}; choose from {sorted(harness.PRESETS)}")
    spec = harness.PRESETS[preset]()
    changes = {"params": build_params(args, cfg, spec.params)}
    axes = [a for a in (_opt(args, cfg, "grid", "axis1"), _opt(args, cfg, "grid", "axis2")) if a]
    if axes:
        changes["axes"] = tuple(harness.parse_axis(a) for a in axes)
    for key, conv in (("n_samples", int), ("n_runs", int), ("base_seed", int), ("center", _bool)):
        val = _opt(args, cfg, "grid", key, conv=conv)
        if val is not None:
            changes[key] = val
    targets = _opt(args, cfg, "grid", "sigma2_targets")
    if targets:
        changes["sigma2_targets"] = tuple(t.strip() for t in targets.split(",") if t.strip())
    for key, attr, conv in (("d", "d_poly", _floats), ("eps", "eps_poly", _floats),
                            ("order", "order", int), ("series", "series_mode", str),
                            ("intercept", "intercept", _bool)):
        val = _opt(args, cfg, "poly", key, flag=attr if attr.endswith("poly") else key, conv=conv)
        if val is not None:
            changes[attr] = val
    return replace(spec, **changes)


def _grid_common(args, cfg):
    workers = _opt(args, cfg, "grid", "workers", conv=int, default=1)
    ests = _opt(args, cfg, "grid", "estimators")
    ests = [e.strip() for e in ests.split(",") if e.strip()] if ests else None
    try:
        ests = [Estimator(e.upper()) for e in ests] if ests else None
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return workers, ests


def cmd_grid_linear(args, cfg) -> int:
    spec = build_spec(args, cfg, "fig2")
    workers, ests = _grid_common(args, cfg)
    kw = {"estimators": ests} if ests else {}
    _write(harness.run_grid_linear(spec, workers=workers, **kw).to_csv(), args.out)
    return EXIT_OK


def cmd_grid_nonlinear(args, cfg) -> int:
    spec = build_spec(args, cfg, "nonlinear-d")
    workers, ests = _grid_common(args, cfg)
    kw = {"estimators": ests} if ests else {}
    _write(harness.run_grid_nonlinear(spec, workers=workers, **kw).to_csv(), args.out)
    return EXIT_OK


def cmd_grid_ist(args, cfg) -> int:
    spec = build_spec(args, cfg, "ist")
    workers, ests = _grid_common(args, cfg)
    cohort_path = _opt(args, cfg, "grid", "cohort")
    cohort = ingest.load_cohort_csv(cohort_path, args.age_col, args.x_col) if cohort_path \
        else ingest.load_fixture()
    kw = {"estimators": ests} if ests else {}
    _write(harness.run_ist(cohort, spec, workers=workers, **kw).to_csv(), args.out)
    return EXIT_OK


def cmd_fixtures(args, cfg) -> int:
    _write(ingest.fixture_path().read_text(encoding="utf-8"), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="longterm-iv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        p.add_argument("-o", "--out", default=None, help="output file (default stdout)")
        _add_params(p)
        return p

    p = add("simulate", cmd_simulate, "sample a dataset as CSV")
    p.add_argument("-n", type=int, default=None, help="number of rows")
    p.add_argument("--seed", type=int, default=None)
    _add_poly(p)

    p = add("estimate", cmd_estimate, "apply every estimator to a dataset CSV")
    p.add_argument("data", help="CSV with X, M, Y columns (V optional)")
    p.add_argument("--center", default=None, help="true/false: demean columns first")
    _add_poly(p)

    p = add("analytic", cmd_analytic, "closed-form bias and variance")
    p.add_argument("--cubic-d", help="d2,d3 for bias_cubic_d")
    p.add_argument("--cubic-eps", help="e2,e3 for bias_cubic_eps")

    for name, fn, preset in (("grid-linear", cmd_grid_linear, "fig2"),
                             ("grid-nonlinear", cmd_grid_nonlinear, "nonlinear-d"),
                             ("grid-ist", cmd_grid_ist, "ist")):
        p = add(name, fn, f"Monte-Carlo grid as CSV (default preset {preset})")
        p.add_argument("--preset", choices=sorted(harness.PRESETS))
        p.add_argument("--axis1", help="name=v1,v2,... or name=linspace(lo,hi,k)")
        p.add_argument("--axis2")
        p.add_argument("--n-samples", dest="n_samples", type=int)
        p.add_argument("--n-runs", dest="n_runs", type=int)
        p.add_argument("--base-seed", dest="base_seed", type=int)
        p.add_argument("--center", default=None)
        p.add_argument("--workers", type=int)
        p.add_argument("--estimators", help="comma-separated estimator ids")
        p.add_argument("--sigma2-targets", dest="sigma2_targets")
        _add_poly(p)
        if name == "grid-ist":
            p.add_argument("--cohort", help="cohort CSV (default: bundled fixture)")
            p.add_argument("--age-col", default="AGE")
            p.add_argument("--x-col", default="RSBP")

    add("fixtures", cmd_fixtures, "write the bundled cohort fixture")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ValidationError, FileNotFoundError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DegenerateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
