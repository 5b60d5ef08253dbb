"""The confounded-mediator model (CMM) and its samplers.

Structural equations, with latent confounder W and optional prior
instrument V::

    W = u_W                         u_W ~ N(mu_w, var_w)
    X = d W + g V + u_X             u_X ~ N(0, var_x),  V ~ N(0, var_v)
    M = c X + eps W + u_M           u_M ~ N(0, var_m)
    Y = a M + b W + u_Y             u_Y ~ N(0, var_y)

The partial linear variant replaces ``d W`` and ``eps W`` by polynomials.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .errors import InvertibilityError, ValidationError
from .series import PolyCoeffs, Series, check_invertible, check_invertible_cubic

# one independent stream per node, in this order
STREAMS = ("w", "x", "m", "y", "v")
_VARIANCES = ("var_w", "var_x", "var_m", "var_y", "var_v")


@dataclass(frozen=True)
class ModelParams:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d: float = 1.0
    eps: float = 1.0
    g: float = 0.0
    mu_w: float = 1.0
    var_w: float = 1.0
    var_x: float = 1.0
    var_m: float = 1.0
    var_y: float = 1.0
    var_v: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            try:
                val = float(val)
            except (TypeError, ValueError):
                raise ValidationError(f"{f.name}={val!r} is not a number") from None
            if not math.isfinite(val):
                raise ValidationError(f"{f.name}={val!r} is not finite")
            object.__setattr__(self, f.name, val)
        for name in _VARIANCES:
            if getattr(self, name) < 0:
                raise ValidationError(f"{name}={getattr(self, name)} must be >= 0")

    @classmethod
    def homoscedastic(cls, sigma2: float = 1.0, **kw) -> "ModelParams":
        """All of var_w, var_x, var_m, var_y (and var_v) set to ``sigma2``."""
        base = {name: sigma2 for name in _VARIANCES}
        base.update(kw)
        return cls(**base)

    def replace(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class Dataset:
    w: np.ndarray
    x: np.ndarray
    m: np.ndarray
    y: np.ndarray
    v: np.ndarray | None = None
    u_x: np.ndarray | None = None
    u_m: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = None
        for name in ("w", "x", "m", "y", "v", "u_x", "u_m"):
            col = getattr(self, name)
            if col is None:
                continue
            col = np.asarray(col, dtype=float)
            if col.ndim != 1:
                raise ValidationError(f"column {name} must be one-dimensional")
            if n is None:
                n = col.size
            elif col.size != n:
                raise ValidationError(f"column {name} has length {col.size}, expected {n}")
            object.__setattr__(self, name, col)
        if n is None or n < 2:
            raise ValidationError("a dataset needs n >= 2 rows")

    @property
    def n(self) -> int:
        return self.x.size

    def columns(self) -> dict[str, np.ndarray]:
        cols = {}
        for name in ("v", "w", "x", "m", "y", "u_x", "u_m"):
            col = getattr(self, name)
            if col is not None:
                cols[name.upper() if len(name) == 1 else name] = col
        return cols


def node_streams(seed) -> dict[str, np.random.Generator]:
    """Per-node generators split deterministically from ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, ss.spawn(len(STREAMS)))}


def _check_n(n):
    if int(n) != n or n < 2:
        raise ValidationError(f"n={n!r}: need an integer sample count >= 2")
    return int(n)


def _draw(rng, mean, var, n):
    return rng.normal(mean, math.sqrt(var), n)


def _propagate(p: ModelParams, n: int, seed, d_fn, eps_fn, keep_noise: bool) -> Dataset:
    rng = node_streams(seed)
    w = _draw(rng["w"], p.mu_w, p.var_w, n)
    u_x = _draw(rng["x"], 0.0, p.var_x, n)
    u_m = _draw(rng["m"], 0.0, p.var_m, n)
    u_y = _draw(rng["y"], 0.0, p.var_y, n)
    v = None
    x = d_fn(w)
    if p.g != 0.0:
        v = _draw(rng["v"], 0.0, p.var_v, n)
        x = x + p.g * v
    x = x + u_x
    m = p.c * x + eps_fn(w) + u_m
    y = p.a * m + p.b * w + u_y
    return Dataset(w=w, x=x, m=m, y=y, v=v,
                   u_x=u_x if keep_noise else None, u_m=u_m if keep_noise else None)


def sample_linear_cmm(params: ModelParams, n: int, seed, keep_noise: bool = False) -> Dataset:
    """Draw ``n`` i.i.d. rows of the linear CMM.

    Identical ``(params, n, seed)`` give bit-identical columns. ``V`` is only
    drawn (and returned) when ``params.g != 0``.
    """
    n = _check_n(n)
    return _propagate(params, n, seed, lambda w: params.d * w, lambda w: params.eps * w, keep_noise)


def sample_partial_cmm(params: ModelParams, d_poly: PolyCoeffs, eps_poly: PolyCoeffs,
                       n: int, seed, keep_noise: bool = False) -> Dataset:
    """Partial linear CMM: ``X = d(W) + u_X``, ``M = c X + eps(W) + u_M``.

    ``params.d`` and ``params.eps`` are ignored in favour of the polynomials.
    Degree-1 polynomials reproduce :func:`sample_linear_cmm` sample for sample.
    """
    n = _check_n(n)
    d_poly = d_poly if isinstance(d_poly, Series) else Series(tuple(d_poly))
    eps_poly = eps_poly if isinstance(eps_poly, Series) else Series(tuple(eps_poly))
    sd = math.sqrt(params.var_w)
    check = check_invertible(d_poly, params.mu_w - 8 * sd, params.mu_w + 8 * sd)
    if not check:
        msg = f"d(W) is not invertible on the support of W: {check.witness}"
        if d_poly.degree <= 3:
            msg += f" (global condition: {check_invertible_cubic(d_poly[1], d_poly[2], d_poly[3]).witness})"
        raise InvertibilityError(msg)
    return _propagate(params, n, seed, d_poly, eps_poly, keep_noise)


def node_labels(params: ModelParams) -> tuple[str, ...]:
    return ("V", "W", "X", "M", "Y") if params.g != 0.0 else ("W", "X", "M", "Y")


def _loadings(p: ModelParams) -> np.ndarray:
    """Rows: nodes V, W, X, M, Y; columns: sources V, u_W, u_X, u_M, u_Y."""
    V = np.array([1.0, 0, 0, 0, 0])
    W = np.array([0, 1.0, 0, 0, 0])
    X = p.d * W + p.g * V + np.array([0, 0, 1.0, 0, 0])
    M = p.c * X + p.eps * W + np.array([0, 0, 0, 1.0, 0])
    Y = p.a * M + p.b * W + np.array([0, 0, 0, 0, 1.0])
    return np.vstack([V, W, X, M, Y])


def population_covariance(params: ModelParams) -> np.ndarray:
    """Exact centred covariance over ``(V,) W, X, M, Y`` (order of :func:`node_labels`)."""
    A = _loadings(params)
    var = np.array([params.var_v, params.var_w, params.var_x, params.var_m, params.var_y])
    cov = (A * var) @ A.T
    cov = 0.5 * (cov + cov.T)
    return cov if params.g != 0.0 else cov[1:, 1:]


def population_mean(params: ModelParams) -> np.ndarray:
    mean = _loadings(params) @ np.array([0.0, params.mu_w, 0.0, 0.0, 0.0])
    return mean if params.g != 0.0 else mean[1:]
