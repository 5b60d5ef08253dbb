"""Patient-cohort CSV ingest and semi-synthetic outcome generation.

Only two columns are read: the confounder (patient age) and the treatment
(systolic blood pressure at randomisation). Both are min-max normalised to
``[0, 1]``; the raw values are kept for audit. Rows where either field is
missing or non-numeric are dropped and counted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import Dataset, ModelParams, node_streams

FIXTURE_NAME = "ist_fixture.csv"


@dataclass(frozen=True)
class CohortTable:
    w_raw: np.ndarray
    x_raw: np.ndarray
    w: np.ndarray
    x: np.ndarray
    n_dropped: int = 0
    source: str = ""

    @property
    def n(self) -> int:
        return self.w.size


def minmax_normalize(col) -> np.ndarray:
    """Affine map of ``col`` onto ``[0, 1]``; the min goes to 0 and the max to 1 exactly."""
    col = np.asarray(col, dtype=float)
    if col.size == 0:
        raise ValidationError("cannot normalise an empty column")
    lo, hi = float(col.min()), float(col.max())
    if not hi > lo:
        raise ValidationError(f"constant column (min = max = {lo}) cannot be normalised")
    out = (col - lo) / (hi - lo)
    # pin the extremes; rounding can otherwise leave 1 - 1ulp
    out[col == lo] = 0.0
    out[col == hi] = 1.0
    return np.clip(out, 0.0, 1.0)


def _parse(value: str | None) -> float | None:
    if value is None:
        return None
    value = value.strip()
    if not value:
        return None
    try:
        out = float(value)
    except ValueError:
        return None
    return out if math.isfinite(out) else None


def load_cohort_csv(path, age_col: str = "AGE", x_col: str = "RSBP",
                    delimiter: str = ",") -> CohortTable:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"cohort file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, header row required") from None
        lookup = {h.strip().lower(): i for i, h in enumerate(header)}
        missing = [c for c in (age_col, x_col) if c.strip().lower() not in lookup]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {missing}; header is {header}")
        iw, ix = lookup[age_col.strip().lower()], lookup[x_col.strip().lower()]
        ws, xs, dropped = [], [], 0
        for row in reader:
            if not row:
                continue
            w = _parse(row[iw]) if iw < len(row) else None
            x = _parse(row[ix]) if ix < len(row) else None
            if w is None or x is None:
                dropped += 1
                continue
            ws.append(w)
            xs.append(x)
    if not ws:
        raise ValidationError(f"{path}: no usable rows ({dropped} dropped)")
    w_raw, x_raw = np.array(ws), np.array(xs)
    return CohortTable(w_raw, x_raw, minmax_normalize(w_raw), minmax_normalize(x_raw),
                       dropped, str(path))


def fixture_path() -> Path:
    return Path(str(resources.files("longterm_iv") / "data" / FIXTURE_NAME))


def load_fixture() -> CohortTable:
    return load_cohort_csv(fixture_path())


def gen_semi_synthetic(cohort: CohortTable, p: ModelParams, seed) -> Dataset:
    """Fresh ``M`` and ``Y`` over the fixed cohort columns.

    ``M = c x + eps w + u_M`` and ``Y = a M + b w + u_Y``. The ``m`` and ``y``
    streams of :func:`~longterm_iv.model.node_streams` supply the noise, so
    a run draws exactly what the synthetic sampler would for those nodes.
    """
    rng = node_streams(seed)
    n = cohort.n
    u_m = rng["m"].normal(0.0, math.sqrt(p.var_m), n)
    u_y = rng["y"].normal(0.0, math.sqrt(p.var_y), n)
    w, x = cohort.w, cohort.x
    m = p.c * x + p.eps * w + u_m
    y = p.a * m + p.b * w + u_y
    return Dataset(w=w, x=x, m=m, y=y, meta={"source": cohort.source})
