"""Estimators for long-term effects through a confounded mediator.

Linear and partial-linear confounded-mediator models, front-door and
instrumental estimators of the mediator-to-outcome effect, closed-form
bias/variance oracles and a seeded Monte-Carlo harness.
"""

from .analytic import (
    GaussianFamily,
    bias_cubic_d,
    bias_cubic_eps,
    bias_ifdc,
    bias_ifdc_homoscedastic,
    bias_ols_c,
    bias_rv_naive,
    condition_gaussian,
    family_from_params,
    improved_expectations,
    isserlis_moment,
    pole_location,
    var_c,
    var_fdc,
    var_improved,
    var_total,
)
from .errors import (
    DegenerateError,
    InvertibilityError,
    NearPoleError,
    PoleError,
    ValidationError,
    WeakInstrumentError,
)
from .estimators import (
    EstimateResult,
    Estimator,
    fdc,
    ifdc,
    improved_ifdc,
    improved_ifdc_nonlinear,
    improved_ifdc_prior,
    ols_c,
)
from .harness import (
    Axis,
    GridSpec,
    GridSummary,
    run_grid_linear,
    run_grid_nonlinear,
    run_ist,
    summarize,
)
from .ingest import CohortTable, gen_semi_synthetic, load_cohort_csv, minmax_normalize
from .model import Dataset, ModelParams, sample_linear_cmm, sample_partial_cmm
from .series import (
    PolyCoeffs,
    Series,
    check_invertible,
    check_invertible_cubic,
    compose_series,
    eps_over_d_series,
    invert_series,
)

__all__ = [
    "Axis",
    "CohortTable",
    "Dataset",
    "DegenerateError",
    "EstimateResult",
    "Estimator",
    "GaussianFamily",
    "GridSpec",
    "GridSummary",
    "InvertibilityError",
    "ModelParams",
    "NearPoleError",
    "PoleError",
    "PolyCoeffs",
    "Series",
    "ValidationError",
    "WeakInstrumentError",
    "bias_cubic_d",
    "bias_cubic_eps",
    "bias_ifdc",
    "bias_ifdc_homoscedastic",
    "bias_ols_c",
    "bias_rv_naive",
    "check_invertible",
    "check_invertible_cubic",
    "compose_series",
    "condition_gaussian",
    "eps_over_d_series",
    "family_from_params",
    "fdc",
    "gen_semi_synthetic",
    "ifdc",
    "improved_expectations",
    "improved_ifdc",
    "improved_ifdc_nonlinear",
    "improved_ifdc_prior",
    "invert_series",
    "isserlis_moment",
    "load_cohort_csv",
    "minmax_normalize",
    "ols_c",
    "pole_location",
    "run_grid_linear",
    "run_grid_nonlinear",
    "run_ist",
    "sample_linear_cmm",
    "sample_partial_cmm",
    "summarize",
    "var_c",
    "var_fdc",
    "var_improved",
    "var_total",
]

__version__ = "0.1.0"
