import math

import numpy as np
import pytest

from longterm_iv import harness as H
from longterm_iv.errors import ValidationError
from longterm_iv.estimators import EstimateResult, Estimator
from longterm_iv.ingest import load_fixture
from longterm_iv.model import ModelParams


def small_spec(**kw):
    base = dict(axes=(H.Axis("eps", (0.5, 2.0)), H.Axis("sigma2", (0.5, 1.0))),
                n_samples=200, n_runs=5, base_seed=3)
    base.update(kw)
    return H.GridSpec(**base)


class TestSummarize:
    def test_constant(self):
        r = H.summarize([1.0, 1.0, 1.0], 1.0)
        assert r.bias == 0.0 and r.variance == 0.0

    def test_two_runs(self):
        r = H.summarize([0.9, 1.1], 1.0)
        assert r.bias == pytest.approx(0.0, abs=1e-15) and r.variance == pytest.approx(0.02)

    def test_near_pole_excluded(self):
        runs = [EstimateResult(Estimator.IMPROVED, 1.0, 1.0)] * 99
        runs.append(EstimateResult(Estimator.IMPROVED, 500.0, 1e-9, near_pole=True))
        r = H.summarize(runs, 1.0)
        assert r.near_pole_frac == 0.01 and r.mean == 1.0 and r.n_used == 99
        assert r.mean_all > 1.0

    def test_failures_counted(self):
        r = H.summarize([1.0, None, float("nan"), 3.0], 2.0)
        assert r.n_failed == 2 and r.mean == 2.0 and r.bias == 0.0

    def test_all_failed(self):
        r = H.summarize([None, None], 1.0)
        assert r.failed and math.isnan(r.mean)

    def test_bias_is_mean_minus_truth(self):
        r = H.summarize([0.3, 0.7, 1.4], 0.25)
        assert r.bias == r.mean - 0.25


class TestAxes:
    def test_parse_list(self):
        ax = H.parse_axis("eps=0.1, 0.5,1")
        assert ax == H.Axis("eps", (0.1, 0.5, 1.0))

    def test_parse_linspace(self):
        ax = H.parse_axis("sigma2=linspace(0, 3, 20)")
        assert len(ax.values) == 20 and ax.values[-1] == 3.0

    @pytest.mark.parametrize("text", ["eps", "bogus=1,2", "eps=1,x", "eps=nan"])
    def test_bad(self, text):
        with pytest.raises(ValidationError):
            H.parse_axis(text)

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            small_spec(n_runs=1)
        with pytest.raises(ValidationError):
            small_spec(axes=())
        with pytest.raises(ValidationError):
            small_spec(axes=(H.Axis("eps", (1,)), H.Axis("eps", (2,))))
        with pytest.raises(ValidationError):
            small_spec(base_seed=-1)

    def test_cell_setup(self):
        spec = small_spec()
        p, _, _ = spec.cell_setup((1, 0))
        assert p.eps == 2.0 and p.var_w == p.var_x == p.var_m == p.var_y == 0.5
        assert p.var_v == 1.0

    def test_poly_axes(self):
        spec = H.nonlinear_d_spec()
        p, d, e = spec.cell_setup((0, 4))
        assert d.coeffs == (1.0, -0.5, 0.5) and e.coeffs == (2.0,)
        assert p.var_m == 0.3


class TestSeeds:
    def test_cell_seed_is_64_bit_and_stable(self):
        a, b = small_spec(), small_spec()
        assert a.cell_seed((1, 1)) == b.cell_seed((1, 1))
        assert 0 <= a.cell_seed((0, 0)) < 2**64
        assert len({a.cell_seed(i) for i in a.cells()}) == 4

    def test_extending_axis_keeps_existing_cells(self):
        a = H.run_grid_linear(small_spec())
        b = H.run_grid_linear(small_spec(axes=(H.Axis("eps", (0.5, 2.0, 3.0)),
                                                H.Axis("sigma2", (0.5, 1.0)))))
        old = {(r.estimator, r.axis_values): r.csv_fields() for r in a.rows}
        new = {(r.estimator, r.axis_values): r.csv_fields() for r in b.rows}
        assert all(new[k] == v for k, v in old.items())

    def test_base_seed_matters(self):
        a = H.run_grid_linear(small_spec()).to_csv()
        assert H.run_grid_linear(small_spec(base_seed=4)).to_csv() != a


class TestLinearGrid:
    def test_smoke_single_cell(self):
        spec = H.GridSpec((H.Axis("eps", (2.0,)),), n_samples=10, n_runs=2)
        g = H.run_grid_linear(spec)
        assert all(np.isfinite(r.variance) and r.variance >= 0 for r in g.rows)

    def test_csv_schema(self):
        text = H.run_grid_linear(small_spec()).to_csv()
        lines = text.splitlines()
        assert lines[0] == ("estimator,axis1_name,axis1_value,axis2_name,axis2_value,mean,bias,"
                            "variance,near_pole_frac,n_samples,n_runs,seed")
        assert len(lines) == 1 + 3 * 4
        fields = lines[1].split(",")
        assert fields[0] == "FDC" and fields[1] == "eps" and fields[3] == "sigma2"
        assert fields[9:11] == ["200", "5"]

    def test_one_axis_blanks(self):
        spec = H.GridSpec((H.Axis("eps", (2.0,)),), n_samples=50, n_runs=2)
        fields = H.run_grid_linear(spec, {Estimator.IFDC}).to_csv().splitlines()[1].split(",")
        assert fields[3] == "" and fields[4] == ""

    def test_serial_equals_parallel(self):
        spec = small_spec()
        assert H.run_grid_linear(spec, workers=1).to_csv() == H.run_grid_linear(spec, workers=2).to_csv()

    def test_repeatable(self):
        assert H.run_grid_linear(small_spec()).to_csv() == H.run_grid_linear(small_spec()).to_csv()

    def test_table_shape(self):
        g = H.run_grid_linear(small_spec())
        assert g.table("IFDC").shape == (2, 2)

    def test_ols_truth_is_c(self):
        spec = small_spec(params=ModelParams(c=0.4))
        g = H.run_grid_linear(spec, {Estimator.OLS_C})
        assert all(r.truth == 0.4 for r in g.rows)

    def test_prior_requires_instrument(self):
        with pytest.raises(ValidationError):
            H.run_grid_linear(small_spec(), {Estimator.IMPROVED_PRIOR})
        g = H.run_grid_linear(small_spec(params=ModelParams(g=1.0)), {Estimator.IMPROVED_PRIOR})
        assert len(g.rows) == 4

    def test_failures_are_not_fatal(self):
        # mu_w = 0 makes the ratio estimator refuse every run
        spec = small_spec(params=ModelParams(mu_w=0.0), n_samples=2000)
        g = H.run_grid_linear(spec, {Estimator.IMPROVED, Estimator.IFDC})
        improved = g.select("IMPROVED")
        assert all(r.n_failed > 0 for r in improved)
        assert all(not r.failed for r in g.select("IFDC"))


class TestNonlinearGrid:
    def test_skips_non_invertible(self):
        spec = H.GridSpec((H.Axis("d2", (0.0, 1.0)),), ModelParams.homoscedastic(0.3, eps=2.0),
                          n_samples=200, n_runs=3, d_poly=(1.0, 0.0, 0.1), eps_poly=(2.0,))
        g = H.run_grid_nonlinear(spec)
        rows = g.select("IFDC")
        assert not rows[0].skipped and rows[1].skipped
        assert math.isnan(rows[1].mean)

    def test_oracle_series_mode(self):
        spec = H.GridSpec((H.Axis("d2", (0.3,)),), ModelParams.homoscedastic(0.3, eps=2.0),
                          n_samples=500, n_runs=3, d_poly=(1.0, 0.0, 0.1), eps_poly=(2.0,),
                          series_mode="oracle")
        g = H.run_grid_nonlinear(spec)
        assert all(np.isfinite(r.mean) for r in g.rows)

    def test_presets_build(self):
        for name, fn in H.PRESETS.items():
            spec = fn()
            assert spec.n_runs >= 2, name
        assert H.fig2_spec().shape == (30, 3)
        assert H.nonlinear_d_spec().shape == (6, 5)
        assert H.ist_spec().shape == (20, 3)


class TestIst:
    def test_small_run(self):
        spec = H.GridSpec((H.Axis("eps", (0.0, 1.5)),), n_runs=4, sigma2_targets=("var_m", "var_y"))
        g = H.run_ist(load_fixture(), spec)
        assert {r.estimator for r in g.rows} == {"IFDC", "IMPROVED"}
        assert all(r.n_samples == 100 for r in g.rows)

    def test_rejects_nonlinear(self):
        spec = H.GridSpec((H.Axis("eps", (0.0,)),), n_runs=2)
        with pytest.raises(ValidationError):
            H.run_ist(load_fixture(), spec, {Estimator.IMPROVED_NONLINEAR})


class TestFallback:
    def test_exclusion_never_empties_cell(self):
        runs = [EstimateResult(Estimator.IMPROVED, 1.0, 1.0),
                EstimateResult(Estimator.IMPROVED, 3.0, 0.1, near_pole=True)]
        r = H.summarize(runs, 1.0)
        assert r.fallback and r.mean == 2.0 and r.near_pole_frac == 0.5
