import numpy as np
import pytest

from longterm_iv.errors import InvertibilityError, ValidationError
from longterm_iv.model import (
    Dataset,
    ModelParams,
    node_labels,
    population_covariance,
    population_mean,
    sample_linear_cmm,
    sample_partial_cmm,
)
from longterm_iv.series import Series

NOISELESS = dict(var_w=0.0, var_x=0.0, var_m=0.0, var_y=0.0, var_v=0.0)


class TestParams:
    def test_defaults_are_unit(self):
        p = ModelParams()
        assert (p.a, p.b, p.c, p.d, p.eps, p.g, p.mu_w) == (1, 1, 1, 1, 1, 0, 1)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValidationError):
            ModelParams(var_m=-1.0)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), "x"])
    def test_nonfinite_rejected(self, bad):
        with pytest.raises(ValidationError):
            ModelParams(a=bad)

    def test_homoscedastic(self):
        p = ModelParams.homoscedastic(0.3, eps=2.0)
        assert p.var_w == p.var_x == p.var_m == p.var_y == p.var_v == 0.3
        assert p.eps == 2.0

    def test_zero_mean_allowed_here(self):
        # the ratio estimator validates mu_w, not the parameter record
        assert ModelParams(mu_w=0.0).mu_w == 0.0


class TestDataset:
    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            Dataset(w=[1, 2], x=[1, 2], m=[1, 2], y=[1, 2, 3])

    def test_needs_two_rows(self):
        with pytest.raises(ValidationError):
            Dataset(w=[1], x=[1], m=[1], y=[1])


class TestLinearSampler:
    def test_noiseless_rows(self):
        ds = sample_linear_cmm(ModelParams(**NOISELESS), 3, seed=0)
        for col, val in zip((ds.w, ds.x, ds.m, ds.y), (1, 1, 2, 3)):
            np.testing.assert_array_equal(col, val)

    def test_bit_identical_under_seed(self):
        p = ModelParams(g=0.5)
        a, b = sample_linear_cmm(p, 500, 42), sample_linear_cmm(p, 500, 42)
        for k in a.columns():
            assert np.array_equal(a.columns()[k], b.columns()[k])

    def test_seed_changes_draws(self):
        a, b = sample_linear_cmm(ModelParams(), 100, 1), sample_linear_cmm(ModelParams(), 100, 2)
        assert not np.array_equal(a.x, b.x)

    def test_v_only_with_prior_instrument(self):
        assert sample_linear_cmm(ModelParams(), 10, 0).v is None
        assert sample_linear_cmm(ModelParams(g=1.0), 10, 0).v is not None

    def test_prior_instrument_leaves_other_streams(self):
        a = sample_linear_cmm(ModelParams(), 50, 3, keep_noise=True)
        b = sample_linear_cmm(ModelParams(g=1.0), 50, 3, keep_noise=True)
        assert np.array_equal(a.w, b.w) and np.array_equal(a.u_x, b.u_x)
        np.testing.assert_allclose(b.x - a.x, b.v, rtol=0, atol=1e-12)

    def test_keep_noise(self):
        ds = sample_linear_cmm(ModelParams(), 20, 0, keep_noise=True)
        np.testing.assert_allclose(ds.x, ds.w + ds.u_x)

    @pytest.mark.parametrize("n", [1, 0, 2.5])
    def test_bad_n(self, n):
        with pytest.raises(ValidationError):
            sample_linear_cmm(ModelParams(), n, 0)

    def test_large_sample_moments(self):
        ds = sample_linear_cmm(ModelParams(), 1_000_000, 7)
        assert abs(ds.x.mean() - 1.0) < 0.01
        assert abs(ds.x.var() / 2.0 - 1.0) < 0.02

    def test_empirical_covariance_matches_population(self):
        p = ModelParams(a=0.7, b=-0.4, c=1.3, d=0.8, eps=0.5, g=0.6, var_x=0.5, var_v=2.0)
        n = 1_000_000
        ds = sample_linear_cmm(p, n, 11)
        data = np.vstack([ds.v, ds.w, ds.x, ds.m, ds.y])
        emp = np.cov(data)
        pop = population_covariance(p)
        # se of a sample covariance under Gaussianity
        se = np.sqrt((pop**2 + np.outer(np.diag(pop), np.diag(pop))) / n)
        assert np.all(np.abs(emp - pop) < 5 * se)
        np.testing.assert_allclose(data.mean(axis=1), population_mean(p), atol=0.02)


class TestPartialSampler:
    def test_linear_special_case_is_sample_identical(self):
        p = ModelParams(d=1.0, eps=1.7)
        a = sample_linear_cmm(p, 200, 5)
        b = sample_partial_cmm(p, Series((1.0,)), Series((1.7,)), 200, 5)
        for k in ("W", "X", "M", "Y"):
            assert np.array_equal(a.columns()[k], b.columns()[k])

    def test_noiseless_polynomials(self):
        p = ModelParams(c=2.0, **NOISELESS)
        ds = sample_partial_cmm(p, Series((1.0, 1.0)), Series((1.0,)), 2, 0)
        np.testing.assert_array_equal(ds.x, 2.0)
        np.testing.assert_array_equal(ds.m, 2.0 * 2 + 1)

    def test_invertible_cubic_passes(self):
        sample_partial_cmm(ModelParams(), (1.0, 0.5, 0.1), (1.0,), 10, 0)

    def test_non_invertible_rejected_with_condition(self):
        with pytest.raises(InvertibilityError, match="sqrt"):
            sample_partial_cmm(ModelParams(), (1.0, 1.0, 0.1), (1.0,), 10, 0)


class TestPopulationCovariance:
    def test_zero_couplings_is_diagonal(self):
        p = ModelParams(a=0, b=0, c=0, d=0, eps=0, var_w=1, var_x=2, var_m=3, var_y=4)
        np.testing.assert_array_equal(population_covariance(p), np.diag([1.0, 2, 3, 4]))

    def test_unit_entries(self):
        cov = population_covariance(ModelParams())
        labels = node_labels(ModelParams())
        i = {k: j for j, k in enumerate(labels)}
        assert cov[i["M"], i["M"]] == pytest.approx(6.0)
        assert cov[i["W"], i["Y"]] == pytest.approx(3.0)
        assert cov[i["X"], i["X"]] == pytest.approx(2.0)

    def test_closed_form_entries(self):
        p = ModelParams(a=0.3, b=0.2, c=1.5, d=0.7, eps=-0.4, g=0.9, var_w=1.2, var_x=0.4,
                        var_m=0.8, var_y=0.5, var_v=1.1)
        cov = population_covariance(p)
        vx = p.d**2 * p.var_w + p.g**2 * p.var_v + p.var_x
        assert cov.shape == (5, 5)
        assert cov[1, 2] == pytest.approx(p.d * p.var_w)
        assert cov[2, 2] == pytest.approx(vx)
        assert cov[2, 3] == pytest.approx(p.c * vx + p.eps * p.d * p.var_w)
        assert cov[3, 3] == pytest.approx(p.c**2 * vx + 2 * p.c * p.eps * p.d * p.var_w
                                          + p.eps**2 * p.var_w + p.var_m)
        np.testing.assert_allclose(cov, cov.T)
