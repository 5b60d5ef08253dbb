import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from longterm_iv.errors import ValidationError
from longterm_iv.ingest import (
    fixture_path,
    gen_semi_synthetic,
    load_cohort_csv,
    load_fixture,
    minmax_normalize,
)
from longterm_iv.model import ModelParams

DATA = Path(__file__).parent / "data"


class TestLoad:
    def test_bundled_fixture(self):
        c = load_fixture()
        assert c.n == 100 and c.n_dropped == 0
        for col in (c.w, c.x):
            assert col.min() == 0.0 and col.max() == 1.0
        assert 40 < c.w_raw.mean() < 100 and 100 < c.x_raw.mean() < 220

    def test_malformed_rows_dropped(self):
        c = load_cohort_csv(DATA / "cohort_malformed.csv")
        assert c.n == 97 and c.n_dropped == 3

    def test_row_order_preserved(self):
        c = load_fixture()
        first = fixture_path().read_text().splitlines()[1].split(",")
        assert c.w_raw[0] == float(first[1]) and c.x_raw[0] == float(first[2])

    def test_case_insensitive_headers_and_delimiter(self, tmp_path):
        f = tmp_path / "c.tsv"
        f.write_text("age\trsbp\n60\t150\n70\t170\n80\t160\n")
        c = load_cohort_csv(f, "Age", "RSBP", delimiter="\t")
        np.testing.assert_array_equal(c.w, [0.0, 0.5, 1.0])
        np.testing.assert_array_equal(c.x, [0.0, 1.0, 0.5])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_cohort_csv(tmp_path / "nope.csv")

    def test_missing_column(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("AGE,DBP\n60,80\n")
        with pytest.raises(ValidationError, match="RSBP"):
            load_cohort_csv(f)

    def test_no_usable_rows(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("AGE,RSBP\n,\nx,y\n")
        with pytest.raises(ValidationError, match="no usable rows"):
            load_cohort_csv(f)

    def test_constant_column(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("AGE,RSBP\n60,150\n60,170\n")
        with pytest.raises(ValidationError, match="constant"):
            load_cohort_csv(f)

    @pytest.mark.skipif(not os.environ.get("IST_CSV"), reason="set IST_CSV to the full trial export")
    def test_full_trial_export(self):
        assert load_cohort_csv(os.environ["IST_CSV"]).n == 19_345


class TestNormalize:
    @given(arrays(float, st.integers(2, 50), elements=st.floats(-1e6, 1e6)))
    def test_unit_range(self, col):
        if col.min() == col.max():
            return
        out = minmax_normalize(col)
        assert out.min() == 0.0 and out.max() == 1.0
        assert np.all((out >= 0) & (out <= 1))

    @given(arrays(float, st.integers(2, 50), elements=st.floats(-1e6, 1e6)))
    def test_idempotent(self, col):
        if col.min() == col.max():
            return
        once = minmax_normalize(col)
        np.testing.assert_allclose(minmax_normalize(once), once, rtol=0, atol=1e-15)


class TestSemiSynthetic:
    def test_noiseless(self):
        c = load_fixture()
        ds = gen_semi_synthetic(c, ModelParams(var_m=0, var_y=0, eps=2.0), seed=0)
        np.testing.assert_allclose(ds.m, c.x + 2.0 * c.w)
        np.testing.assert_allclose(ds.y, ds.m + c.w)

    def test_columns_reused_noise_fresh(self):
        c = load_fixture()
        a = gen_semi_synthetic(c, ModelParams(), 1)
        b = gen_semi_synthetic(c, ModelParams(), 2)
        assert np.array_equal(a.w, b.w) and np.array_equal(a.x, b.x)
        assert not np.array_equal(a.m, b.m) and not np.array_equal(a.y, b.y)

    def test_zero_outcome(self):
        ds = gen_semi_synthetic(load_fixture(), ModelParams(a=0, b=0, var_y=0), 3)
        assert np.all(ds.y == 0)

    def test_reuse_over_many_runs(self):
        c = load_fixture()
        ref = gen_semi_synthetic(c, ModelParams(), 0)
        for s in range(1, 200):
            ds = gen_semi_synthetic(c, ModelParams(), s)
            assert np.array_equal(ds.w, ref.w) and np.array_equal(ds.x, ref.x)

    def test_deterministic(self):
        c = load_fixture()
        a, b = gen_semi_synthetic(c, ModelParams(), 9), gen_semi_synthetic(c, ModelParams(), 9)
        assert np.array_equal(a.m, b.m) and np.array_equal(a.y, b.y)
