import numpy as np
import pytest
from scipy import stats as ss

from metrotwin.errors import (
    DegenerateInputError,
    InsufficientDataError,
    SingularDesignError,
)
from metrotwin.stats import (
    anova_oneway,
    descriptive_stats,
    ols_fit,
    paired_t_test,
    regression_design,
)

TRUE_BETA = (-0.0152, 0.00015, 0.0112, 0.00078)


class TestDescriptiveStats:
    def test_hand_computed_example(self):
        # mean 2, sd 1, t(0.975, 2) = 4.302652729696142
        s = descriptive_stats([1.0, 2.0, 3.0])
        assert s.n == 3
        assert s.mean == pytest.approx(2.0)
        assert s.sample_std == pytest.approx(1.0)
        assert s.range == pytest.approx(2.0)
        assert s.ci95 == pytest.approx((-0.48413771171954556, 4.484137711719546), abs=1e-9)
        assert s.pi95 == pytest.approx((-2.968275423439091, 6.968275423439091), abs=1e-9)

    def test_constant_values(self):
        s = descriptive_stats([4.2] * 5)
        assert s.sample_std == 0.0
        assert s.range == 0.0
        assert s.ci95 == (4.2, 4.2)

    def test_requires_two_values(self):
        with pytest.raises(InsufficientDataError):
            descriptive_stats([1.0])

    def test_campaign_scale(self, campaign_records):
        # Magnitude sanity only: deviations live at the mm-thousandths scale.
        devs = [r.deviation for r in campaign_records if r.device.value == "CMM"]
        s = descriptive_stats(devs)
        assert 0.001 < abs(s.mean) < 0.2
        assert s.ci95[0] < s.mean < s.ci95[1]
        assert (s.pi95[1] - s.pi95[0]) > (s.ci95[1] - s.ci95[0])


class TestPairedTTest:
    def test_identical_samples(self):
        r = paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.t_stat == 0.0
        assert r.p_value == 1.0

    def test_hand_computed(self):
        r = paired_t_test([1.0, 2.0, 3.0], [0.0, 1.0, 1.0])
        assert r.t_stat == pytest.approx(4.0)
        assert r.df == 2
        assert r.p_value == pytest.approx(0.05719095841793663, abs=1e-9)

    def test_antisymmetry(self):
        a, b = [1.0, 2.0, 3.5], [0.5, 1.0, 1.2]
        fwd = paired_t_test(a, b)
        rev = paired_t_test(b, a)
        assert fwd.t_stat == pytest.approx(-rev.t_stat)
        assert fwd.p_value == pytest.approx(rev.p_value)

    def test_matches_scipy(self):
        rng = np.random.default_rng(3)
        a = rng.normal(0.01, 0.005, 25)
        b = rng.normal(0.008, 0.005, 25)
        mine = paired_t_test(a, b)
        ref_t, ref_p = ss.ttest_rel(a, b)
        assert mine.t_stat == pytest.approx(float(ref_t), rel=1e-10)
        assert mine.p_value == pytest.approx(float(ref_p), abs=1e-10)

    def test_degenerate_zero_variance(self):
        with pytest.raises(DegenerateInputError):
            paired_t_test([1.0, 2.0, 3.0], [0.0, 1.0, 2.0])

    def test_length_mismatch(self):
        with pytest.raises(Exception):
            paired_t_test([1.0, 2.0], [1.0])


class TestAnova:
    def test_equal_group_means(self):
        r = anova_oneway([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        assert r.f_stat == 0.0
        assert r.p_value == 1.0

    def test_hand_computed(self):
        # SSB 6.25, SSW 2.5 -> F = 6.25 / 1.25 = 5, p = 0.1548...
        r = anova_oneway([[1.0, 2.0], [3.0, 5.0]])
        assert r.f_stat == pytest.approx(5.0)
        assert (r.df_between, r.df_within) == (1, 2)
        assert r.p_value == pytest.approx(0.15484574527148343, abs=1e-9)

    def test_translation_invariance(self):
        groups = [[1.0, 2.0, 4.0], [2.5, 3.0, 6.0]]
        shifted = [[v + 17.25 for v in g] for g in groups]
        assert anova_oneway(groups).f_stat == pytest.approx(
            anova_oneway(shifted).f_stat, rel=1e-9)

    def test_two_groups_f_equals_t_squared(self):
        rng = np.random.default_rng(5)
        a, b = rng.normal(0, 1, 18), rng.normal(0.4, 1, 18)
        f = anova_oneway([a, b]).f_stat
        t_ref = float(ss.ttest_ind(a, b).statistic)
        assert f == pytest.approx(t_ref ** 2, rel=1e-9)

    def test_small_group_rejected(self):
        with pytest.raises(InsufficientDataError):
            anova_oneway([[1.0], [2.0, 3.0]])

    def test_fully_degenerate(self):
        with pytest.raises(DegenerateInputError):
            anova_oneway([[2.0, 2.0], [2.0, 2.0]])


def _noiseless_design(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = np.column_stack([
        rng.uniform(5, 500, n),
        rng.integers(0, 2, n).astype(float),
        rng.uniform(19.5, 30.5, n),
    ])
    y = (TRUE_BETA[0] + TRUE_BETA[1] * X[:, 0]
         + TRUE_BETA[2] * X[:, 1] + TRUE_BETA[3] * X[:, 2])
    return X, y


class TestOlsFit:
    def test_noiseless_exact_recovery(self):
        X, y = _noiseless_design()
        result = ols_fit(X, y)
        assert result.coefficients == pytest.approx(TRUE_BETA, abs=1e-10)
        assert result.r_squared == pytest.approx(1.0, abs=1e-10)

    def test_constant_target(self):
        X, _ = _noiseless_design()
        result = ols_fit(X, np.full(X.shape[0], 3.3))
        assert result.coefficients[0] == pytest.approx(3.3)
        assert result.coefficients[1:] == pytest.approx([0, 0, 0], abs=1e-12)

    def test_singular_design_reports_column(self):
        X, y = _noiseless_design()
        X[:, 2] = 2.0 * X[:, 0]  # temperature column collinear with nominal
        with pytest.raises(SingularDesignError) as err:
            ols_fit(X, y)
        assert err.value.column is not None

    def test_residual_orthogonality(self, campaign_records):
        X, y = regression_design(campaign_records)
        result = ols_fit(X, y)
        design = np.column_stack([np.ones(len(y)), X])
        residual = y - design @ result.coefficients
        gram = design.T @ residual
        scale = float(np.abs(design).max() * np.abs(y).max())
        assert np.all(np.abs(gram) <= 1e-8 * max(scale, 1.0))

    def test_matches_scipy_inference(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 2))
        y = 1.0 + 2.0 * X[:, 0] - 0.5 * X[:, 1] + rng.normal(0, 0.3, 40)
        mine = ols_fit(X, y, terms=("intercept", "x0", "x1"))
        ref = ss.linregress(X[:, 0], y)  # sanity only on slope sign
        assert np.sign(mine.coefficient("x0")) == np.sign(ref.slope)
        # full check against the closed form
        design = np.column_stack([np.ones(40), X])
        beta_ref = np.linalg.lstsq(design, y, rcond=None)[0]
        assert mine.coefficients == pytest.approx(beta_ref, rel=1e-9)
        dof = 40 - 3
        sigma2 = float(((y - design @ beta_ref) ** 2).sum()) / dof
        se_ref = np.sqrt(sigma2 * np.diag(np.linalg.inv(design.T @ design)))
        assert mine.std_errors == pytest.approx(se_ref, rel=1e-8)
        p_ref = 2 * ss.t.sf(np.abs(beta_ref / se_ref), dof)
        assert mine.p_values == pytest.approx(p_ref, abs=1e-9)

    def test_campaign_round_trip_within_ci(self, catalog):
        # A fixed seed where all four CIs cover (any single seed has ~5%
        # miss probability per coefficient; coverage rates are asserted
        # over 100 seeds in the acceptance suite).
        from metrotwin.campaign import build_design, generate_campaign
        records = generate_campaign(build_design(catalog, seed=0), seed=0)
        X, y = regression_design(records)
        result = ols_fit(X, y)
        for term, true in zip(result.terms, TRUE_BETA):
            lo, hi = result.ci95(term)
            assert lo <= true <= hi, f"{term}: {true} outside [{lo}, {hi}]"

    def test_insufficient_rows(self):
        X, y = _noiseless_design(n=5)
        with pytest.raises(InsufficientDataError):
            ols_fit(X, y)


class TestRegressionDesign:
    def test_angle_records_excluded(self, campaign_records):
        import dataclasses
        tagged = [
            dataclasses.replace(campaign_records[0],
                                record_id="angle-1",
                                extra={"feature_kind": "Angle"}),
            *campaign_records,
        ]
        X, y = regression_design(tagged)
        assert len(y) == len(campaign_records)

    def test_device_coding(self, campaign_records):
        X, _ = regression_design(campaign_records)
        assert set(np.unique(X[:, 1])) == {0.0, 1.0}
