import itertools

import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given
from hypothesis import strategies as st

from dexfrag.errors import CoverageError, DegenerateVarianceError, ParameterError, SingularDesignError
from dexfrag.regression import (
    OUTCOMES,
    TERMS,
    RegressionData,
    build_design,
    check_coverage,
    format_table,
    ols_fit,
    reproduce_table,
    standardize,
    stars,
    table_rows,
)
from oracles import normal_equations

# hand-computed z-scores of 50..300 step 50: mean 175, sd sqrt(8750/5)
GRID_Z = np.array([-1.33630621, -0.80178373, -0.26726124, 0.26726124, 0.80178373, 1.33630621])
DELAYS = [50.0, 100.0, 150.0, 200.0, 250.0, 300.0]
CLUSTERS = [(5, 5), (6, 4), (7, 3), (8, 2), (9, 1)]


def grid_rows(fn):
    rows = []
    for m, (a, b) in itertools.product(DELAYS, CLUSTERS):
        out = fn(m, a / b)
        rows.append({"eta_a": a, "eta_b": b, "slow_mean_ms": m, **dict(zip(OUTCOMES, out))})
    return rows


class TestStandardize:
    def test_triple(self):
        assert np.allclose(standardize([1, 2, 3]), [-1, 0, 1])

    def test_grid(self):
        assert np.allclose(standardize(DELAYS), GRID_Z, atol=1e-8)

    @given(st.lists(st.floats(-1e4, 1e4), min_size=2, max_size=50))
    def test_moments(self, xs):
        arr = np.array(xs)
        if arr.std() < 1e-3:
            return
        z = standardize(arr)
        assert abs(z.mean()) < 1e-12
        assert abs(z.std(ddof=1) - 1) < 1e-12

    def test_constant(self):
        with pytest.raises(DegenerateVarianceError):
            standardize([4.0, 4.0, 4.0])


class TestDesign:
    def data(self):
        d, a = zip(*[(m, x / y) for m, (x, y) in itertools.product(DELAYS, CLUSTERS)])
        return RegressionData(outcomes=np.zeros(30), delay=np.array(d), asymmetry=np.array(a))

    def test_shape_rank_interaction(self):
        for flag in (True, False):
            X = build_design(self.data(), standardize_delay=flag)
            assert X.shape == (30, 4)
            assert np.linalg.matrix_rank(X) == 4
            assert np.array_equal(X[:, 3], X[:, 1] * X[:, 2])
        assert np.allclose(np.unique(build_design(self.data(), False)[:, 1]), DELAYS)

    def test_data_validation(self):
        with pytest.raises(ParameterError):
            RegressionData(outcomes=np.zeros(4), delay=np.zeros(4), asymmetry=np.zeros(4))
        with pytest.raises(ParameterError):
            RegressionData(outcomes=np.zeros(6), delay=np.zeros(5), asymmetry=np.zeros(6))


class TestOls:
    def test_exact_line(self):
        x = np.linspace(0, 5, 10)
        X = np.column_stack([np.ones(10), x])
        fit = ols_fit(X, 2 + 3 * x)
        assert np.allclose(fit.coefficients, [2, 3], atol=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_normal_equations(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(6, 15))
            X = np.column_stack([np.ones(n), rng.normal(size=(n, 3))])
            y = rng.normal(size=n)
            assert np.max(np.abs(ols_fit(X, y).coefficients - normal_equations(X, y))) < 1e-10

    @pytest.mark.parametrize("cov", ["HC0", "HC1"])
    def test_statsmodels(self, cov):
        rng = np.random.default_rng(1)
        X = np.column_stack([np.ones(40), rng.normal(size=(40, 3))])
        y = X @ [1, 2, -1, 0.5] + rng.normal(size=40) * (1 + np.abs(X[:, 1]))
        ref = sm.OLS(y, X).fit(cov_type=cov)
        fit = ols_fit(X, y, cov)
        assert np.allclose(fit.coefficients, ref.params, atol=1e-10)
        assert np.allclose(fit.robust_se, ref.bse, rtol=1e-8)
        assert np.allclose(fit.z_stats, ref.tvalues, rtol=1e-8)
        assert fit.r_squared == pytest.approx(ref.rsquared, abs=1e-12)

    def test_homoskedastic_close_to_classical(self):
        rng = np.random.default_rng(2)
        X = np.column_stack([np.ones(200), rng.normal(size=(200, 2))])
        y = X @ [1, 1, 1] + rng.normal(size=200)
        classical = sm.OLS(y, X).fit().bse
        assert np.all(np.abs(ols_fit(X, y).robust_se / classical - 1) < 0.25)

    @given(st.integers(0, 2**32 - 1))
    def test_invariants(self, seed):
        rng = np.random.default_rng(seed)
        X = np.column_stack([np.ones(12), rng.normal(size=(12, 3))])
        y = rng.normal(size=12) * 10
        fit = ols_fit(X, y)
        scale = np.abs(X).max() * np.abs(y).max() * 12
        assert np.all(np.abs(X.T @ fit.residuals) < 1e-8 * scale)
        assert np.array_equal(fit.covariance, fit.covariance.T)
        assert np.linalg.eigvalsh(fit.covariance).min() > -1e-10 * np.abs(fit.covariance).max()
        assert np.allclose(fit.z_stats, fit.coefficients / fit.robust_se)
        assert 0 <= fit.r_squared <= 1
        nested = ols_fit(X[:, :3], y)
        assert fit.r_squared >= nested.r_squared - 1e-12
        perm = rng.permutation(12)
        assert np.allclose(ols_fit(X[perm], y[perm]).coefficients, fit.coefficients, atol=1e-9)

    def test_singular(self):
        X = np.column_stack([np.ones(8), np.arange(8.0), 2 * np.arange(8.0)])
        with pytest.raises(SingularDesignError):
            ols_fit(X, np.arange(8.0))
        with pytest.raises(SingularDesignError):
            ols_fit(np.ones((2, 2)), np.ones(2))

    def test_stars(self):
        assert [stars(p) for p in (0.005, 0.03, 0.07, 0.2)] == ["***", "**", "*", ""]


class TestTable:
    def test_coverage_errors(self):
        d, a = zip(*[(m, x / y) for m, (x, y) in itertools.product(DELAYS, CLUSTERS)])
        check_coverage(np.array(d), np.array(a))
        with pytest.raises(CoverageError):
            check_coverage(np.array(d[:-1]), np.array(a[:-1]))
        with pytest.raises(CoverageError):
            check_coverage(np.array(d + d[:1]), np.array(a + a[:1]))
        with pytest.raises(CoverageError):
            reproduce_table([])

    def test_recovers_planted_model(self):
        rng = np.random.default_rng(3)
        z_d = dict(zip(DELAYS, GRID_Z))

        def gen(m, asym):
            return [0.5 + 0.001 * rng.normal(), 0.1, 0.05 + 0.001 * z_d[m], 5 + 2 * asym]

        fits = reproduce_table(grid_rows(gen))
        assert fits["p_cluster_a"].coefficients[0] == pytest.approx(50.0, abs=0.1)
        # Delay is standardized over the 30 rows, whose sd is sqrt(25/29) of the 6-level sd
        assert fits["p_node_b"].coefficients[1] == pytest.approx(0.1 * np.sqrt(25 / 29), abs=1e-9)
        assert fits["ratio_a_over_b"].r_squared == pytest.approx(1.0)
        assert fits["ratio_a_over_b"].coefficients[2] > 0

    def test_drops_non_finite(self, caplog):
        fits = reproduce_table(grid_rows(lambda m, a: [0.5, 0.1, 0.1, np.inf if a == 9 else a + m / 100]))
        assert fits["ratio_a_over_b"].n_obs == 24
        assert "non-finite" in caplog.text

    def test_layout(self):
        rng = np.random.default_rng(4)
        fits = reproduce_table(grid_rows(lambda m, a: rng.random(4)))
        rows = table_rows(fits)
        assert len(rows) == 16
        assert set(rows[0]) == {"outcome", "term", "coefficient", "robust_se", "z", "stars", "r_squared"}
        text = format_table(fits)
        for t in TERMS:
            assert t in text
        assert "R^2" in text
