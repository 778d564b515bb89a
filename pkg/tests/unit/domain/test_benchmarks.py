import logging

import numpy as np
import pytest

from app.domain.benchmarks import (
    ArSpec,
    ar_forecast,
    di_forecast,
    direct_fit,
    extract_factors,
    invariant_boost_forecast,
    lambda_max,
    lasso_coordinate_descent,
    lasso_fit,
    lasso_forecast,
    lasso_objective,
    lasso_path,
    pca_factors,
    rolling_bandwidth,
    soft_threshold,
)
from app.domain.boost import BoostConfig
from app.domain.entities import Design
from app.domain.exceptions import ConvergenceError, InsufficientDataError


@pytest.fixture
def ar1_path():
    """Noiseless y_t = 2 + 0.5 y_{t-1} from y_0 = 10."""
    y = np.empty(25)
    y[0] = 10.0
    for t in range(1, 25):
        y[t] = 2.0 + 0.5 * y[t - 1]
    return y


class TestArSpec:
    def test_rolling_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            ArSpec(order=4, rolling=5)

    def test_window_label(self):
        assert ArSpec().window == "expanding"
        assert ArSpec(order=2, rolling=60).window == "rolling(60)"


class TestDirectAr:
    def test_one_step_noiseless(self, ar1_path):
        assert ar_forecast(ar1_path, ArSpec(order=1), h=1) == pytest.approx(2.0 + 0.5 * ar1_path[-1])

    def test_two_step_noiseless(self, ar1_path):
        assert ar_forecast(ar1_path, ArSpec(order=1), h=2) == pytest.approx(3.0 + 0.25 * ar1_path[-1])

    def test_rolling_uses_tail(self, ar1_path):
        fit = direct_fit(ar1_path, 1, 1, rolling=8)
        assert fit.n_rows == 8
        assert fit.prediction == pytest.approx(2.0 + 0.5 * ar1_path[-1])

    def test_separate_lag_source(self, ar1_path):
        y = 3.0 * ar1_path
        prediction = ar_forecast(y, ArSpec(order=1), h=1, lag_source=ar1_path)
        assert prediction == pytest.approx(3.0 * (2.0 + 0.5 * ar1_path[-1]))

    def test_singular_falls_back_to_mean(self, caplog):
        y = np.full(30, 2.5)
        with caplog.at_level(logging.WARNING, logger="app"):
            fit = direct_fit(y, 1, 2)
        assert fit.singular
        assert fit.prediction == 2.5
        assert "window mean" in caplog.text

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            direct_fit(np.arange(5.0), 1, 4)


class TestDiffusionIndex:
    def test_no_factors_is_ar(self, rng):
        y = rng.standard_normal(120).cumsum() * 0.1
        empty = np.empty((120, 0))
        assert di_forecast(y, empty, h=3, own_lags=4) == pytest.approx(ar_forecast(y, ArSpec(order=4), h=3))

    def test_exact_factor_relation(self, rng):
        T = 100
        f = rng.standard_normal(T)
        y = np.full(T, np.nan)
        y[1:] = 0.5 + 2.0 * f[:-1]
        prediction = di_forecast(y, f[:, None], h=1, own_lags=0)
        assert prediction == pytest.approx(0.5 + 2.0 * f[-1])

    def test_factor_lags(self, factor_panel):
        padded, factors = extract_factors(factor_panel, 2)
        y = np.diff(np.log(factor_panel.column("y")), prepend=np.nan) * 1200.0
        prediction = di_forecast(y, padded, h=1, own_lags=2, factor_lags=1)
        assert np.isfinite(prediction)


class TestPca:
    def test_rank_one_panel(self, rng, caplog):
        f = rng.standard_normal(40)
        loading = np.array([1.0, -2.0, 0.5, 3.0])
        X = np.outer(f, loading)
        with caplog.at_level(logging.WARNING, logger="app"):
            factors = pca_factors(X, 2)
        assert factors.k == 1
        np.testing.assert_allclose(factors.reconstruct(), X, atol=1e-10)
        assert factors.explained[0] == pytest.approx(1.0)
        assert "rank 1" in caplog.text

    def test_sign_convention(self, rng):
        X = rng.standard_normal((50, 5))
        loadings = pca_factors(X, 3).loadings
        top = loadings[np.argmax(np.abs(loadings), axis=0), np.arange(3)]
        assert (top > 0).all()

    def test_scores_orthogonal(self, rng):
        X = rng.standard_normal((60, 6))
        scores = pca_factors(X - X.mean(axis=0), 3).scores
        gram = scores.T @ scores
        np.testing.assert_allclose(gram - np.diag(np.diag(gram)), 0.0, atol=1e-9)

    def test_extract_pads_leading_rows(self, factor_panel):
        padded, factors = extract_factors(factor_panel, 2)
        assert padded.shape == (factor_panel.n_periods, 2)
        assert np.isnan(padded[0]).all()
        assert np.isfinite(padded[-1]).all()
        assert factors.eigenvalues[0] >= factors.eigenvalues[1]


class TestLasso:
    def test_soft_threshold(self):
        np.testing.assert_allclose(soft_threshold(np.array([-3.0, 0.5, 2.0]), 1.0), [-2.0, 0.0, 1.0])

    def test_orthogonal_design_closed_form(self, rng):
        n, q = 50, 5
        Q, _ = np.linalg.qr(rng.standard_normal((n, q)))
        X = Q * np.sqrt(n)
        y = X @ np.array([2.0, -1.0, 0.3, 0.0, 0.0]) + 0.1 * rng.standard_normal(n)
        beta = lasso_coordinate_descent(X, y, 0.5)
        np.testing.assert_allclose(beta, soft_threshold(X.T @ y / n, 0.5), atol=1e-10)

    def test_kkt_conditions(self, rng):
        X = rng.standard_normal((80, 10))
        X[:, 1] += 0.8 * X[:, 0]
        y = X[:, 0] - 2.0 * X[:, 3] + 0.5 * rng.standard_normal(80)
        Xc, yc = X - X.mean(axis=0), y - y.mean()
        lam = 0.1
        beta = lasso_coordinate_descent(Xc, yc, lam, tol=1e-12)
        grad = Xc.T @ (yc - Xc @ beta) / 80
        active = beta != 0
        np.testing.assert_allclose(grad[active], lam * np.sign(beta[active]), atol=1e-8)
        assert (np.abs(grad[~active]) <= lam + 1e-8).all()

    def test_lambda_max_zero_solution(self, rng):
        X = rng.standard_normal((40, 4))
        y = X[:, 0] + rng.standard_normal(40)
        Xc, yc = X - X.mean(axis=0), y - y.mean()
        top = lambda_max(Xc, yc)
        assert not lasso_coordinate_descent(Xc, yc, 1.000001 * top).any()
        assert lasso_coordinate_descent(Xc, yc, 0.9 * top).any()

    def test_path_matches_cold_start(self, rng):
        X = rng.standard_normal((60, 5))
        y = X @ np.array([1.0, 0.0, -1.0, 0.5, 0.0]) + 0.3 * rng.standard_normal(60)
        lambdas = np.array([0.05, 0.4, 0.1])
        coefs = lasso_path(X, y, lambdas)
        for lam, coef in zip(lambdas, coefs):
            cold = lasso_coordinate_descent(X, y, lam, tol=1e-10)
            assert lasso_objective(coef, X, y, lam) == pytest.approx(lasso_objective(cold, X, y, lam), abs=1e-7)

    def test_bic_fit_finds_support(self, rng):
        X = rng.standard_normal((150, 12))
        y = 1.0 + 3.0 * X[:, 2] - 2.0 * X[:, 7] + 0.5 * rng.standard_normal(150)
        fit = lasso_fit(X, y)
        assert {2, 7} <= set(fit.active.tolist())
        assert fit.lambdas.size == 100
        assert fit.lambdas[-1] == pytest.approx(fit.lambdas[0] * 1e-3)
        assert fit.predict(np.zeros(12)) == pytest.approx(1.0, abs=0.3)

    def test_non_convergence(self, rng):
        x = rng.standard_normal(30)
        X = np.column_stack([x, x + 1e-3 * rng.standard_normal(30)])
        with pytest.raises(ConvergenceError, match="1 sweeps"):
            lasso_coordinate_descent(X, 2.0 * x, 1e-4, tol=1e-14, max_sweeps=1)

    def test_forecast_on_design(self, random_design):
        assert np.isfinite(lasso_forecast(random_design))


class TestInvariantBoosting:
    def test_rolling_bandwidth(self):
        assert rolling_bandwidth(21, 101) == pytest.approx(21 / 101)
        assert rolling_bandwidth(100, 100) == 1.0
        assert rolling_bandwidth(500, 100) == 1.0
        with pytest.raises(ValueError):
            rolling_bandwidth(0, 10)

    def test_rolling_window_rows(self, rng):
        design = Design.from_arrays(rng.standard_normal((101, 3)), rng.standard_normal(101), forecast_row=np.zeros(3))
        config = BoostConfig(max_iter=10, stopping="fixed")
        _, fit = invariant_boost_forecast(design, config, rolling_bandwidth(21, 101))
        assert int((fit.weights > 0).sum()) == 21

    def test_full_sample_flat_weights(self, random_design):
        _, fit = invariant_boost_forecast(random_design, BoostConfig(max_iter=10, stopping="fixed"))
        np.testing.assert_allclose(fit.weights, 1.0 / random_design.n)
