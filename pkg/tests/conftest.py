import logging
import os

os.environ["TVBOOST_SETTINGS_MODULE"] = "config.settings_test"

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import pytest  # noqa: E402

from app.domain.entities import Design, Panel, TransformCode  # noqa: E402
from app.domain.simlab import replication_rng, simulate_factor_panel  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20181)


@pytest.fixture
def random_design(rng):
    """80 x 6 design whose response loads on columns 1 and 4."""
    X = rng.standard_normal((80, 6))
    y = 1.5 * X[:, 1] - 0.8 * X[:, 4] + 0.3 * rng.standard_normal(80)
    return Design.from_arrays(X, y, forecast_row=rng.standard_normal(6))


@pytest.fixture
def level_panel(rng):
    """Stationary panel at level code: target ``y`` plus three predictors."""
    T = 90
    x = rng.standard_normal((T, 3))
    y = np.zeros(T)
    for t in range(1, T):
        y[t] = 0.5 * y[t - 1] + 0.8 * x[t - 1, 0] + 0.2 * rng.standard_normal()
    return Panel(
        values=np.column_stack([y, x]),
        dates=pd.period_range("1990-01", periods=T, freq="M"),
        names=("y", "x1", "x2", "x3"),
        codes=(TransformCode.LEVEL,) * 4,
    )


@pytest.fixture
def factor_panel():
    """Raw-level FRED-MD style panel with a time-varying factor target."""
    return simulate_factor_panel(T=150, n_series=8, k=2, rng=replication_rng(7, 0))


@pytest.fixture(autouse=True)
def app_logs_propagate():
    """CLI runs install the console config; caplog needs records to reach the root."""
    logger = logging.getLogger("app")
    logger.propagate = True
    yield
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True
