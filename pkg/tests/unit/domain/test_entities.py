import numpy as np
import pandas as pd
import pytest

from app.domain.entities import (
    Design,
    DgpSpec,
    EvalWindow,
    ForecastLog,
    ForecastProblem,
    ForecastRecord,
    Innovation,
    McResult,
    Panel,
    TargetSpec,
    TransformCode,
    rescaled_times,
)
from app.domain.exceptions import LookAheadError, UnknownSeriesError


def _panel(n=12, start="2000-01"):
    return Panel(
        values=np.arange(2.0 * n).reshape(n, 2),
        dates=pd.period_range(start, periods=n, freq="M"),
        names=("a", "b"),
    )


def _record(date, method, prediction, actual=1.0, target="y", horizon=1, **extra):
    return ForecastRecord(pd.Period(date, "M"), target, method, horizon, prediction, actual, **extra)


class TestTransformCode:
    def test_log_codes(self):
        assert TransformCode.DIFF_LOG.uses_log
        assert not TransformCode.DIFF_RATIO.uses_log
        assert TransformCode.DIFF_RATIO.requires_positive
        assert not TransformCode.DIFF2.requires_positive


class TestPanel:
    def test_defaults_to_level_codes(self):
        panel = _panel()
        assert panel.codes == (TransformCode.LEVEL, TransformCode.LEVEL)
        assert panel.n_periods == 12
        assert panel.n_series == 2

    def test_values_are_read_only(self):
        panel = _panel()
        with pytest.raises(ValueError):
            panel.values[0, 0] = 99.0

    def test_missing_mask_sets_nan(self):
        mask = np.zeros((12, 2), dtype=bool)
        mask[3, 1] = True
        panel = Panel(
            values=np.ones((12, 2)),
            dates=pd.period_range("2000-01", periods=12, freq="M"),
            names=("a", "b"),
            missing=mask,
        )
        assert np.isnan(panel.values[3, 1])
        assert panel.missing[3, 1]

    def test_rejects_uneven_dates(self):
        dates = pd.PeriodIndex([pd.Period("2000-01", "M"), pd.Period("2000-02", "M"), pd.Period("2000-04", "M")])
        with pytest.raises(ValueError, match="evenly spaced"):
            Panel(values=np.ones((3, 1)), dates=dates, names=("a",))

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError, match="unique"):
            Panel(values=np.ones((3, 2)), dates=pd.period_range("2000-01", periods=3, freq="M"), names=("a", "a"))

    def test_unknown_series(self):
        with pytest.raises(UnknownSeriesError, match="Unknown series: c"):
            _panel().column("c")

    def test_position_and_truncate(self):
        panel = _panel()
        assert panel.position("2000-05") == 4
        cut = panel.truncate("2000-05")
        assert cut.n_periods == 5
        assert str(cut.last_date) == "2000-05"

    def test_select_keeps_codes(self):
        panel = _panel().with_codes([TransformCode.DIFF, TransformCode.DIFF_LOG])
        assert panel.select(["b"]).codes == (TransformCode.DIFF_LOG,)

    def test_frame_round_trip(self):
        panel = _panel()
        again = Panel.from_frame(panel.to_frame(), codes=[1, 2])
        np.testing.assert_array_equal(again.values, panel.values)
        assert again.codes == (TransformCode.LEVEL, TransformCode.DIFF)


class TestTargetSpec:
    def test_horizon_must_be_positive(self):
        with pytest.raises(ValueError, match="horizon"):
            TargetSpec("y", horizon=0)

    def test_one_step(self):
        spec = TargetSpec("y", horizon=6, kind="level")
        assert spec.one_step() == TargetSpec("y", horizon=1, kind="level")


class TestDesign:
    def test_from_arrays(self):
        design = Design.from_arrays(np.ones((5, 2)), np.arange(5.0), horizon=2)
        assert design.n == 5
        assert design.q == 2
        np.testing.assert_allclose(design.times, [0.2, 0.4, 0.6, 0.8, 1.0])
        assert (design.dates.asi8 - design.info_dates.asi8 == 2).all()

    def test_rejects_look_ahead(self):
        dates = pd.period_range("2000-02", periods=3, freq="M")
        with pytest.raises(LookAheadError):
            Design(
                response=np.zeros(3),
                regressors=np.ones((3, 1)),
                times=rescaled_times(3),
                dates=dates,
                info_dates=dates,
                columns=(("x", 0),),
                horizon=1,
            )

    def test_rejects_bad_times(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            Design.from_arrays(np.ones((3, 1)), np.zeros(3), times=[0.5, 0.4, 1.0])

    def test_forecast_row_shape(self):
        with pytest.raises(ValueError, match="Forecast row"):
            Design.from_arrays(np.ones((3, 2)), np.zeros(3), forecast_row=np.ones(3))

    def test_rows_and_drop_row(self):
        design = Design.from_arrays(np.arange(10.0).reshape(5, 2), np.arange(5.0))
        head = design.head(3)
        np.testing.assert_allclose(head.times, [1 / 3, 2 / 3, 1.0])
        dropped = design.drop_row(1)
        assert dropped.n == 4
        np.testing.assert_allclose(dropped.times, [0.2, 0.6, 0.8, 1.0])

    def test_select_columns(self):
        design = Design.from_arrays(np.arange(15.0).reshape(5, 3), np.zeros(5), forecast_row=[1.0, 2.0, 3.0])
        picked = design.select_columns([2, 0])
        assert picked.columns == (("x2", 0), ("x0", 0))
        np.testing.assert_allclose(picked.forecast_row, [3.0, 1.0])


class TestForecastProblem:
    def test_cutoff(self):
        panel = _panel()
        problem = ForecastProblem(panel=panel, target=TargetSpec("a", horizon=3), forecast_date="2001-03")
        assert str(problem.cutoff) == "2000-12"

    def test_rejects_information_after_cutoff(self):
        with pytest.raises(LookAheadError):
            ForecastProblem(panel=_panel(), target=TargetSpec("a", horizon=3), forecast_date="2001-02")


class TestForecastLog:
    def test_errors_and_filters(self):
        log = ForecastLog(
            records=(
                _record("2000-02", "ar", 0.5),
                _record("2000-01", "ar", 0.0),
                _record("2000-01", "boost", 1.0, bandwidth=0.3),
            )
        )
        assert log.methods == ("ar", "boost")
        errors = log.errors("ar")
        assert list(errors.index.astype(str)) == ["2000-01", "2000-02"]
        np.testing.assert_allclose(errors.values, [1.0, 0.5])
        assert np.isnan(log.bandwidths("ar").iloc[0])

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="more than one record"):
            ForecastLog(records=(_record("2000-01", "ar", 0.0), _record("2000-01", "ar", 1.0)))

    def test_ambiguous_target(self):
        log = ForecastLog(records=(_record("2000-01", "ar", 0.0, target="y"), _record("2000-01", "ar", 0.0, target="z")))
        with pytest.raises(ValueError, match="pass one explicitly"):
            log.errors("ar")
        assert len(log.select(target="z")) == 1

    def test_frame_round_trip(self):
        log = ForecastLog(records=(_record("2000-01", "boost", 0.2, bandwidth=0.5, stopping_iteration=7, sample_size=60),))
        again = ForecastLog.from_frame(log.to_frame())
        assert again.records == log.records


class TestEvalWindow:
    def test_preset(self):
        window = EvalWindow.preset("gm")
        assert str(window.start) == "1983-01"
        assert str(window.end) == "2006-12"

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="Unknown subperiod"):
            EvalWindow.preset("roaring-20s")

    def test_open_range(self):
        window = EvalWindow.parse("2000-03:")
        dates = pd.period_range("2000-01", periods=5, freq="M")
        assert window.mask(dates).tolist() == [False, False, True, True, True]

    def test_reversed_range(self):
        with pytest.raises(ValueError, match="after it ends"):
            EvalWindow(start="2001-01", end="2000-01")


class TestDgpSpec:
    def test_bounds(self):
        with pytest.raises(ValueError, match="1..14"):
            DgpSpec(dgp_id=15)
        with pytest.raises(ValueError, match="T must be"):
            DgpSpec(dgp_id=1, T=20)
        with pytest.raises(ValueError, match="d must be"):
            DgpSpec(dgp_id=1, d=2)

    def test_locally_stationary(self):
        assert DgpSpec(dgp_id=13).locally_stationary
        assert not DgpSpec(dgp_id=9).locally_stationary

    def test_innovation_parse(self):
        assert Innovation.parse("normal") is Innovation.GAUSSIAN
        assert Innovation.parse("t5") is Innovation.T5


class TestMcResult:
    def test_relative_table(self):
        result = McResult(
            dgp_id=9,
            innovation=Innovation.GAUSSIAN,
            methods=("boost", "ar"),
            squared_errors={"boost": [1.0, 3.0], "ar": [2.0, 6.0]},
            replications=3,
            excluded=(1,),
        )
        assert result.retained == 2
        assert result.relative_table() == {"boost": 1.0, "ar": 2.0}

    def test_missing_denominator(self):
        with pytest.raises(ValueError, match="Denominator"):
            McResult(dgp_id=9, innovation=Innovation.GAUSSIAN, methods=("ar",), squared_errors={"ar": []})
