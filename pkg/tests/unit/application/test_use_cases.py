import dataclasses
import json
from unittest.mock import MagicMock

import numpy as np
import pandas as pd
import pytest

from app import __version__
from app.application.methods import SIMULATION, SuiteSettings
from app.application.use_cases import (
    CrossValidateUseCase,
    ForecastUseCase,
    ReportUseCase,
    SimulateUseCase,
    TransformUseCase,
    write_manifest,
)
from app.domain.boost import BoostConfig
from app.domain.entities import ForecastLog, ForecastRecord, TargetKind, TargetSpec
from app.domain.exceptions import ConfigurationError, UnknownSeriesError
from app.domain.kernel import KernelSpec
from app.domain.tune import BandwidthGrid, CvMode, CvSpec
from app.infrastructure.executor import SequentialRunner
from app.infrastructure.storage.local import LocalArtifactStore


@pytest.fixture
def store(tmp_path):
    return LocalArtifactStore(base_dir=tmp_path / "out")


@pytest.fixture
def mock_panel_source(level_panel):
    source = MagicMock()
    source.load.return_value = level_panel
    return source


@pytest.fixture
def settings():
    return SuiteSettings(lags=1, ar_order=2, cv_window=5, grid=BandwidthGrid((0.5, 1.0)), boost=BoostConfig(max_iter=10))


@pytest.fixture
def cv_config():
    return BoostConfig(max_iter=10, stopping="fixed", kernel=KernelSpec("uniform", 1.0, "one-sided-past"))


@pytest.fixture
def report_log():
    dates = pd.period_range("1983-01", periods=6, freq="M")
    records = []
    for i, date in enumerate(dates):
        records.append(ForecastRecord(date, "y", "ar", 1, 0.0, 2.0, sample_size=100 + i))
        records.append(ForecastRecord(date, "y", "boost", 1, 0.0, 1.0, bandwidth=0.5, sample_size=100 + i))
    return ForecastLog(records=tuple(records))


class TestWriteManifest:
    def test_sorted_and_versioned(self, store):
        path = write_manifest(store, "sim", {"b": 1, "a": [2]}, ["z.csv", "a.csv"])
        payload = json.loads(open(path).read())
        assert payload == {"command": "sim", "version": __version__, "config": {"a": [2], "b": 1}, "outputs": ["a.csv", "z.csv"]}

    def test_byte_identical_rerun(self, store):
        write_manifest(store, "cv", {"x": 0.5}, ["s.csv"])
        first = store.read_text("manifest.json")
        write_manifest(store, "cv", {"x": 0.5}, ["s.csv"])
        assert store.read_text("manifest.json") == first

    def test_custom_name(self, store):
        write_manifest(store, "cv", {}, [], name="run1.json")
        assert store.exists("run1.json")


class TestSimulateUseCase:
    def test_table_and_manifest(self, store):
        settings = dataclasses.replace(SIMULATION, boost=BoostConfig(max_iter=10))
        use_case = SimulateUseCase(store=store, runner=SequentialRunner())
        result = use_case.execute(
            dgp_ids=[1], methods=["boost", "bench=ar"], settings=settings, reps=2, seed=3, T=60, d=4
        )
        assert list(result.table.columns) == ["dgp", "boost", "bench", "retained"]
        assert result.table.loc[0, "boost"] == 1.0
        assert result.table.loc[0, "retained"] == 2
        assert result.excluded == {1: 0}
        manifest = json.loads(store.read_text("manifest.json"))
        assert manifest["command"] == "sim"
        assert manifest["config"]["seed"] == 3
        assert manifest["outputs"] == ["sim_table.csv"]
        assert store.read_text("sim_table.csv").startswith("dgp,boost,bench,retained\n")

    def test_unknown_method_fails_fast(self, store):
        runner = MagicMock()
        with pytest.raises(ConfigurationError):
            SimulateUseCase(store, runner).execute([9], ["boost", "svm"], SIMULATION, reps=1, seed=0)
        runner.map.assert_not_called()


class TestForecastUseCase:
    def test_log_written(self, store, mock_panel_source, settings):
        use_case = ForecastUseCase(mock_panel_source, store, SequentialRunner())
        result = use_case.execute(
            data="panel.csv",
            targets={"y": TargetKind.LEVEL},
            horizons=[1],
            methods=["ar", "boost"],
            settings=settings,
            oos_start="1997-01",
        )
        assert len(result.log) == 12
        assert result.log.methods == ("ar", "boost")
        mock_panel_source.load.assert_called_once_with("panel.csv", None)
        frame = pd.read_csv(result.log_path)
        assert list(frame.columns[:6]) == ["date", "target", "method", "horizon", "prediction", "actual"]
        manifest = json.loads(store.read_text("manifest.json"))
        assert manifest["config"]["targets"] == {"y": "level"}

    def test_benchmark_must_be_in_suite(self, store, mock_panel_source, settings):
        use_case = ForecastUseCase(mock_panel_source, store, SequentialRunner())
        with pytest.raises(ConfigurationError, match="Benchmark 'ar'"):
            use_case.execute("panel.csv", {"y": TargetKind.LEVEL}, [1], ["boost"], settings)
        mock_panel_source.load.assert_not_called()

    def test_unknown_target(self, store, mock_panel_source, settings):
        use_case = ForecastUseCase(mock_panel_source, store, SequentialRunner())
        with pytest.raises(UnknownSeriesError):
            use_case.execute("panel.csv", {"GDP": TargetKind.LOG_GROWTH}, [1], ["ar"], settings)


class TestCrossValidateUseCase:
    def test_oos_scores(self, store, mock_panel_source, cv_config):
        use_case = CrossValidateUseCase(mock_panel_source, store, SequentialRunner())
        result = use_case.execute(
            data="panel.csv",
            target=TargetSpec("y", kind=TargetKind.LEVEL),
            config=cv_config,
            grid=BandwidthGrid((0.5, 1.0)),
            spec=CvSpec(window=5),
            lags=1,
        )
        assert result.bandwidth in (0.5, 1.0)
        assert list(result.scores["bandwidth"]) == [0.5, 1.0]
        assert result.scores["chosen"].sum() == 1
        assert store.exists("cv_scores.csv")

    def test_grid_points_go_through_runner(self, store, mock_panel_source, cv_config):
        runner = MagicMock()
        runner.map.return_value = [2.0, 1.0, 1.0]
        use_case = CrossValidateUseCase(mock_panel_source, store, runner)
        result = use_case.execute(
            "panel.csv", TargetSpec("y", kind=TargetKind.LEVEL), cv_config, BandwidthGrid((0.3, 0.6, 0.9)), CvSpec(), lags=1
        )
        tasks = runner.map.call_args[0][1]
        assert [t.bandwidth for t in tasks] == [0.3, 0.6, 0.9]
        assert result.bandwidth == 0.9

    def test_loo_defaults_to_last_row(self, store, mock_panel_source, cv_config):
        runner = MagicMock()
        runner.map.return_value = [1.0]
        use_case = CrossValidateUseCase(mock_panel_source, store, runner)
        use_case.execute(
            "panel.csv",
            TargetSpec("y", kind=TargetKind.LEVEL),
            cv_config,
            BandwidthGrid((0.5,)),
            CvSpec(mode=CvMode.WEIGHTED_LOO),
            lags=1,
        )
        (task,) = runner.map.call_args[0][1]
        assert task.t0 == task.design.n - 1
        np.testing.assert_allclose(task.design.regressors.mean(axis=0), 0.0, atol=1e-10)

    def test_loo_t0_range(self, store, mock_panel_source, cv_config):
        use_case = CrossValidateUseCase(mock_panel_source, store, SequentialRunner())
        with pytest.raises(ConfigurationError, match="--t0"):
            use_case.execute(
                "panel.csv",
                TargetSpec("y", kind=TargetKind.LEVEL),
                cv_config,
                BandwidthGrid((0.5,)),
                CvSpec(mode=CvMode.WEIGHTED_LOO),
                lags=1,
                t0=500,
            )


class TestReportUseCase:
    def test_relmsfe(self, store, report_log):
        result = ReportUseCase(store).execute(report_log, "relmsfe")
        table = result.tables["relmsfe_full_h1"]
        assert table.loc["boost", "y"] == pytest.approx(0.25)
        assert table.loc["ar", "y"] == 1.0
        assert store.exists("relmsfe_full_h1.csv")

    def test_all_windows(self, store, report_log):
        result = ReportUseCase(store).execute(report_log, "relmsfe", windows=("all",))
        assert set(result.tables) == {"relmsfe_full_h1", "relmsfe_pre-gm_h1", "relmsfe_gm_h1", "relmsfe_post-gm_h1"}
        assert np.isnan(result.tables["relmsfe_pre-gm_h1"].loc["boost", "y"])

    def test_bystart(self, store, report_log):
        result = ReportUseCase(store).execute(report_log, "bystart", methods=["boost"])
        table = result.tables["bystart_y_h1"]
        assert table.index[0] == "1983-01"
        np.testing.assert_allclose(table["boost"], 0.25)

    def test_local_versus(self, store, report_log):
        result = ReportUseCase(store).execute(report_log, "local", methods=["boost"], delta=2, versus="ar")
        np.testing.assert_allclose(result.tables["local_y_h1"]["boost"], 0.25)

    def test_lbw_adds_rolling_column(self, store, report_log):
        result = ReportUseCase(store).execute(report_log, "lbw", delta=2, rolling_length=50)
        table = result.tables["lbw_y_h1"]
        assert "boost:rolling" in table.columns
        assert "ar:rolling" not in table.columns
        np.testing.assert_allclose(table["boost"], 0.5)
        np.testing.assert_allclose(table["ar"], 1.0)
        assert table["boost:rolling"].iloc[0] == pytest.approx(0.5)

    def test_window_filters_series(self, store, report_log):
        result = ReportUseCase(store).execute(report_log, "local", windows=("1983-03:1983-04",), delta=1)
        assert list(result.tables["local_y_h1"].index) == ["1983-03", "1983-04"]

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"metric": "dm"}, "Unknown metric"),
            ({"metric": "relmsfe", "methods": ["lasso"]}, "'lasso' has no records"),
            ({"metric": "local", "versus": "di"}, "'di' has no records"),
        ],
    )
    def test_validation(self, store, report_log, kwargs, message):
        with pytest.raises(ConfigurationError, match=message):
            ReportUseCase(store).execute(report_log, **kwargs)

    def test_missing_benchmark(self, store, report_log):
        log = ForecastLog(records=report_log.records, benchmark="rw")
        with pytest.raises(ConfigurationError, match="Benchmark 'rw'"):
            ReportUseCase(store).execute(log, "relmsfe")

    def test_empty_log(self, store):
        with pytest.raises(ConfigurationError, match="empty"):
            ReportUseCase(store).execute(ForecastLog(), "relmsfe")


class TestTransformUseCase:
    def test_renders_transformed_panel(self, store, factor_panel):
        source = MagicMock()
        source.load.return_value = factor_panel
        source.render.return_value = "sasdate,y\n"
        result = TransformUseCase(source, store).execute("raw.csv", remap={"x01": 2}, out="stationary.csv")
        source.load.assert_called_once_with("raw.csv", {"x01": 2})
        rendered = source.render.call_args[0][0]
        assert rendered is result.panel
        assert np.isnan(rendered.values[0, 0])
        assert store.read_text("stationary.csv") == "sasdate,y\n"
        assert json.loads(store.read_text("manifest.json"))["config"]["remap"] == {"x01": 2}
