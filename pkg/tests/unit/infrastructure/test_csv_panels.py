import logging

import numpy as np
import pandas as pd
import pytest

from app.domain.entities import ForecastLog, ForecastRecord, TransformCode
from app.domain.exceptions import MissingDataError, PanelFormatError, UnknownSeriesError
from app.domain.panel import transform_panel
from app.infrastructure.panels.csv import CsvPanelSource, panel_to_csv, read_forecast_log

FREDMD_TEXT = """sasdate,RPI,INDPRO,UNRATE
Transform:,5,5,2
1/1/1959,2437.296,21.9616,5.8
2/1/1959,2446.902,22.3917,5.1
3/1/1959,2462.689,22.7142,5.3
4/1/1959,2478.744,23.1981,
"""


@pytest.fixture
def source():
    return CsvPanelSource()


@pytest.fixture
def fredmd_file(tmp_path):
    path = tmp_path / "current.csv"
    path.write_text(FREDMD_TEXT)
    return path


class TestCsvPanelSource:
    def test_reads_codes_and_dates(self, source, fredmd_file):
        panel = source.load(str(fredmd_file))
        assert panel.names == ("RPI", "INDPRO", "UNRATE")
        assert panel.codes == (TransformCode.DIFF_LOG, TransformCode.DIFF_LOG, TransformCode.DIFF)
        assert str(panel.dates[0]) == "1959-01"

    def test_trailing_incomplete_row_trimmed(self, source, fredmd_file, caplog):
        with caplog.at_level(logging.WARNING, logger="app"):
            panel = source.load(str(fredmd_file))
        assert panel.n_periods == 3
        assert str(panel.last_date) == "1959-03"
        assert "trailing rows" in caplog.text

    def test_interior_gap_is_an_error(self, source, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text(
            "sasdate,A,B\nTransform:,1,1\n1/1/2000,1,1\n2/1/2000,,2\n3/1/2000,3,3\n4/1/2000,4,4\n"
        )
        with pytest.raises(MissingDataError) as exc:
            source.load(str(path))
        assert exc.value.name == "A"
        assert exc.value.row == 1

    def test_gap_after_leading_blanks(self, source, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text("sasdate,A,B\n1/1/2000,,1\n2/1/2000,2,2\n3/1/2000,3,\n4/1/2000,4,4\n")
        with pytest.raises(MissingDataError, match="series B at row 2"):
            source.load(str(path))

    def test_leading_gaps_kept(self, source, tmp_path):
        path = tmp_path / "lead.csv"
        path.write_text("sasdate,A,B\n1/1/2000,,1\n2/1/2000,2,2\n3/1/2000,3,3\n")
        panel = source.load(str(path))
        assert panel.names == ("A", "B")
        assert np.isnan(panel.values[0, 0])
        assert panel.codes == (TransformCode.LEVEL, TransformCode.LEVEL)

    def test_remap_overrides_code(self, source, fredmd_file):
        panel = source.load(str(fredmd_file), remap={"UNRATE": 1})
        assert panel.code_of("UNRATE") is TransformCode.LEVEL

    def test_remap_unknown_series(self, source, fredmd_file):
        with pytest.raises(UnknownSeriesError):
            source.load(str(fredmd_file), remap={"GDP": 5})

    def test_missing_file_names_path(self, source, tmp_path):
        missing = tmp_path / "nope.csv"
        with pytest.raises(PanelFormatError, match="nope.csv"):
            source.load(str(missing))

    def test_bad_transform_code(self, source, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("sasdate,A\nTransform:,9\n1/1/2000,1\n2/1/2000,2\n")
        with pytest.raises(PanelFormatError, match="transform codes"):
            source.load(str(path))

    def test_render_is_plain_iso(self, source, fredmd_file):
        panel = source.load(str(fredmd_file))
        lines = source.render(panel).splitlines()
        assert lines[0] == "date,RPI,INDPRO,UNRATE"
        assert lines[1].startswith("1959-01,2437.296,")
        assert len(lines) == panel.n_periods + 1

    def test_render_round_trip(self, source, fredmd_file, tmp_path):
        panel = source.load(str(fredmd_file))
        copy = tmp_path / "copy.csv"
        copy.write_text(source.render(panel))
        again = source.load(str(copy))
        assert again.names == panel.names
        assert again.codes == (TransformCode.LEVEL,) * 3
        assert again.dates.equals(panel.dates)
        np.testing.assert_allclose(again.values, panel.values, rtol=1e-15, atol=0)

    def test_transformed_panel_round_trip(self, source, factor_panel, tmp_path):
        stationary = transform_panel(factor_panel)
        path = tmp_path / "transformed.csv"
        path.write_text(source.render(stationary))
        again = source.load(str(path))
        assert again.names == stationary.names
        assert again.dates.equals(stationary.dates)
        np.testing.assert_array_equal(np.isnan(again.values), np.isnan(stationary.values))
        np.testing.assert_allclose(again.values, stationary.values, rtol=1e-15, atol=0)


class TestPanelToCsv:
    def test_missing_cells_empty(self, level_panel):
        values = np.array(level_panel.values)
        values[0, 1] = np.nan
        panel = type(level_panel)(values=values, dates=level_panel.dates, names=level_panel.names)
        lines = panel_to_csv(panel).splitlines()
        assert lines[0] == "sasdate,y,x1,x2,x3"
        assert lines[1].startswith("Transform:,1,1")
        assert lines[2].split(",")[2] == ""

    def test_without_codes(self, level_panel):
        lines = panel_to_csv(level_panel, with_codes=False).splitlines()
        assert lines[1].startswith("1/1/1990")

    def test_iso_dates(self, level_panel):
        lines = panel_to_csv(level_panel, with_codes=False, iso_dates=True).splitlines()
        assert lines[0] == "date,y,x1,x2,x3"
        assert lines[1].startswith("1990-01,")
        assert lines[2].startswith("1990-02,")


class TestReadForecastLog:
    def test_round_trip(self, tmp_path):
        log = ForecastLog(
            records=(
                ForecastRecord(pd.Period("2000-01", "M"), "y", "ar", 1, 0.5, 1.0),
                ForecastRecord(pd.Period("2000-01", "M"), "y", "boost", 1, 0.7, 1.0, bandwidth=0.4, stopping_iteration=12),
            )
        )
        path = tmp_path / "log.csv"
        log.to_frame().to_csv(path, index=False)
        again = read_forecast_log(str(path))
        assert len(again) == 2
        assert again.bandwidths("boost").iloc[0] == pytest.approx(0.4)
        assert again.records[0].bandwidth is None

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("date,method\n2000-01,ar\n")
        with pytest.raises(PanelFormatError, match="missing log columns"):
            read_forecast_log(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(PanelFormatError, match="not found"):
            read_forecast_log(str(tmp_path / "none.csv"))
