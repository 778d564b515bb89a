"""
CSV panel files.

Reads the FRED-MD monthly layout (a ``sasdate`` column followed by one column
per series, with an optional ``Transform:`` row of codes under the header).
Panels produced here (transformed or simulated) are written as plain CSV with
ISO ``YYYY-MM`` dates and no code row, which the same reader loads back.
"""

from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from app.domain.entities import LOG_COLUMNS, ForecastLog, Panel, TransformCode
from app.domain.exceptions import PanelFormatError
from app.domain.panel import check_gaps
from app.domain.ports import PanelSource

logger = logging.getLogger(__name__)

TRANSFORM_LABEL = "Transform:"


def _parse_dates(cells: pd.Series) -> pd.PeriodIndex:
    text = cells.str.strip()
    if text.str.fullmatch(r"\d{4}-\d{2}").all():
        return pd.PeriodIndex(text.tolist(), freq="M")
    return pd.PeriodIndex(pd.to_datetime(text, format="mixed"), freq="M")


class CsvPanelSource(PanelSource):
    def load(self, path: str, remap: Optional[dict[str, int]] = None) -> Panel:
        file_path = Path(path)
        if not file_path.exists():
            raise PanelFormatError(f"Panel file not found: {file_path}")
        try:
            frame = pd.read_csv(file_path, dtype=str, skip_blank_lines=True)
        except (OSError, pd.errors.ParserError, UnicodeDecodeError) as e:
            raise PanelFormatError(f"Failed to parse {file_path}: {e}")
        return self.parse(frame, str(file_path), remap)

    def parse(self, frame: pd.DataFrame, source: str = "<frame>", remap: Optional[dict[str, int]] = None) -> Panel:
        """Panel from raw CSV cells.

        Trailing rows with any blank cell are dropped (the last release month
        is often incomplete). Leading blanks stay missing. A blank after a
        series' first observation raises ``MissingDataError``: gapped series
        must be removed from the file before loading.
        """
        if frame.shape[1] < 2:
            raise PanelFormatError(f"{source}: need a date column and at least one series")
        date_col = frame.columns[0]
        names = [str(c).strip() for c in frame.columns[1:]]

        codes = [TransformCode.LEVEL] * len(names)
        first_cell = str(frame.iloc[0, 0]).strip() if len(frame) else ""
        if first_cell.lower().startswith(TRANSFORM_LABEL.lower().rstrip(":")):
            try:
                codes = [TransformCode(int(float(c))) for c in frame.iloc[0, 1:]]
            except (TypeError, ValueError) as e:
                raise PanelFormatError(f"{source}: invalid transform codes: {e}")
            frame = frame.iloc[1:]

        frame = frame[frame[date_col].notna() & (frame[date_col].str.strip() != "")]
        try:
            dates = _parse_dates(frame[date_col])
        except (ValueError, TypeError) as e:
            raise PanelFormatError(f"{source}: unparseable dates: {e}")
        values = frame.iloc[:, 1:].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)

        complete = ~np.isnan(values).any(axis=1)
        if not complete.any():
            raise PanelFormatError(f"{source}: no complete rows")
        last_complete = int(np.flatnonzero(complete)[-1])
        if last_complete < len(values) - 1:
            logger.warning(
                "%s: dropping %d trailing rows with missing values (last complete %s)",
                source, len(values) - 1 - last_complete, dates[last_complete],
            )
            values, dates = values[: last_complete + 1], dates[: last_complete + 1]

        for i, name in enumerate(names):
            check_gaps(values[:, i], name)

        try:
            panel = Panel(values=values, dates=dates, names=tuple(names), codes=tuple(codes))
        except ValueError as e:
            raise PanelFormatError(f"{source}: {e}")
        if remap:
            overrides = {name: TransformCode(int(code)) for name, code in remap.items()}
            new_codes = list(panel.codes)
            for name, code in overrides.items():
                new_codes[panel.index_of(name)] = code
            panel = panel.with_codes(new_codes)
        logger.info("Loaded %s: %d periods x %d series", source, panel.n_periods, panel.n_series)
        return panel

    def render(self, panel: Panel) -> str:
        return panel_to_csv(panel, with_codes=False, iso_dates=True)

    def load_log(self, path: str, benchmark: str = "ar") -> ForecastLog:
        return read_forecast_log(path, benchmark)


def _cell(value: float) -> str:
    return "" if np.isnan(value) else repr(float(value))


def panel_to_csv(panel: Panel, with_codes: bool = True, iso_dates: bool = False) -> str:
    """CSV text for ``panel`` at full precision; missing cells are empty.

    The defaults give the FRED-MD layout (``sasdate`` header, code row,
    ``M/D/YYYY`` dates); ``with_codes=False, iso_dates=True`` gives the plain
    layout with a ``date`` column of ``YYYY-MM`` periods.
    """
    buffer = io.StringIO()
    rows = [["date" if iso_dates else "sasdate", *panel.names]]
    if with_codes:
        rows.append([TRANSFORM_LABEL, *[str(int(c)) for c in panel.codes]])
    for date, row in zip(panel.dates, panel.values):
        if iso_dates:
            stamp = str(date)
        else:
            ts = date.to_timestamp()
            stamp = f"{ts.month}/{ts.day}/{ts.year}"
        rows.append([stamp, *[_cell(v) for v in row]])
    buffer.write("\n".join(",".join(r) for r in rows) + "\n")
    return buffer.getvalue()


def read_forecast_log(path: str, benchmark: str = "ar") -> ForecastLog:
    """Forecast log written by the ``forecast`` command."""
    file_path = Path(path)
    if not file_path.exists():
        raise PanelFormatError(f"Forecast log not found: {file_path}")
    try:
        frame = pd.read_csv(file_path)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise PanelFormatError(f"Failed to parse {file_path}: {e}")
    missing = [c for c in LOG_COLUMNS[:6] if c not in frame.columns]
    if missing:
        raise PanelFormatError(f"{file_path}: missing log columns {', '.join(missing)}")
    try:
        return ForecastLog.from_frame(frame, benchmark=benchmark)
    except (KeyError, TypeError, ValueError) as e:
        raise PanelFormatError(f"{file_path}: {e}")
