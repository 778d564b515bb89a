"""Simple dependency injection container."""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Optional

from app.application.methods import PRESETS, SuiteSettings
from app.domain.boost import BoostConfig
from app.domain.exceptions import ConfigurationError
from app.domain.ports import ArtifactStore, PanelSource, TaskRunner
from app.infrastructure.executor import ProcessPoolRunner, SequentialRunner
from app.infrastructure.panels.csv import CsvPanelSource
from app.infrastructure.storage.local import LocalArtifactStore
from config import get_settings


def get_artifact_store(output_dir: Optional[str | Path] = None) -> ArtifactStore:
    settings = get_settings()
    return LocalArtifactStore(output_dir or getattr(settings, "TVBOOST_OUTPUT_DIR", "output"))


def get_panel_source() -> PanelSource:
    return CsvPanelSource()


def get_task_runner(jobs: Optional[int] = None) -> TaskRunner:
    jobs = jobs if jobs is not None else getattr(get_settings(), "TVBOOST_JOBS", 1)
    if jobs < 1:
        raise ConfigurationError(f"--jobs must be >= 1, got {jobs}")
    if jobs == 1:
        return SequentialRunner()
    return ProcessPoolRunner(jobs=jobs)


def get_boost_config(**overrides) -> BoostConfig:
    """Boosting defaults from settings; ``None`` overrides are ignored."""
    settings = get_settings()
    values = {
        "nu": getattr(settings, "TVBOOST_NU", 0.1),
        "max_iter": getattr(settings, "TVBOOST_MAX_ITER", 100),
        "hat_trace_cap": getattr(settings, "TVBOOST_HAT_TRACE_CAP", 3000),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    config = BoostConfig(**values)
    config.validate()
    return config


def get_suite_settings(preset: str = "macro", boost: Optional[BoostConfig] = None, **overrides) -> SuiteSettings:
    if preset not in PRESETS:
        raise ConfigurationError(f"Unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    changes = {k: v for k, v in overrides.items() if v is not None}
    changes["boost"] = boost or get_boost_config()
    try:
        return dataclasses.replace(PRESETS[preset], **changes)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(str(e))
