import importlib
import os
from types import ModuleType

SETTINGS_ENV = "TVBOOST_SETTINGS_MODULE"
DEFAULT_SETTINGS = "config.settings"


def get_settings() -> ModuleType:
    """Active settings module, chosen by ``TVBOOST_SETTINGS_MODULE``."""
    return importlib.import_module(os.environ.get(SETTINGS_ENV, DEFAULT_SETTINGS))
