import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

# Boosting
TVBOOST_NU = float(os.getenv("TVBOOST_NU", "0.1"))
TVBOOST_MAX_ITER = int(os.getenv("TVBOOST_MAX_ITER", "100"))
TVBOOST_HAT_TRACE_CAP = int(os.getenv("TVBOOST_HAT_TRACE_CAP", "3000"))

# Evaluation harness
TVBOOST_INITIAL_WINDOW = int(os.getenv("TVBOOST_INITIAL_WINDOW", "120"))
TVBOOST_LOCAL_DELTA = int(os.getenv("TVBOOST_LOCAL_DELTA", "70"))

# Simulation
TVBOOST_MASTER_SEED = int(os.getenv("TVBOOST_MASTER_SEED", "0"))

# Execution and outputs
TVBOOST_JOBS = int(os.getenv("TVBOOST_JOBS", "1"))
TVBOOST_OUTPUT_DIR = Path(os.getenv("TVBOOST_OUTPUT_DIR", "output"))

TVBOOST_LOG_LEVEL = os.getenv("TVBOOST_LOG_LEVEL", "INFO").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "console": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "console",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "app": {"handlers": ["console"], "level": TVBOOST_LOG_LEVEL, "propagate": False},
    },
}
