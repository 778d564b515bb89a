"""``tvboost`` entry point."""

from __future__ import annotations

import copy
import logging
import logging.config
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from dotenv import dotenv_values

from app.domain.exceptions import ConfigurationError, DataError, DomainError, NumericalError
from app.interfaces.cli.commands import COMMANDS
from app.interfaces.cli.parsers import UsageError, build_parser
from config import get_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_TRUE = {"1", "true", "yes", "on"}
BOOLEAN_FLAGS = {"--global"}


def _exit_code(exc: Exception) -> int:
    """Map exceptions to process exit codes."""
    if isinstance(exc, (UsageError, ConfigurationError, ValueError)):
        return EXIT_USAGE
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, (NumericalError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    return EXIT_USAGE


def config_tokens(path: str) -> list[str]:
    """Command-line tokens for a key=value file; placed before the real flags so those win."""
    file_path = Path(path)
    if not file_path.exists():
        raise UsageError(f"Config file not found: {file_path}")
    tokens = []
    for key, value in dotenv_values(file_path).items():
        flag = "--" + key.strip().replace("_", "-")
        value = (value or "").strip()
        if flag in BOOLEAN_FLAGS:
            if value.lower() in _TRUE:
                tokens.append(flag)
            continue
        tokens.extend([flag, value])
    return tokens


def _with_config(argv: list[str]) -> list[str]:
    if not argv or argv[0] not in COMMANDS:
        return argv
    rest = argv[1:]
    for i, token in enumerate(rest):
        if token == "--config" and i + 1 < len(rest):
            return [argv[0], *config_tokens(rest[i + 1]), *rest]
        if token.startswith("--config="):
            return [argv[0], *config_tokens(token.split("=", 1)[1]), *rest]
    return argv


def configure_logging(level: Optional[str] = None) -> None:
    config = copy.deepcopy(get_settings().LOGGING)
    if level:
        config["loggers"]["app"]["level"] = level
    logging.config.dictConfig(config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_with_config(argv))
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        code = _exit_code(e)
        if isinstance(e, (DomainError, UsageError, ValueError, np.linalg.LinAlgError)):
            print(f"error: {e}", file=sys.stderr)
        else:
            logger.exception("Unexpected error")
        return code


if __name__ == "__main__":
    sys.exit(main())
