import logging
import sys

import structlog
from core.config import core_settings


def configure_logging(level: str, *, json_output: bool = False) -> None:
    renderer = (
        structlog.processors.JSONRenderer()
        if json_output
        else structlog.dev.ConsoleRenderer(
            exception_formatter=structlog.dev.rich_traceback,
        )
    )
    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
    ]
    if json_output:
        processors.append(structlog.processors.format_exc_info)
    processors.append(renderer)
    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.getLevelNamesMapping().get(level.upper(), logging.INFO),
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def register_logger() -> structlog.typing.FilteringBoundLogger:
    configure_logging(
        core_settings.LOG_LEVEL,
        json_output=core_settings.LOG_JSON,
    )
    return structlog.get_logger("prm_tree")


logger = register_logger()
