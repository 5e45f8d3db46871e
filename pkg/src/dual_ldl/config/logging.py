"""structlog configuration for JSON-structured logging.

In development: colourised, human-readable output on stderr.
With LOG_FORMAT=json: one JSON object per event, suitable for log shipping.
"""

from __future__ import annotations

import logging
import os
import sys
from logging.handlers import RotatingFileHandler

import structlog

from dual_ldl.config.settings import settings


def configure_logging(output_dir: str | None = None, level: str | None = None) -> None:
    # Configure structlog processors and the stdlib logging bridge.
    shared_processors: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
    ]

    if settings.log_format == "json":
        processors = shared_processors + [
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(),
        ]
    else:
        processors = shared_processors + [
            structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()),
        ]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(logging.DEBUG),
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, (level or settings.log_level).upper(), logging.INFO))
    handlers: list[logging.Handler] = [console_handler]

    # Log files stay inside the run's output directory.
    if settings.log_file:
        log_dir = output_dir or settings.output_dir
        os.makedirs(log_dir, exist_ok=True)
        file_handler = RotatingFileHandler(
            os.path.join(log_dir, "dual_ldl.log"), maxBytes=5_000_000, backupCount=3
        )
        file_handler.setLevel(logging.DEBUG)
        handlers.append(file_handler)

    logging.basicConfig(
        format="%(message)s",
        level=logging.DEBUG,
        handlers=handlers,
        force=True,
    )
