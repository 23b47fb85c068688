"""Structured logging for fairrank.

Loggers obtained through :func:`get_logger` accept keyword fields::

    logger.info("GMRES converged", cycles=3, residual=4.1e-11)

The fields travel on the record as ``extra_data`` and are rendered either as
``key=value`` pairs or as a nested JSON object, depending on LOG_FORMAT.
"""

import json
import logging
import os
import sys
from datetime import datetime, timezone
from typing import Any

import numpy as np

LOG_LEVEL_ENV = "LOG_LEVEL"
LOG_FORMAT_ENV = "LOG_FORMAT"

VALID_LOG_LEVELS = {
    name: getattr(logging, name) for name in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
}

LOG_FORMAT_TEXT = "text"
LOG_FORMAT_JSON = "json"


class _NumpyEncoder(json.JSONEncoder):
    """Encode numpy scalars, arrays and sets found in structured fields."""

    def default(self, o: Any) -> Any:
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (set, frozenset)):
            return sorted(o, key=str)
        return str(o)


def _render(value: Any) -> str:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6, threshold=8)
    return str(value)


class StructuredJsonFormatter(logging.Formatter):
    """One JSON object per record; DEBUG records also carry their source location."""

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        fields = getattr(record, "extra_data", None)
        if fields:
            payload["extra"] = fields
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        if record.levelno <= logging.DEBUG:
            payload["source"] = {
                "file": record.filename,
                "line": record.lineno,
                "function": record.funcName,
            }
        return json.dumps(payload, cls=_NumpyEncoder, ensure_ascii=False)


class StructuredTextFormatter(logging.Formatter):
    """Human-readable lines with structured fields after a ``|`` separator."""

    def __init__(self) -> None:
        super().__init__(
            fmt="%(asctime)s %(levelname)-8s %(name)s: %(message)s",
            datefmt="%H:%M:%S",
        )

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        fields = getattr(record, "extra_data", None)
        if not fields:
            return line
        return line + " | " + " ".join(f"{k}={_render(v)}" for k, v in fields.items())


class StructuredLogger(logging.Logger):
    """Logger whose level methods take arbitrary keyword fields.

    The stdlib level methods forward unknown keywords to ``_log``; this class
    collects them (together with any ``extra`` mapping) into ``extra_data``.
    """

    def _log(  # type: ignore[override]
        self,
        level: int,
        msg: object,
        args: Any,
        exc_info: Any = None,
        extra: dict[str, Any] | None = None,
        stack_info: bool = False,
        stacklevel: int = 1,
        **fields: Any,
    ) -> None:
        data = {**(extra or {}), **fields}
        super()._log(
            level,
            msg,
            args,
            exc_info=exc_info,
            extra={"extra_data": data} if data else None,
            stack_info=stack_info,
            stacklevel=stacklevel + 1,
        )


# Module loggers are created at import time, before setup_logging() runs.
logging.setLoggerClass(StructuredLogger)


def get_log_level() -> int:
    """Level named by LOG_LEVEL (case-insensitive); unknown names mean INFO."""
    return VALID_LOG_LEVELS.get(os.getenv(LOG_LEVEL_ENV, "INFO").upper(), logging.INFO)


def get_log_format() -> str:
    """Formatter named by LOG_FORMAT; anything but ``json`` means text."""
    name = os.getenv(LOG_FORMAT_ENV, LOG_FORMAT_TEXT).lower()
    return LOG_FORMAT_JSON if name == LOG_FORMAT_JSON else LOG_FORMAT_TEXT


def setup_logging(level: int | None = None) -> None:
    """Route all records to a single stderr handler.

    stdout is reserved for command output, so logs never mix with it.

    Args:
        level: Explicit level overriding LOG_LEVEL (used by ``--verbose``).
    """
    logging.setLoggerClass(StructuredLogger)
    log_level = get_log_level() if level is None else level
    log_format = get_log_format()

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(
        StructuredJsonFormatter() if log_format == LOG_FORMAT_JSON else StructuredTextFormatter()
    )
    logging.basicConfig(level=log_level, handlers=[handler], force=True)

    get_logger(__name__).debug(
        "Logging configured", log_level=logging.getLevelName(log_level), log_format=log_format
    )


def get_logger(name: str) -> StructuredLogger:
    """Return the structured logger for ``name`` (usually ``__name__``)."""
    return logging.getLogger(name)  # type: ignore[return-value]
