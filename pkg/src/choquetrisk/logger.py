"""Package logger. Diagnostics go to stderr; stdout carries CLI data only."""

import logging
import sys
import time
from collections.abc import Iterator
from contextlib import contextmanager

LOGGER_NAME = "choquetrisk"

_logger: logging.Logger | None = None
_debug_enabled: bool = False


class _StderrHandler(logging.StreamHandler):  # type: ignore[type-arg]
    """Writes to whatever ``sys.stderr`` is at emit time (redirects, capture)."""

    def __init__(self) -> None:
        super().__init__(sys.stderr)

    @property  # type: ignore[override]
    def stream(self):  # type: ignore[no-untyped-def]
        return sys.stderr

    @stream.setter
    def stream(self, _value: object) -> None:
        pass


def get_logger() -> logging.Logger:
    global _logger
    if _logger is None:
        _logger = logging.getLogger(LOGGER_NAME)
        _logger.setLevel(logging.WARNING)
        _logger.propagate = False
        if not _logger.handlers:
            handler = _StderrHandler()
            handler.setLevel(logging.DEBUG)
            handler.setFormatter(
                logging.Formatter("%(name)s %(levelname)s %(module)s: %(message)s")
            )
            _logger.addHandler(handler)
    return _logger


def enable_debug() -> None:
    global _debug_enabled
    _debug_enabled = True
    get_logger().setLevel(logging.DEBUG)


def disable_debug() -> None:
    global _debug_enabled
    _debug_enabled = False
    get_logger().setLevel(logging.WARNING)


def is_debug_enabled() -> bool:
    return _debug_enabled


def log_debug(message: str, *args: object) -> None:
    """No-op unless debug is enabled."""
    if _debug_enabled:
        get_logger().debug(message, *args)


def log_info(message: str, *args: object) -> None:
    get_logger().info(message, *args)


def log_warning(message: str, *args: object) -> None:
    get_logger().warning(message, *args)


def log_error(message: str, *args: object) -> None:
    get_logger().error(message, *args)


@contextmanager
def timed(operation: str) -> Iterator[None]:
    """Log the wall time of the enclosed block at debug level."""
    if not _debug_enabled:
        yield
        return
    start = time.perf_counter()
    try:
        yield
    finally:
        log_debug("%s took %.3f s", operation, time.perf_counter() - start)
