"""Shared worker pool for fan-out of independent evaluations."""

import atexit
import threading
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from .config import get_config
from .logger import log_debug, log_warning

A = TypeVar("A")
R = TypeVar("R")


class ExecutorManager:
    """Owns one lazily created ``ThreadPoolExecutor`` sized from the config.

    The pool is rebuilt when ``max_workers`` or the thread prefix changed
    since it was created. After ``cleanup`` the manager refuses new work
    until ``reset``.
    """

    def __init__(self) -> None:
        self._executor: ThreadPoolExecutor | None = None
        self._shape: tuple[int, str] | None = None
        self._lock = threading.Lock()
        self._shutdown = False
        if get_config().auto_cleanup:
            atexit.register(self.cleanup)

    def get_executor(self) -> ThreadPoolExecutor:
        if self._shutdown:
            raise RuntimeError("worker pool has been shut down")
        config = get_config()
        shape = (config.max_workers, config.thread_name_prefix)
        with self._lock:
            if self._executor is not None and self._shape != shape:
                log_debug("Worker pool reshaped %r -> %r", self._shape, shape)
                self._executor.shutdown(wait=True)
                self._executor = None
            if self._executor is None:
                self._executor = ThreadPoolExecutor(
                    max_workers=shape[0], thread_name_prefix=shape[1]
                )
                self._shape = shape
                log_debug("Worker pool created: %d workers", shape[0])
            return self._executor

    def cleanup(self) -> None:
        with self._lock:
            if self._shutdown:
                return
            self._shutdown = True
            if self._executor is None:
                return
            try:
                self._executor.shutdown(wait=True, cancel_futures=False)
            except Exception as e:
                log_warning("Worker pool shutdown error: %s", e)
            finally:
                self._executor = None
                self._shape = None

    def reset(self) -> None:
        """Shut down and accept work again (tests)."""
        self.cleanup()
        with self._lock:
            self._shutdown = False


_manager: ExecutorManager | None = None
_manager_lock = threading.Lock()


def get_executor_manager() -> ExecutorManager:
    global _manager
    if _manager is None:
        with _manager_lock:
            if _manager is None:
                _manager = ExecutorManager()
    return _manager


def get_shared_executor() -> ThreadPoolExecutor:
    return get_executor_manager().get_executor()


def cleanup_executor() -> None:
    """Shut the shared pool down; later fan-outs raise ``RuntimeError``."""
    get_executor_manager().cleanup()


def map_ordered(fn: Callable[[A], R], items: Iterable[A]) -> list[R]:
    """Apply ``fn`` to every item, possibly in parallel; results keep input order.

    Runs inline for fewer than two items or a single configured worker. The
    first exception raised by ``fn`` propagates.
    """
    batch = list(items)
    if len(batch) < 2 or get_config().max_workers == 1:
        return [fn(item) for item in batch]
    log_debug("Fan-out of %d tasks", len(batch))
    return list(get_shared_executor().map(fn, batch))
