#!/usr/bin/env python3
"""
Support functions: logging, entry point wrapper, seeds and worker pools.

Copyright (c) 2024 ROX Automation
"""

import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import coloredlogs
import numpy as np

from bsdlab.errors import exit_code_for

LOG_FORMAT = "%(asctime)s [%(name)s] %(filename)s:%(lineno)d - %(message)s"
TIME_FORMAT = "%H:%M:%S.%f"

THREADS_ENV = "BSDLAB_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def setup_logging() -> None:
    """Setup logging"""
    loglevel = os.environ.get("LOGLEVEL", "INFO").upper()
    coloredlogs.install(level=loglevel, fmt=LOG_FORMAT, datefmt=TIME_FORMAT)
    logging.debug(f"Log level set to {loglevel}")


def get_root_exception(exc: BaseException) -> BaseException:
    """Traverse the exception chain to find the root cause."""
    if isinstance(exc, ExceptionGroup):
        for e in exc.exceptions:
            return get_root_exception(e)
    while exc.__cause__ is not None:
        exc = exc.__cause__
    return exc


def run_main(func: Callable[[], int | None]) -> None:
    """run a CLI body, log failures and exit with the error category code"""
    setup_logging()

    code = 0
    try:
        code = func() or 0
    except KeyboardInterrupt:
        logging.info("Process interrupted by user")
        code = 130
    except Exception as e:  # pylint: disable=broad-except
        root_exc = get_root_exception(e)
        logging.error(f"{type(e).__name__}: {e}")
        if root_exc is not e:
            logging.error(f"Root cause: {type(root_exc).__name__}: {root_exc}")
        logging.debug("traceback", exc_info=True)
        code = exit_code_for(e)

    if code:
        sys.exit(code)


def derive_seed(master: int, *counter: int) -> int:
    """64-bit task seed derived from the master seed and a counter path.

    derive_seed(s, 3) is the seed of task 3, derive_seed(s, 3, 1) of its
    first subtask. Stable across platforms and numpy versions.
    """
    seq = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *map(int, counter)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rng_for(master: int, *counter: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *counter))


def worker_count() -> int:
    """number of workers, bounded by BSDLAB_THREADS"""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logging.warning(f"ignoring invalid {THREADS_ENV}={value!r}")
    return os.cpu_count() or 1


def parallel_map(func: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """map over items with a bounded thread pool, results in input order"""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def chunk_ranges(n: int, chunk: int) -> Sequence[tuple[int, int]]:
    """split range(n) into consecutive (start, stop) pairs of at most `chunk`"""
    return [(start, min(start + chunk, n)) for start in range(0, n, chunk)]
