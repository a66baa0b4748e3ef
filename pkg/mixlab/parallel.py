"""Deterministic parallel helpers.

Work is fanned out over a thread pool but results always come back in input order, and
random streams are derived from the master seed independently of the thread count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_default_threads = 1


def set_default_threads(threads: int) -> None:
    global _default_threads
    _default_threads = max(1, int(threads))
    logger.debug(f"Default thread count set to {_default_threads}")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    items = list(items)
    threads = threads or _default_threads
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def spawn_seeds(seed: int, n: int) -> List[np.random.SeedSequence]:
    """Child seed sequences of ``SeedSequence(seed)``; block i always gets child i."""
    return np.random.SeedSequence(seed).spawn(n)
