"""Counter-based random substreams.

Every stochastic step draws from a generator keyed by ``(seed, tag, *counters)``
so results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def _tag_code(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def substream(seed: int, tag: str, *counters: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, tag, *counters)``."""
    entropy = [int(seed) & 0xFFFFFFFF, _tag_code(tag), len(counters)]
    entropy.extend(int(c) for c in counters)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def parallel_map(func: Callable[[T], R], items: Sequence[T] | Iterable[T], n_jobs: int = 1) -> list[R]:
    """Ordered map over ``items``; threads when ``n_jobs > 1``."""
    items = list(items)
    if n_jobs is None or n_jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(func, items))
