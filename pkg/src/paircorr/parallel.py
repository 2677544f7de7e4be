"""Order-preserving worker map; results never depend on the worker count."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_default_workers = 1


def set_default_workers(k: int) -> None:
    global _default_workers
    _default_workers = max(1, int(k))


def default_workers() -> int:
    return _default_workers


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    # numpy kernels release the GIL, so threads give real overlap
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
