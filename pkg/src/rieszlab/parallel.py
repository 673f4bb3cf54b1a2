"""Order-preserving parallel map, capped by ``RIESZ_LAB_THREADS``."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import os

ENV_VAR = "RIESZ_LAB_THREADS"


def max_workers() -> int:
    raw = os.environ.get(ENV_VAR, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return n


def pmap(fn, items) -> list:
    """``[fn(x) for x in items]``, evaluated on a thread pool when allowed.

    Results come back in input order, so reductions over them are
    deterministic regardless of the worker count.
    """
    items = list(items)
    n = min(max_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
