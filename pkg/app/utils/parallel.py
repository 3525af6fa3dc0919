"""Order-preserving parallel map for independent solves."""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from app.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(
    func: Callable[[T], R], items: Iterable[T], workers: int | None = None
) -> list[R]:
    """
    Apply ``func`` to every item, returning results in input order.

    With one worker the map runs inline, so results and log order are the
    same as a plain loop. The first exception raised by any call propagates.

    Args:
        func: Function to apply
        items: Inputs
        workers: Thread count, defaults to ``settings.DEFAULT_WORKERS``

    Returns:
        Results in the order of ``items``
    """
    workers = settings.DEFAULT_WORKERS if workers is None else workers
    batch = list(items)
    if workers <= 1 or len(batch) <= 1:
        return [func(item) for item in batch]
    logger.debug(f"Mapping {len(batch)} items over {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, batch))
