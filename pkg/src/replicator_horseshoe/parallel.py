import asyncio
from typing import Callable, Iterable, List, TypeVar

from tqdm.asyncio import tqdm as atqdm

T = TypeVar("T")
R = TypeVar("R")

# None lets tqdm decide (bars only on a terminal)
_progress: dict[str, bool | None] = {"enabled": None}


def set_progress(enabled: bool | None):
    _progress["enabled"] = enabled


def progress_disabled() -> bool | None:
    enabled = _progress["enabled"]
    return None if enabled is None else not enabled


async def _gather_in_threads(function: Callable[[T], R], items: List[T], desc: str | None) -> List[R]:
    """
        Run ``function`` over ``items`` on worker threads
        gather keeps the results in the order of ``items``
    """
    return await atqdm.gather(
        *[asyncio.to_thread(function, item) for item in items],
        desc=desc,
        disable=progress_disabled(),
    )


def map_in_threads_wrapper(function: Callable[[T], R], items: Iterable[T], desc: str | None = None) -> List[R]:
    items = list(items)
    if not items:
        return []
    return asyncio.run(_gather_in_threads(function, items, desc))
