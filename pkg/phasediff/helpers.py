import asyncio
from contextvars import copy_context
from functools import wraps
from typing import Any, Callable, Coroutine, Tuple, TypeVar

import numpy as np

from .vars import executor_context

R = TypeVar("R")


def sync_to_async(func: Callable[..., R]) -> Callable[..., Coroutine[Any, Any, R]]:
    """
    Wraps a synchronous function to run in an executor.

    Uses the executor stored in `executor_context` when the scenario runner
    has installed one, and asyncio's default pool otherwise. The call runs
    in a copy of the caller's context, so scoped runtime settings follow it
    into the worker thread.

    Args:
        func: The synchronous function to wrap.

    Returns:
        An awaitable coroutine function that executes the original function
        in a separate thread.
    """

    @wraps(func)
    async def run_in_executor(*args: Any, **kwargs: Any) -> R:
        loop = asyncio.get_running_loop()
        executor = executor_context.get()
        context = copy_context()
        return await loop.run_in_executor(
            executor,
            lambda: context.run(lambda: func(*args, **kwargs)),
        )

    return run_in_executor


def assemble_columns(apply: Callable[[np.ndarray], np.ndarray], shape: Tuple[int, ...]) -> np.ndarray:
    """
    Builds the dense matrix of a linear map on arrays of `shape` by applying
    it to one unit vector per column, in flattened index order.
    """
    dimension = int(np.prod(shape))
    matrix = np.empty((dimension, dimension), dtype=complex)
    unit = np.zeros(dimension, dtype=complex)
    for column in range(dimension):
        unit[column] = 1.0
        matrix[:, column] = np.ravel(apply(unit.reshape(shape)))
        unit[column] = 0.0
    return matrix
