import asyncio
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from phasediff import helpers
from phasediff.runtime import runtime
from phasediff.vars import executor_context


def test_assemble_columns():
    """Tests that a linear map is recovered column by column."""
    matrix = np.array([[1.0, 2.0j, 0.0], [0.0, 1.0, -1.0], [3.0, 0.0, 1.0]])
    dense = helpers.assemble_columns(lambda v: matrix @ v, (3,))
    assert np.array_equal(dense, matrix)

    def transpose(values):
        return values.T.copy()

    dense = helpers.assemble_columns(transpose, (2, 2))
    assert np.array_equal(dense @ dense, np.eye(4))


def test_assemble_columns_copies_each_result():
    """An apply that hands back its input still yields the identity."""
    dense = helpers.assemble_columns(lambda values: values, (3, 2))
    assert np.array_equal(dense, np.eye(6))
    assert not hasattr(helpers, "fold")


async def test_sync_to_async_runs_in_a_worker_thread():
    """Tests that the wrapped function runs off the event loop thread."""
    main = threading.get_ident()

    def work(x, y=1):
        return x + y, threading.get_ident()

    value, thread = await helpers.sync_to_async(work)(2, y=3)
    assert value == 5
    assert thread != main


async def test_sync_to_async_uses_installed_executor():
    """Tests that the executor in executor_context is used when set."""
    pool = ThreadPoolExecutor(max_workers=1, thread_name_prefix="custom")
    token = executor_context.set(pool)
    try:
        name = await helpers.sync_to_async(lambda: threading.current_thread().name)()
    finally:
        executor_context.reset(token)
        pool.shutdown(wait=True)
    assert name.startswith("custom")


async def test_sync_to_async_carries_scoped_settings():
    """Tests that runtime.scoped values reach the worker thread."""
    with runtime.scoped(decay_tol=1e-3):
        seen = await helpers.sync_to_async(runtime.setting)("decay_tol")
    assert seen == 1e-3


async def test_sync_to_async_propagates_exceptions():
    def fail():
        raise ZeroDivisionError("nope")

    with pytest.raises(ZeroDivisionError, match="nope"):
        await helpers.sync_to_async(fail)()
    await asyncio.sleep(0)
