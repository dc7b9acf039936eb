import asyncio
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .experiment import ExperimentConfig
from .helpers import sync_to_async
from .result import ResultTable
from .runtime import runtime
from .scenarios import run_scenario
from .vars import executor_context

logger = logging.getLogger(__name__)


def plan_seeds(seed: int, count: int) -> List[np.random.SeedSequence]:
    """One independent child sequence per scenario, in plan order."""
    return np.random.SeedSequence(seed).spawn(count)


async def timed_scenario(
    config: ExperimentConfig,
    out: Path,
    seed: np.random.SeedSequence,
    error_mode: str,
    semaphore: asyncio.Semaphore,
) -> ResultTable:
    async with semaphore:
        start = time.monotonic()
        try:
            return await sync_to_async(run_scenario)(config, out, seed, error_mode)
        finally:
            logger.debug("scenario %s finished in %.2fs", config.scenario, time.monotonic() - start)


async def execute_plan(
    configs: Sequence[ExperimentConfig],
    out: Union[str, Path],
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    error_mode: Optional[str] = None,
) -> ResultTable:
    """
    Runs the scenarios, at most `threads` at a time, each in its own
    <out>/<scenario> directory. Results are merged in plan order, so the
    combined table does not depend on scheduling.

    With `seed` None each scenario uses its config's seed; otherwise each
    gets a child of SeedSequence(seed).
    """
    threads = threads or runtime.setting("threads")
    error_mode = error_mode or runtime.setting("error_mode")
    out = Path(out)
    seeds = (
        [np.random.SeedSequence(config.seed) for config in configs]
        if seed is None
        else plan_seeds(seed, len(configs))
    )
    semaphore = asyncio.Semaphore(threads)
    pool = ThreadPoolExecutor(max_workers=threads, thread_name_prefix="phasediff")
    token = executor_context.set(pool)
    try:
        futures = [
            asyncio.ensure_future(
                timed_scenario(config, out / config.scenario, child, error_mode, semaphore)
            )
            for config, child in zip(configs, seeds)
        ]
        try:
            tables = await asyncio.gather(*futures)
        except BaseException:
            for future in futures:
                future.cancel()
            await asyncio.gather(*futures, return_exceptions=True)
            raise
    finally:
        executor_context.reset(token)
        pool.shutdown(wait=True)

    combined = ResultTable(error_mode)
    for table in tables:
        combined.extend(table)
    return combined


def run_plan(
    configs: Sequence[ExperimentConfig],
    out: Union[str, Path],
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    error_mode: Optional[str] = None,
) -> ResultTable:
    """Synchronous entry point for `execute_plan`."""
    return asyncio.run(execute_plan(configs, out, seed, threads, error_mode))
