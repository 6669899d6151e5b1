"""Chunked, reproducible trial loops.

Trials are split into fixed-size chunks, each with a child stream derived from
(seed, label, chunk index). Results are merged by summing counts, so the total
does not depend on ``jobs`` or on worker scheduling.
"""

import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor

from src.config import TRIAL_CHUNK
from src.errors import PreconditionError
from src.rng import Rng

logger = logging.getLogger(__name__)

TrialTask = Callable[[Rng, int], int]


def chunk_plan(trials: int, rng: Rng, label: str, chunk: int = TRIAL_CHUNK) -> list[tuple[Rng, int]]:
    """[(child stream, trial count)] covering ``trials`` trials."""
    if trials < 1:
        raise PreconditionError("trials must be positive")
    if chunk < 1:
        raise PreconditionError("chunk size must be positive")
    plan = []
    for index, start in enumerate(range(0, trials, chunk)):
        plan.append((rng.child(label, index), min(chunk, trials - start)))
    return plan


def run_trials(
    task: TrialTask,
    trials: int,
    rng: Rng,
    *,
    label: str,
    jobs: int = 1,
    chunk: int = TRIAL_CHUNK,
) -> int:
    """Run ``task(child_rng, count)`` over every chunk and return the summed count.

    ``task`` must be picklable (a module-level function or a partial of one) when jobs > 1.
    """
    plan = chunk_plan(trials, rng, label, chunk)
    if jobs <= 1 or len(plan) == 1:
        return sum(task(child, count) for child, count in plan)

    logger.debug("Running %d chunks of %r on %d workers", len(plan), label, jobs)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        children, counts = zip(*plan, strict=True)
        return sum(pool.map(task, children, counts))
