"""
Trial execution for phase-transition sweeps.

Each trial draws a seeded Gaussian-factor matrix, completes it from its
entries on the mask and scores the result. Trials run in worker threads,
at most `jobs` at a time, and are returned in (rank, trial) order so the
outcome never depends on scheduling.
"""

import asyncio
import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_SUCCESS_THRESHOLD, LOW_RANK_TOLERANCE, MAX_REGENERATIONS
from ..errors import NumericalFailureError, ParameterError
from ..graphs import SampleMask
from ..linalg import singular_values
from ..solver import SolverOptions, complete_exact, relative_error

logger = logging.getLogger(__name__)


def trial_seed(matrix_seed: int, rank: int, trial: int) -> int:
    """First 8 bytes of SHA-256 over the three integers, as an unsigned int."""
    digest = hashlib.sha256(f"{matrix_seed}:{rank}:{trial}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def random_low_rank(n_r: int, n_c: int, r: int, seed: int) -> np.ndarray:
    """
    X = G H^T with independent standard Gaussian G (n_r x r) and H (n_c x r).

    Draws come from numpy's default_rng (PCG64) seeded with `seed`. If the
    product is numerically rank deficient it is redrawn from seed + 1,
    seed + 2, ... with a warning.

    Raises:
        ParameterError: Unless 1 <= r <= min(n_r, n_c)
        NumericalFailureError: If every regeneration is rank deficient
    """
    if not 1 <= r <= min(n_r, n_c):
        raise ParameterError(f"Rank {r} must lie in [1, {min(n_r, n_c)}]")

    for attempt in range(MAX_REGENERATIONS + 1):
        rng = np.random.default_rng(seed + attempt)
        g = rng.standard_normal((n_r, r))
        h = rng.standard_normal((n_c, r))
        x = g @ h.T
        s = singular_values(x)
        if s[r - 1] > LOW_RANK_TOLERANCE * s[0]:
            return x
        logger.warning("Rank-%d draw with seed %d is rank deficient, regenerating", r, seed + attempt)

    raise NumericalFailureError(f"No full-rank rank-{r} matrix after {MAX_REGENERATIONS} regenerations")


@dataclass(frozen=True)
class TrialResult:
    rank: int
    trial: int
    converged: bool
    relative_error: float
    iterations: int
    success: bool


class TrialRunner:
    """
    Runs completion trials against one fixed mask.

    Instances hold no mutable state shared between trials, so trials can
    execute in any order on any thread.
    """

    def __init__(
        self,
        mask: SampleMask,
        matrix_seed: int,
        options: SolverOptions | None = None,
        success_threshold: float = DEFAULT_SUCCESS_THRESHOLD,
        jobs: int = 1,
    ):
        if jobs < 1:
            raise ParameterError(f"jobs must be at least 1, got {jobs}")
        self.mask = mask
        self.matrix_seed = matrix_seed
        self.options = options or SolverOptions()
        self.success_threshold = success_threshold
        self.jobs = jobs

    def run_trial(self, rank: int, trial: int) -> TrialResult:
        """Generate, complete and score one matrix."""
        n_r, n_c = self.mask.shape
        x = random_low_rank(n_r, n_c, rank, trial_seed(self.matrix_seed, rank, trial))
        outcome = complete_exact(x * self.mask.indicator, self.mask, self.options)
        error = relative_error(outcome.X_hat, x)
        recovered = error < self.success_threshold

        if not outcome.converged:
            logger.info("rank %d trial %d: solver failure after %d iterations", rank, trial, outcome.iterations_used)
        elif not recovered:
            logger.info("rank %d trial %d: recovery failure, relative error %.3e", rank, trial, error)

        return TrialResult(
            rank=rank,
            trial=trial,
            converged=outcome.converged,
            relative_error=error,
            iterations=outcome.iterations_used,
            success=outcome.converged and recovered,
        )

    async def run(self, ranks: list[int], trials: int) -> list[TrialResult]:
        """
        Run `trials` trials for every rank with at most `jobs` in flight.

        Returns:
            Results sorted by (rank, trial)
        """
        semaphore = asyncio.Semaphore(self.jobs)

        async def bounded(rank: int, trial: int) -> TrialResult:
            async with semaphore:
                return await asyncio.to_thread(self.run_trial, rank, trial)

        results = await asyncio.gather(*(bounded(rank, trial) for rank in ranks for trial in range(trials)))
        return sorted(results, key=lambda result: (result.rank, result.trial))
