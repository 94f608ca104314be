"""
Phase-transition sweeps: success ratio of exact completion against rank.
"""

import asyncio
import logging
from dataclasses import dataclass, field, replace

from ..config import DEFAULT_SUCCESS_THRESHOLD, DESK_SCALE_TRIALS
from ..errors import InputError, ParameterError
from ..graphs import SampleMask
from ..solver import SolverOptions
from .runner import TrialResult, TrialRunner
from .sources import MaskSource, RandomMaskSource

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepConfig:
    """
    Everything that determines a sweep; two equal configs give identical records.

    `jobs` only changes how many trials run at once.
    """

    mask_source: MaskSource
    rank_min: int
    rank_max: int
    trials_per_rank: int = DESK_SCALE_TRIALS
    matrix_seed: int = 0
    success_threshold: float = DEFAULT_SUCCESS_THRESHOLD
    solver: SolverOptions = field(default_factory=SolverOptions)
    jobs: int = 1

    def __post_init__(self):
        if self.rank_min < 1:
            raise ParameterError(f"rank_min must be at least 1, got {self.rank_min}")
        if self.rank_max < self.rank_min:
            raise ParameterError(f"Invalid rank range [{self.rank_min}, {self.rank_max}]")
        if self.trials_per_rank < 1:
            raise ParameterError(f"trials_per_rank must be at least 1, got {self.trials_per_rank}")
        if self.success_threshold <= 0:
            raise ParameterError(f"success_threshold must be positive, got {self.success_threshold}")
        if self.jobs < 1:
            raise ParameterError(f"jobs must be at least 1, got {self.jobs}")

    @property
    def ranks(self) -> list[int]:
        return list(range(self.rank_min, self.rank_max + 1))


@dataclass(frozen=True)
class PhaseSweepRecord:
    rank: int
    trials: int
    successes: int
    mean_relative_error: float
    mean_iterations: float

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise InputError(f"Record for rank {self.rank} has {self.successes} successes in {self.trials} trials")

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


def summarize(results: list[TrialResult]) -> list[PhaseSweepRecord]:
    """Collapse trial results, already in (rank, trial) order, into one record per rank."""
    by_rank: dict[int, list[TrialResult]] = {}
    for result in results:
        by_rank.setdefault(result.rank, []).append(result)

    records = []
    for rank, group in by_rank.items():
        records.append(
            PhaseSweepRecord(
                rank=rank,
                trials=len(group),
                successes=sum(r.success for r in group),
                mean_relative_error=sum(r.relative_error for r in group) / len(group),
                mean_iterations=sum(r.iterations for r in group) / len(group),
            )
        )
    return records


class PhaseSweep:
    """
    Coordinates one sweep configuration.

    The mask is built once and shared by the main sweep and the random
    baseline at matched sample count.
    """

    def __init__(self, config: SweepConfig):
        self.config = config
        self._mask: SampleMask | None = None

    async def mask(self) -> SampleMask:
        if self._mask is None:
            self._mask = await self.config.mask_source.build()
            logger.info("Built %s with %d samples", self.config.mask_source.describe(), self._mask.m)
        return self._mask

    async def _sweep(self, mask: SampleMask) -> list[PhaseSweepRecord]:
        limit = min(mask.shape)
        if self.config.rank_max > limit:
            raise ParameterError(f"rank_max {self.config.rank_max} exceeds the smaller dimension {limit}")

        runner = TrialRunner(
            mask,
            matrix_seed=self.config.matrix_seed,
            options=self.config.solver,
            success_threshold=self.config.success_threshold,
            jobs=self.config.jobs,
        )
        results = await runner.run(self.config.ranks, self.config.trials_per_rank)
        return summarize(results)

    async def run(self) -> list[PhaseSweepRecord]:
        return await self._sweep(await self.mask())

    async def baseline_source(self) -> RandomMaskSource:
        mask = await self.mask()
        return RandomMaskSource(mask.n_rows, mask.n_cols, mask.m, seed=self.config.matrix_seed)

    async def run_baseline(self) -> list[PhaseSweepRecord]:
        """Same sweep on a uniformly random mask with as many samples as the configured one."""
        source = await self.baseline_source()
        return await self._sweep(await source.build())


def phase_sweep(config: SweepConfig) -> list[PhaseSweepRecord]:
    return asyncio.run(PhaseSweep(config).run())


def baseline_sweep(config: SweepConfig) -> list[PhaseSweepRecord]:
    """
    Sweep on a random mask of equal sample count.

    A config whose source is already random is swept as given.
    """
    if isinstance(config.mask_source, RandomMaskSource):
        return phase_sweep(config)
    return asyncio.run(PhaseSweep(config).run_baseline())


def critical_rank(records: list[PhaseSweepRecord]) -> int | None:
    """
    Largest rank up to which every trial succeeded.

    Returns:
        The rank, or None when the first record already has a failure

    Raises:
        InputError: If records is empty or its ranks are not consecutive
    """
    if not records:
        raise InputError("critical_rank needs at least one record")
    for before, after in zip(records, records[1:]):
        if after.rank != before.rank + 1:
            raise InputError(f"Records are not contiguous: rank {before.rank} followed by {after.rank}")

    best = None
    for record in records:
        if record.successes != record.trials:
            break
        best = record.rank
    return best


def transition_width(records: list[PhaseSweepRecord]) -> int:
    """Number of ranks with partial recovery, neither every trial nor none."""
    return sum(1 for record in records if 0 < record.successes < record.trials)


@dataclass(frozen=True)
class DegreeSweepRecord:
    """Critical rank of one mask in a degree sweep; degree is the mean row degree m / n_rows."""

    degree: float
    critical_rank: int | None
    baseline_critical_rank: int | None = None

    @property
    def ratio(self) -> float | None:
        if self.critical_rank is None:
            return None
        return self.critical_rank / self.degree

    @property
    def baseline_ratio(self) -> float | None:
        if self.baseline_critical_rank is None:
            return None
        return self.baseline_critical_rank / self.degree


async def degree_sweep_async(
    config: SweepConfig, sources: list[MaskSource], baseline: bool = False, max_degree: float | None = None
) -> list[DegreeSweepRecord]:
    """
    Rank sweep of `config` repeated for each mask source, in the order given.

    Every source shares the rank range, trial count, seed and solver of
    `config`; the mask_source of `config` itself is ignored.

    Raises:
        ParameterError: If sources is empty, or a mask is denser than max_degree
    """
    if not sources:
        raise ParameterError("degree sweep needs at least one mask source")

    records = []
    for source in sources:
        sweep = PhaseSweep(replace(config, mask_source=source))
        mask = await sweep.mask()
        degree = mask.m / mask.n_rows
        if max_degree is not None and degree > max_degree:
            raise ParameterError(f"{source.describe()} has degree {degree:g}, above the limit {max_degree:g}")
        rank = critical_rank(await sweep.run())
        baseline_rank = critical_rank(await sweep.run_baseline()) if baseline else None
        logger.info("%s: degree %g, critical rank %s", source.describe(), degree, rank)
        records.append(DegreeSweepRecord(degree=degree, critical_rank=rank, baseline_critical_rank=baseline_rank))
    return records


def degree_sweep(config: SweepConfig, sources: list[MaskSource], baseline: bool = False) -> list[DegreeSweepRecord]:
    return asyncio.run(degree_sweep_async(config, sources, baseline))
