"""
Phase-transition experiments on sampling masks
"""

from .engine import (
    DegreeSweepRecord,
    PhaseSweep,
    PhaseSweepRecord,
    SweepConfig,
    baseline_sweep,
    critical_rank,
    degree_sweep,
    degree_sweep_async,
    phase_sweep,
    summarize,
    transition_width,
)
from .runner import TrialResult, TrialRunner, random_low_rank, trial_seed
from .sources import (
    FileMaskSource,
    LpsMaskSource,
    MaskSource,
    PermutationMaskSource,
    RandomMaskSource,
)

__all__ = [
    "DegreeSweepRecord",
    "PhaseSweep",
    "PhaseSweepRecord",
    "SweepConfig",
    "baseline_sweep",
    "critical_rank",
    "degree_sweep",
    "degree_sweep_async",
    "phase_sweep",
    "summarize",
    "transition_width",
    "TrialResult",
    "TrialRunner",
    "random_low_rank",
    "trial_seed",
    "FileMaskSource",
    "LpsMaskSource",
    "MaskSource",
    "PermutationMaskSource",
    "RandomMaskSource",
]
