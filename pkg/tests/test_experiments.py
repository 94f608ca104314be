import asyncio

import numpy as np
import pytest

from src.errors import InputError, ParameterError
from src.experiments import (
    DegreeSweepRecord,
    FileMaskSource,
    LpsMaskSource,
    PermutationMaskSource,
    PhaseSweep,
    PhaseSweepRecord,
    RandomMaskSource,
    SweepConfig,
    TrialResult,
    TrialRunner,
    baseline_sweep,
    critical_rank,
    degree_sweep,
    degree_sweep_async,
    phase_sweep,
    random_low_rank,
    summarize,
    transition_width,
    trial_seed,
)
from src.graphs import permutation_union_mask, validate_biregular
from src.linalg import singular_values
from src.solver import SolverOptions
from src.storage import format_degree_csv, format_sweep_csv, save_mask


def record(rank, successes, trials=20):
    return PhaseSweepRecord(rank=rank, trials=trials, successes=successes, mean_relative_error=0.0, mean_iterations=1.0)


# matrices ------------------------------------------------------------------


def test_random_low_rank_is_seeded():
    first = random_low_rank(30, 20, 3, seed=42)
    second = random_low_rank(30, 20, 3, seed=42)
    assert first.shape == (30, 20)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, random_low_rank(30, 20, 3, seed=43))


@pytest.mark.parametrize("r", [1, 2, 5, 10])
def test_random_low_rank_has_exact_rank(r):
    s = singular_values(random_low_rank(40, 40, r, seed=r))
    assert s[r - 1] > 1e-8 * s[0]
    if r < 40:
        assert s[r] < 1e-10 * s[0]


@pytest.mark.parametrize("r", [0, 11])
def test_random_low_rank_rejects_bad_rank(r):
    with pytest.raises(ParameterError):
        random_low_rank(10, 12, r, seed=0)


def test_trial_seed():
    assert trial_seed(0, 1, 0) == trial_seed(0, 1, 0)
    assert trial_seed(0, 1, 0) != trial_seed(0, 1, 1)
    assert trial_seed(0, 1, 0) != trial_seed(1, 1, 0)
    assert 0 <= trial_seed(7, 3, 2) < 2**64


# summaries -----------------------------------------------------------------


def test_critical_rank_examples():
    assert critical_rank([record(1, 20), record(2, 20), record(3, 19), record(4, 20)]) == 2
    assert critical_rank([record(1, 19), record(2, 20)]) is None
    assert critical_rank([record(5, 20), record(6, 20)]) == 6


def test_critical_rank_errors():
    with pytest.raises(InputError):
        critical_rank([])
    with pytest.raises(InputError):
        critical_rank([record(1, 20), record(3, 20)])


def test_transition_width_counts_partial_ranks():
    records = [record(1, 20), record(2, 18), record(3, 1), record(4, 0), record(5, 0)]
    assert transition_width(records) == 2
    assert transition_width([record(1, 20), record(2, 0)]) == 0
    assert transition_width([]) == 0


def test_degree_record_ratio():
    assert DegreeSweepRecord(degree=6.0, critical_rank=2).ratio == pytest.approx(1 / 3)
    assert DegreeSweepRecord(degree=6.0, critical_rank=None).ratio is None
    assert DegreeSweepRecord(degree=6.0, critical_rank=2).baseline_ratio is None
    assert DegreeSweepRecord(degree=6.0, critical_rank=2, baseline_critical_rank=3).baseline_ratio == 0.5


def test_record_rejects_impossible_counts():
    with pytest.raises(InputError):
        record(1, 21)
    assert record(1, 5, trials=20).success_rate == pytest.approx(0.25)


def test_summarize_groups_by_rank():
    results = [
        TrialResult(rank=1, trial=0, converged=True, relative_error=1e-9, iterations=10, success=True),
        TrialResult(rank=1, trial=1, converged=True, relative_error=3e-9, iterations=20, success=True),
        TrialResult(rank=2, trial=0, converged=False, relative_error=0.5, iterations=5000, success=False),
    ]
    records = summarize(results)
    assert [r.rank for r in records] == [1, 2]
    assert records[0].successes == 2
    assert records[0].mean_relative_error == pytest.approx(2e-9)
    assert records[0].mean_iterations == pytest.approx(15.0)
    assert records[1].successes == 0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"rank_min": 0, "rank_max": 2},
        {"rank_min": 3, "rank_max": 2},
        {"rank_min": 1, "rank_max": 2, "trials_per_rank": 0},
        {"rank_min": 1, "rank_max": 2, "jobs": 0},
        {"rank_min": 1, "rank_max": 2, "success_threshold": 0.0},
    ],
)
def test_sweep_config_validation(kwargs):
    with pytest.raises(ParameterError):
        SweepConfig(mask_source=PermutationMaskSource(8, 4, seed=0), **kwargs)


# sources -------------------------------------------------------------------


def test_sources_build_masks(tmp_path):
    perm = asyncio.run(PermutationMaskSource(12, 3, seed=1).build())
    assert perm.m == 36
    assert perm.d_r == perm.d_c == 3

    rand = asyncio.run(RandomMaskSource(10, 8, 30, seed=2).build())
    assert rand.shape == (10, 8)
    assert rand.m == 30

    lps = asyncio.run(LpsMaskSource(5, 13).build())
    assert lps.n_rows == 1092

    path = tmp_path / "mask.txt"
    asyncio.run(save_mask(path, perm))
    loaded = asyncio.run(FileMaskSource(path).build())
    assert loaded.edges == perm.edges


def test_sources_describe_themselves():
    assert "p=5" in LpsMaskSource(5, 13).describe()
    assert "d=4" in PermutationMaskSource(8, 4, seed=0).describe()


# sweeps --------------------------------------------------------------------


def test_trivial_sweep_on_full_mask():
    mask = validate_biregular([(i, j) for i in range(6) for j in range(6)], 6, 6)
    runner = TrialRunner(mask, matrix_seed=0)
    results = asyncio.run(runner.run([1, 2, 3], trials=2))
    assert [(r.rank, r.trial) for r in results] == [(1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (3, 1)]
    assert all(r.success and r.iterations == 0 for r in results)
    assert critical_rank(summarize(results)) == 3


def test_trial_runner_rejects_bad_jobs():
    with pytest.raises(ParameterError):
        TrialRunner(permutation_union_mask(6, 2, seed=0), matrix_seed=0, jobs=0)


def small_config(**overrides):
    settings = dict(
        mask_source=PermutationMaskSource(16, 8, seed=3),
        rank_min=1,
        rank_max=3,
        trials_per_rank=3,
        matrix_seed=11,
        solver=SolverOptions(max_iterations=2000),
    )
    settings.update(overrides)
    return SweepConfig(**settings)


def test_sweep_output_does_not_depend_on_jobs():
    serial = phase_sweep(small_config(jobs=1))
    parallel = phase_sweep(small_config(jobs=4))
    assert format_sweep_csv(serial) == format_sweep_csv(parallel)
    assert [r.rank for r in serial] == [1, 2, 3]
    assert all(r.trials == 3 for r in serial)


def test_sweep_rejects_rank_above_dimension():
    with pytest.raises(ParameterError):
        phase_sweep(small_config(mask_source=PermutationMaskSource(4, 2, seed=0), rank_max=5))


def test_baseline_matches_sample_count():
    config = small_config(rank_max=1, trials_per_rank=1)
    sweep = PhaseSweep(config)
    mask = asyncio.run(sweep.mask())
    source = asyncio.run(sweep.baseline_source())
    assert (source.n_rows, source.n_cols, source.m) == (16, 16, mask.m)

    records = baseline_sweep(config)
    assert len(records) == 1
    assert records[0].trials == 1


def test_degree_sweep_on_full_masks():
    config = small_config(rank_max=3, trials_per_rank=2)
    sources = [PermutationMaskSource(6, 6, seed=0), PermutationMaskSource(8, 8, seed=0)]
    records = degree_sweep(config, sources, baseline=True)
    assert [r.degree for r in records] == [6.0, 8.0]
    assert [r.critical_rank for r in records] == [3, 3]
    assert [r.baseline_critical_rank for r in records] == [3, 3]
    assert records[0].ratio == pytest.approx(0.5)
    assert format_degree_csv(records).splitlines() == ["degree,critical_rank,ratio", "6,3,0.500000", "8,3,0.375000"]


def test_degree_sweep_matches_single_sweeps():
    config = small_config(rank_max=2, trials_per_rank=2)
    sources = [PermutationMaskSource(16, 6, seed=3), PermutationMaskSource(16, 10, seed=3)]
    records = degree_sweep(config, sources)
    for source, found in zip(sources, records):
        single = phase_sweep(small_config(mask_source=source, rank_max=2, trials_per_rank=2))
        assert found.critical_rank == critical_rank(single)
        assert found.baseline_critical_rank is None


def test_degree_sweep_errors():
    with pytest.raises(ParameterError):
        degree_sweep(small_config(), [])
    with pytest.raises(ParameterError):
        asyncio.run(degree_sweep_async(small_config(), [PermutationMaskSource(16, 12, seed=0)], max_degree=10))


@pytest.mark.slow
def test_desk_scale_phase_transition():
    # 60 x 60, d = 30: measured successes per rank are 20,20,20,20,20,18,16,11,1,0,...
    config = SweepConfig(
        mask_source=PermutationMaskSource(60, 30, seed=0),
        rank_min=1,
        rank_max=20,
        trials_per_rank=20,
        jobs=4,
    )
    records = phase_sweep(config)
    successes = [r.successes for r in records]
    threshold = critical_rank(records)

    assert threshold is not None and threshold >= 4
    assert all(r.successes == r.trials for r in records if r.rank <= threshold)
    assert all(a >= b for a, b in zip(successes, successes[1:]))
    assert all(r.successes == 0 for r in records if r.rank >= threshold + 5)
    assert transition_width(records) <= 4


@pytest.mark.slow
def test_desk_scale_degree_sweep():
    config = SweepConfig(
        mask_source=PermutationMaskSource(60, 10, seed=0),
        rank_min=1,
        rank_max=10,
        trials_per_rank=10,
        jobs=4,
    )
    sources = [PermutationMaskSource(60, d, seed=0) for d in (10, 20, 30)]
    records = degree_sweep(config, sources)
    ranks = [r.critical_rank or 0 for r in records]
    assert [r.degree for r in records] == [10.0, 20.0, 30.0]
    assert ranks == sorted(ranks)
    assert ranks[-1] > ranks[0]
    assert all(r.ratio is None or 0 < r.ratio < 1 for r in records)
