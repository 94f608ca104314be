"""
Where a sweep gets its sample set from.

Every source is a small frozen value with an async `build()`; construction
work runs in a worker thread so the event loop stays free.
"""

import asyncio
from dataclasses import dataclass
from pathlib import Path

from ..graphs import SampleMask, lps_graph, permutation_union_mask, random_mask, sample_mask
from ..storage import load_mask


@dataclass(frozen=True)
class LpsMaskSource:
    """LPS Ramanujan graph X^{p,q}, a (p+1)-regular square mask."""

    p: int
    q: int

    def describe(self) -> str:
        return f"lps(p={self.p}, q={self.q})"

    async def build(self) -> SampleMask:
        return await asyncio.to_thread(lps_graph, self.p, self.q)


@dataclass(frozen=True)
class FileMaskSource:
    path: Path

    def describe(self) -> str:
        return f"file({self.path})"

    async def build(self) -> SampleMask:
        return await load_mask(self.path)


@dataclass(frozen=True)
class RandomMaskSource:
    """m uniformly random entries; the baseline against structured masks."""

    n_rows: int
    n_cols: int
    m: int
    seed: int
    replacement: bool = False

    def describe(self) -> str:
        return f"random(m={self.m}, seed={self.seed})"

    async def build(self) -> SampleMask:
        edges = await asyncio.to_thread(random_mask, self.n_rows, self.n_cols, self.m, self.seed, self.replacement)
        return sample_mask(edges, self.n_rows, self.n_cols)


@dataclass(frozen=True)
class PermutationMaskSource:
    """Union of d disjoint random permutation matrices on an n x n grid."""

    n: int
    d: int
    seed: int

    def describe(self) -> str:
        return f"permutation(n={self.n}, d={self.d}, seed={self.seed})"

    async def build(self) -> SampleMask:
        return await asyncio.to_thread(permutation_union_mask, self.n, self.d, self.seed)


MaskSource = LpsMaskSource | FileMaskSource | RandomMaskSource | PermutationMaskSource
