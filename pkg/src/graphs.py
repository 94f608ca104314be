"""
Sampling masks: LPS Ramanujan graphs, biregular validation, random baselines.

A mask is the sample set Omega stored as sorted (row, col) index arrays.
`SampleMask` makes no structural claim; `BiregularMask` additionally
carries its degrees and the two leading singular values of E_Omega.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable

import numpy as np
import scipy.sparse
from scipy.sparse.csgraph import breadth_first_order, maximum_bipartite_matching

from .config import RAMANUJAN_SLACK, SIGMA1_RELATIVE_TOLERANCE
from .errors import (
    BiregularityError,
    ConstructionError,
    InputError,
    NumericalFailureError,
    ParameterError,
)
from .linalg import singular_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SampleMask:
    """
    Sample set Omega on an n_rows x n_cols grid.

    Attributes:
        n_rows: Number of rows n_r
        n_cols: Number of columns n_c
        rows: Row indices of the sampled entries, sorted by (row, col)
        cols: Column indices, aligned with rows
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(zip(self.rows.tolist(), self.cols.tolist()))

    @property
    def sampling_fraction(self) -> float:
        return self.m / (self.n_rows * self.n_cols)

    @cached_property
    def indicator(self) -> np.ndarray:
        """Dense 0/1 matrix E_Omega (read-only)."""
        e = np.zeros(self.shape)
        e[self.rows, self.cols] = 1.0
        e.setflags(write=False)
        return e

    @cached_property
    def support(self) -> np.ndarray:
        """Boolean version of the indicator (read-only)."""
        s = self.indicator.astype(bool)
        s.setflags(write=False)
        return s

    def column_neighborhoods(self) -> list[np.ndarray]:
        """For each column j, the sampled rows N(j)."""
        order = np.lexsort((self.rows, self.cols))
        bounds = np.searchsorted(self.cols[order], np.arange(self.n_cols + 1))
        sorted_rows = self.rows[order]
        return [sorted_rows[bounds[j]:bounds[j + 1]] for j in range(self.n_cols)]

    def row_neighborhoods(self) -> list[np.ndarray]:
        """For each row i, the sampled columns."""
        bounds = np.searchsorted(self.rows, np.arange(self.n_rows + 1))
        return [self.cols[bounds[i]:bounds[i + 1]] for i in range(self.n_rows)]


@dataclass(frozen=True, eq=False)
class BiregularMask(SampleMask):
    """
    A (d_r, d_c)-biregular sample set with its spectral data.

    Invariants: n_r * d_r = n_c * d_c = m and sigma1 = sqrt(d_r * d_c).
    """

    d_r: int
    d_c: int
    sigma1: float
    sigma2: float

    @property
    def alpha(self) -> float:
        """Fraction of sampled entries, d_c / n_r = d_r / n_c."""
        return self.d_c / self.n_rows


@dataclass(frozen=True)
class SpectralReport:
    sigma1: float
    sigma2: float
    ramanujan_bound: float
    is_ramanujan: bool

    def as_pairs(self) -> list[tuple[str, object]]:
        return [
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("ramanujan_bound", self.ramanujan_bound),
            ("is_ramanujan", self.is_ramanujan),
        ]


def _edge_array(edges, n_rows: int, n_cols: int) -> np.ndarray:
    if n_rows < 1 or n_cols < 1:
        raise InputError(f"Mask dimensions must be positive, got {n_rows}x{n_cols}")

    pairs = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if pairs.size == 0:
        raise InputError("Mask has no sampled entries")
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise InputError("Edges must be (row, col) pairs")

    out_of_bounds = (
        (pairs[:, 0] < 0) | (pairs[:, 0] >= n_rows) | (pairs[:, 1] < 0) | (pairs[:, 1] >= n_cols)
    )
    if np.any(out_of_bounds):
        i, j = pairs[np.argmax(out_of_bounds)]
        raise InputError(f"Edge ({i}, {j}) lies outside a {n_rows}x{n_cols} grid")

    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs = pairs[order]
    duplicate = np.all(pairs[1:] == pairs[:-1], axis=1)
    if np.any(duplicate):
        i, j = pairs[np.argmax(duplicate)]
        raise InputError(f"Duplicate edge ({i}, {j})")
    return pairs


def _frozen_index(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


def sample_mask(edges: Iterable[tuple[int, int]], n_rows: int, n_cols: int) -> SampleMask:
    """
    Build a mask without any biregularity requirement.

    Raises:
        InputError: On out-of-range or duplicate edges
    """
    pairs = _edge_array(edges, n_rows, n_cols)
    return SampleMask(n_rows, n_cols, _frozen_index(pairs[:, 0]), _frozen_index(pairs[:, 1]))


def _first_offender(degrees: np.ndarray) -> int:
    reference = np.bincount(degrees).argmax()
    return int(np.argmax(degrees != reference))


def validate_biregular(edges, n_rows: int, n_cols: int) -> BiregularMask:
    """
    Check uniform degrees and compute the spectral data of E_Omega.

    Args:
        edges: Iterable of 0-based (row, col) pairs, or an (m, 2) array
        n_rows: n_r
        n_cols: n_c

    Returns:
        A populated BiregularMask

    Raises:
        InputError: On out-of-range or duplicate edges
        BiregularityError: If some row or column degree differs from the rest
    """
    pairs = _edge_array(edges, n_rows, n_cols)
    rows, cols = pairs[:, 0], pairs[:, 1]

    row_degrees = np.bincount(rows, minlength=n_rows)
    col_degrees = np.bincount(cols, minlength=n_cols)
    if np.any(row_degrees != row_degrees[0]):
        i = _first_offender(row_degrees)
        raise BiregularityError(f"Row {i} has degree {row_degrees[i]}; row degrees are not uniform")
    if np.any(col_degrees != col_degrees[0]):
        j = _first_offender(col_degrees)
        raise BiregularityError(f"Column {j} has degree {col_degrees[j]}; column degrees are not uniform")

    d_r, d_c = int(row_degrees[0]), int(col_degrees[0])
    indicator = np.zeros((n_rows, n_cols))
    indicator[rows, cols] = 1.0
    spectrum = singular_values(indicator)
    sigma1 = float(spectrum[0])
    sigma2 = float(spectrum[1]) if len(spectrum) > 1 else 0.0

    expected = math.sqrt(d_r * d_c)
    if abs(sigma1 - expected) > SIGMA1_RELATIVE_TOLERANCE * expected:
        raise NumericalFailureError(
            f"Leading singular value {sigma1} of a ({d_r},{d_c})-biregular mask differs from {expected}"
        )

    return BiregularMask(
        n_rows=n_rows,
        n_cols=n_cols,
        rows=_frozen_index(rows),
        cols=_frozen_index(cols),
        d_r=d_r,
        d_c=d_c,
        sigma1=sigma1,
        sigma2=sigma2,
    )


def as_biregular(mask: SampleMask) -> BiregularMask:
    """Upgrade a plain mask, validating biregularity."""
    if isinstance(mask, BiregularMask):
        return mask
    return validate_biregular(np.column_stack([mask.rows, mask.cols]), mask.n_rows, mask.n_cols)


def spectral_certificate(mask: BiregularMask) -> SpectralReport:
    """Compare sigma2 with the Ramanujan bigraph bound sqrt(d_r-1) + sqrt(d_c-1)."""
    bound = math.sqrt(mask.d_r - 1) + math.sqrt(mask.d_c - 1)
    return SpectralReport(
        sigma1=mask.sigma1,
        sigma2=mask.sigma2,
        ramanujan_bound=bound,
        is_ramanujan=mask.sigma2 <= bound + RAMANUJAN_SLACK,
    )


def is_connected(mask: SampleMask) -> bool:
    """
    Breadth-first search over the bipartite row/column graph of Omega.

    For a square non-bipartite graph used as its own biadjacency this is
    the bipartite double cover, which is connected iff the graph is.
    """
    n = mask.n_rows + mask.n_cols
    data = np.ones(mask.m)
    adjacency = scipy.sparse.coo_matrix(
        (data, (mask.rows, mask.cols + mask.n_rows)), shape=(n, n)
    ).tocsr()
    reached = breadth_first_order(adjacency, 0, directed=False, return_predecessors=False)
    return len(reached) == n


# LPS construction ---------------------------------------------------------


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, math.isqrt(n) + 1))


def legendre_symbol(a: int, q: int) -> int:
    """(a|q) for an odd prime q: 1, -1, or 0."""
    ls = pow(a % q, (q - 1) // 2, q)
    return -1 if ls == q - 1 else ls


def sqrt_minus_one(q: int) -> int:
    """Smallest i in [1, q-1] with i^2 = -1 (mod q)."""
    for x in range(1, q):
        if (x * x) % q == q - 1:
            return x
    raise ParameterError(f"-1 is not a square modulo {q}")


def four_square_generators(p: int) -> list[tuple[int, int, int, int]]:
    """
    All (a0, a1, a2, a3) with a0^2 + a1^2 + a2^2 + a3^2 = p, a0 > 0 odd, a1..a3 even.

    For a prime p = 1 (mod 4) there are exactly p + 1 of them.
    """
    limit = math.isqrt(p)
    evens = [a for a in range(-limit, limit + 1) if a % 2 == 0]
    solutions = [
        (a0, a1, a2, a3)
        for a0 in range(1, limit + 1, 2)
        for a1, a2, a3 in product(evens, repeat=3)
        if a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3 == p
    ]
    return sorted(solutions)


def lps_vertex_count(q: int) -> int:
    return q * (q * q - 1) // 2


def _canonical(mats: np.ndarray, q: int, inverse: np.ndarray) -> np.ndarray:
    # scale so the first nonzero entry (row-major) is 1; invertible => a or b nonzero
    pivot = np.where(mats[:, 0] != 0, mats[:, 0], mats[:, 1])
    return (mats * inverse[pivot][:, None]) % q


def _keys(mats: np.ndarray, q: int) -> np.ndarray:
    return ((mats[:, 0] * q + mats[:, 1]) * q + mats[:, 2]) * q + mats[:, 3]


def _pgl_vertices(q: int, square_determinant: bool) -> np.ndarray:
    """
    Canonical representatives of one coset of PSL(2,q) in PGL(2,q), sorted lexicographically.

    square_determinant=True gives PSL(2,q) itself, False the other coset.
    """
    squares = np.zeros(q, dtype=bool)
    squares[(np.arange(1, q) ** 2) % q] = True
    wanted = squares if square_determinant else ~squares
    wanted[0] = False

    b, c, d = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    b, c, d = b.ravel(), c.ravel(), d.ravel()
    keep = wanted[(d - b * c) % q]
    leading_one = np.column_stack([np.ones(keep.sum(), dtype=np.int64), b[keep], c[keep], d[keep]])

    c2, d2 = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
    c2, d2 = c2.ravel(), d2.ravel()
    keep2 = wanted[(-c2) % q]
    leading_zero = np.column_stack(
        [np.zeros(keep2.sum(), dtype=np.int64), np.ones(keep2.sum(), dtype=np.int64), c2[keep2], d2[keep2]]
    )

    vertices = np.vstack([leading_one, leading_zero]).astype(np.int64)
    return vertices[np.argsort(_keys(vertices, q), kind="stable")]


def _lookup(targets: np.ndarray, vertex_keys: np.ndarray, q: int) -> np.ndarray:
    keys = _keys(targets, q)
    index = np.minimum(np.searchsorted(vertex_keys, keys), len(vertex_keys) - 1)
    if np.any(vertex_keys[index] != keys):
        raise ConstructionError("A generator maps a vertex outside the expected coset of PSL(2,q)")
    return index


def lps_graph(p: int, q: int) -> BiregularMask:
    """
    Square LPS Ramanujan mask on q(q^2-1)/2 rows and columns with p + 1 generators.

    Rows are PSL(2,q) classes scaled so their first nonzero entry is 1,
    indexed in lexicographic order of their four entries; row g is joined
    to g*s for every generator s.

    When p is a square mod q the generators lie in PSL(2,q) and the mask is
    the adjacency matrix of the Cayley graph (columns indexed like rows).
    Otherwise the generators lie in the other coset of PGL(2,q), the Cayley
    graph is bipartite between the two cosets, and the mask is its
    biadjacency matrix with columns indexed by the other coset.

    Args:
        p: Prime, p = 1 (mod 4)
        q: Prime, q = 1 (mod 4), q != p

    Returns:
        A (p+1)-biregular square BiregularMask

    Raises:
        ParameterError: If p or q is not a prime congruent to 1 mod 4, or p == q
        ConstructionError: On self-loops, multiple edges, asymmetry or disconnection
    """
    for name, value in (("p", p), ("q", q)):
        if not is_prime(value) or value % 4 != 1:
            raise ParameterError(f"{name}={value} must be a prime congruent to 1 mod 4")
    if p == q:
        raise ParameterError("p and q must be distinct")

    i = sqrt_minus_one(q)
    quadruples = four_square_generators(p)
    if len(quadruples) != p + 1:
        raise ConstructionError(f"Expected {p + 1} four-square generators for p={p}, found {len(quadruples)}")

    inverse = np.zeros(q, dtype=np.int64)
    inverse[1:] = [pow(x, -1, q) for x in range(1, q)]

    generators = np.array(
        [[a0 + i * a1, a2 + i * a3, -a2 + i * a3, a0 - i * a1] for a0, a1, a2, a3 in quadruples],
        dtype=np.int64,
    ) % q
    generators = _canonical(generators, q, inverse)

    bipartite = legendre_symbol(p, q) != 1
    rows_vertices = _pgl_vertices(q, square_determinant=True)
    cols_vertices = _pgl_vertices(q, square_determinant=False) if bipartite else rows_vertices
    n = len(rows_vertices)
    if n != lps_vertex_count(q) or len(cols_vertices) != n:
        raise ConstructionError(f"Enumerated {n} PSL(2,{q}) elements, expected {lps_vertex_count(q)}")
    logger.debug("LPS(%d,%d): %d vertices, %d generators, bipartite=%s", p, q, n, len(generators), bipartite)

    # [[a,b],[c,d]] @ [[e,f],[g,h]] for every (vertex, generator) pair
    a, b, c, d = (rows_vertices[:, None, k] for k in range(4))
    e, f, g, h = (generators[None, :, k] for k in range(4))
    products = np.stack([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], axis=-1) % q
    products = _canonical(products.reshape(-1, 4), q, inverse)
    neighbors = _lookup(products, _keys(cols_vertices, q), q).reshape(n, p + 1)

    if not bipartite:
        loops = neighbors == np.arange(n)[:, None]
        if np.any(loops):
            v = int(np.argwhere(loops)[0][0])
            raise ConstructionError(f"Self-loop at vertex {v}: a generator is the identity in PSL(2,{q})")

    ordered = np.sort(neighbors, axis=1)
    repeated = ordered[:, 1:] == ordered[:, :-1]
    if np.any(repeated):
        v, k = np.argwhere(repeated)[0]
        raise ConstructionError(f"Multiple edges between vertices {v} and {ordered[v, k]} for p={p}, q={q}")

    rows = np.repeat(np.arange(n), p + 1)
    cols = neighbors.ravel()
    if not bipartite:
        forward = np.sort(rows * n + cols)
        backward = np.sort(cols * n + rows)
        if not np.array_equal(forward, backward):
            raise ConstructionError("Generator set is not closed under inversion; adjacency is not symmetric")

    try:
        mask = validate_biregular(np.column_stack([rows, cols]), n, n)
    except BiregularityError as exc:
        raise ConstructionError(f"LPS({p},{q}) column degrees are not uniform: {exc}") from exc
    if not is_connected(mask):
        raise ConstructionError(f"LPS({p},{q}) Cayley graph is not connected")
    logger.debug("LPS(%d,%d): sigma1=%.6f sigma2=%.6f", p, q, mask.sigma1, mask.sigma2)
    return mask


# Baselines ----------------------------------------------------------------


def random_mask(
    n_rows: int, n_cols: int, m: int, seed: int, replacement: bool = False
) -> frozenset[tuple[int, int]]:
    """
    Uniformly random sample set, deterministic in seed.

    Without replacement exactly m distinct entries are returned; with
    replacement m draws are made and repeats collapse.

    Raises:
        ParameterError: If m is negative or exceeds n_rows * n_cols without replacement
    """
    total = n_rows * n_cols
    if m < 0:
        raise ParameterError(f"Sample count must be non-negative, got {m}")
    if not replacement and m > total:
        raise ParameterError(f"Cannot draw {m} distinct entries from a {n_rows}x{n_cols} grid")

    rng = np.random.default_rng(seed)
    if replacement:
        flat = rng.integers(0, total, size=m)
    else:
        flat = rng.choice(total, size=m, replace=False)
    return frozenset((int(k // n_cols), int(k % n_cols)) for k in np.unique(flat))


def permutation_union_mask(n: int, d: int, seed: int) -> BiregularMask:
    """
    d-regular n x n mask as a union of d permutation matrices with no repeats.

    Each permutation is a perfect matching drawn on a randomly relabelled
    copy of the entries still unused; the unused pattern is (n-k)-regular
    bipartite after k rounds, so such a matching always exists.

    Raises:
        ParameterError: Unless 1 <= d <= n
    """
    if not 1 <= d <= n:
        raise ParameterError(f"Degree d={d} must lie in [1, {n}]")

    rng = np.random.default_rng(seed)
    used = np.zeros((n, n), dtype=bool)
    for _ in range(d):
        row_labels = rng.permutation(n)
        col_labels = rng.permutation(n)
        free = scipy.sparse.csr_matrix((~used[np.ix_(row_labels, col_labels)]).astype(np.int8))
        match = maximum_bipartite_matching(free, perm_type="column")
        if np.any(match < 0):
            raise ConstructionError("No perfect matching found on the unused entries")
        used[row_labels, col_labels[match]] = True

    return validate_biregular(np.argwhere(used), n, n)
