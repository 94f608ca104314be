import numpy as np
import pytest

from src.graphs import lps_graph, validate_biregular
from src.subspace import SubspacePair


def flat_sign_factor(n: int, r: int) -> np.ndarray:
    """
    n x r orthonormal factor with entries +-1/sqrt(n) (Walsh columns), so mu0 = 1.

    n must be a multiple of the smallest power of two above r.
    """
    rows = np.arange(n)[:, None]
    cols = np.arange(1, r + 1)[None, :]
    popcount = np.vectorize(lambda k: bin(k).count("1"))
    return (-1.0) ** popcount(rows & cols) / np.sqrt(n)


def complement_of_permutation(n: int, seed: int = 0):
    """All entries except one random permutation: (n-1)-regular with sigma2 = 1."""
    perm = np.random.default_rng(seed).permutation(n)
    edges = [(i, j) for i in range(n) for j in range(n) if j != perm[i]]
    return validate_biregular(edges, n, n)


def random_orthonormal(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return q


@pytest.fixture(scope="session")
def lps_5_13():
    return lps_graph(5, 13)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def dense_mask():
    return complement_of_permutation(60)


@pytest.fixture(scope="session")
def flat_pair():
    """Rank-2 subspaces of a 60 x 60 matrix with mu0 = 1."""
    u = flat_sign_factor(60, 2)
    v = flat_sign_factor(60, 2)[::-1].copy()
    return SubspacePair(U=u, gamma=np.array([3.0, 1.0]), V=v)


@pytest.fixture(scope="session")
def lps_pair(lps_5_13):
    """Random rank-2 subspaces sized for LPS(5,13)."""
    rng = np.random.default_rng(7)
    n = lps_5_13.n_rows
    return SubspacePair(
        U=random_orthonormal(n, 2, rng),
        gamma=np.array([2.0, 1.0]),
        V=random_orthonormal(n, 2, rng),
    )
