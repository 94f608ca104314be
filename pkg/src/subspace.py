"""
Tangent-space machinery and coherence parameters.

U_perp and V_perp are never formed: complements are applied as I - UU^T
and I - VV^T.
"""

from dataclasses import dataclass

import numpy as np

from .config import INPUT_ORTHONORMAL_TOLERANCE, RANK_TOLERANCE
from .errors import InputError, RankError, ShapeError
from .graphs import BiregularMask
from .linalg import SvdResult, as_matrix, spectral_norm, svd


@dataclass(frozen=True, eq=False)
class SubspacePair:
    """
    Reduced SVD factors X = U diag(gamma) V^T of a rank-r reference matrix.

    The pair determines the tangent space T = {U B^T + C V^T}.
    """

    U: np.ndarray
    gamma: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.gamma)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    def matrix(self) -> np.ndarray:
        return (self.U * self.gamma) @ self.V.T

    def w0(self) -> np.ndarray:
        """U V^T, the sign matrix of the reference."""
        return self.U @ self.V.T


def truncate(result: SvdResult, r: int, rank_tolerance: float = RANK_TOLERANCE) -> SubspacePair:
    """
    Keep the leading r singular triplets.

    Raises:
        RankError: If r < 1, r exceeds the number of singular values, or
            singulars[r-1] is at or below rank_tolerance * singulars[0]
    """
    if r < 1 or r > result.k:
        raise RankError(f"Rank {r} outside [1, {result.k}]")

    s = result.singulars
    if s[r - 1] <= rank_tolerance * s[0]:
        raise RankError(f"Rank {r} exceeds numerical rank: singular value {r} is {s[r - 1]:.3e}")

    return SubspacePair(U=result.U[:, :r], gamma=s[:r], V=result.V[:, :r])


def subspace_of(x, r: int) -> SubspacePair:
    return truncate(svd(x), r)


def _check_shape(z, sp: SubspacePair) -> np.ndarray:
    matrix = as_matrix(z)
    if matrix.shape != sp.shape:
        raise ShapeError(f"Matrix of shape {matrix.shape} does not match subspace shape {sp.shape}")
    return matrix


def project_T(z, sp: SubspacePair) -> np.ndarray:
    """P_T Z = UU^T Z + Z VV^T - UU^T Z VV^T."""
    matrix = _check_shape(z, sp)
    U, V = sp.U, sp.V
    left = U @ (U.T @ matrix)
    return left + ((matrix - left) @ V) @ V.T


def project_Tperp(z, sp: SubspacePair) -> np.ndarray:
    """(I - UU^T) Z (I - VV^T)."""
    matrix = _check_shape(z, sp)
    return matrix - project_T(matrix, sp)


def mu0_of(factor, tolerance: float = INPUT_ORTHONORMAL_TOLERANCE) -> float:
    """
    Coherence (n/r) * max_i ||U^i||^2 of a factor with orthonormal columns.

    Raises:
        InputError: If the columns are not orthonormal within tolerance
    """
    u = as_matrix(factor)
    n, r = u.shape
    deviation = np.max(np.abs(u.T @ u - np.eye(r)))
    if deviation > tolerance:
        raise InputError(f"Factor columns are not orthonormal (max deviation {deviation:.2e})")
    return float(n / r * np.max(np.sum(u * u, axis=1)))


def mu1_of(sp: SubspacePair) -> float:
    """sqrt(n_r n_c / r) * max |(UV^T)_ij|; reported only."""
    n_r, n_c = sp.shape
    return float(np.sqrt(n_r * n_c / sp.rank) * np.max(np.abs(sp.w0())))


def _gram_deviations(factor: np.ndarray, incidence: np.ndarray, alpha: float) -> np.ndarray:
    """||(1/alpha) sum_{l in N} F_l^T F_l - I||_S for each neighborhood (column of incidence)."""
    n, r = factor.shape
    outer = (factor[:, :, None] * factor[:, None, :]).reshape(n, r * r)
    grams = (incidence.T @ outer).reshape(-1, r, r) / alpha - np.eye(r)
    return np.max(np.abs(np.linalg.eigvalsh(grams)), axis=1)


def neighborhood_deviations(sp: SubspacePair, mask: BiregularMask) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-neighborhood Gram deviations of U over columns and V over rows.

    Returns:
        (deviations of U for each column j, deviations of V for each row i)
    """
    if mask.shape != sp.shape:
        raise ShapeError(f"Mask shape {mask.shape} does not match subspace shape {sp.shape}")
    e = mask.indicator
    return (
        _gram_deviations(sp.U, e, mask.alpha),
        _gram_deviations(sp.V, e.T, mask.alpha),
    )


def theta_graph(sp: SubspacePair, mask: BiregularMask) -> float:
    """
    A2 constant evaluated on the mask's own neighborhoods.

    Only the sets N(j) of the mask are examined, not every subset of size
    d_c; these are the sets the recovery argument applies the assumption to.
    """
    u_devs, v_devs = neighborhood_deviations(sp, mask)
    return float(max(u_devs.max(), v_devs.max()))


def phi_value(sigma1: float, sigma2: float, mu0: float, r: int) -> float:
    return sigma2 / sigma1 * mu0 * r


def phi_of(mask: BiregularMask, mu0: float, r: int) -> float:
    """(sigma2 / sigma1) * mu0 * r."""
    return phi_value(mask.sigma1, mask.sigma2, mu0, r)


class CenteredOperator:
    """
    The map Z -> M o Z with M = (1/alpha) E_Omega - 1.

    `apply` never forms M; `materialize` does, for norms and tests.
    """

    def __init__(self, mask: BiregularMask):
        self.mask = mask
        self.alpha = mask.alpha

    def apply(self, z) -> np.ndarray:
        matrix = as_matrix(z)
        if matrix.shape != self.mask.shape:
            raise ShapeError(f"Operand shape {matrix.shape} does not match mask shape {self.mask.shape}")
        return self.mask.indicator * matrix / self.alpha - matrix

    __call__ = apply

    def materialize(self) -> np.ndarray:
        return self.mask.indicator / self.alpha - 1.0

    def spectral_norm(self) -> float:
        return spectral_norm(self.materialize())


def centered_operator(mask: BiregularMask) -> CenteredOperator:
    return CenteredOperator(mask)


@dataclass(frozen=True)
class CoherenceReport:
    mu0_U: float
    mu0_V: float
    mu0: float
    mu1: float
    theta: float
    phi: float
    sigma1: float
    sigma2: float
    alpha: float

    def as_pairs(self) -> list[tuple[str, object]]:
        return [
            ("mu0_U", self.mu0_U),
            ("mu0_V", self.mu0_V),
            ("mu0", self.mu0),
            ("mu1", self.mu1),
            ("theta", self.theta),
            ("phi", self.phi),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("alpha", self.alpha),
        ]


def coherence_report(
    sp: SubspacePair, mask: BiregularMask, theta_override: float | None = None
) -> CoherenceReport:
    """
    Coherence of a (subspace, mask) pair.

    Args:
        sp: Reference subspaces
        mask: Biregular sample set of matching shape
        theta_override: Use this theta instead of evaluating it on the mask

    Returns:
        CoherenceReport with mu0 = max(mu0_U, mu0_V) and phi built from it
    """
    mu0_u = mu0_of(sp.U)
    mu0_v = mu0_of(sp.V)
    mu0 = max(mu0_u, mu0_v)
    theta = theta_graph(sp, mask) if theta_override is None else float(theta_override)
    return CoherenceReport(
        mu0_U=mu0_u,
        mu0_V=mu0_v,
        mu0=mu0,
        mu1=mu1_of(sp),
        theta=theta,
        phi=phi_of(mask, mu0, sp.rank),
        sigma1=mask.sigma1,
        sigma2=mask.sigma2,
        alpha=mask.alpha,
    )
