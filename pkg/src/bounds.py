"""
Recovery certificates for nuclear-norm completion on biregular masks.

Two families of checks live here:
  - closed-form constants (k1, k2, k3, c, gamma, alpha thresholds) deciding
    whether exact and stable recovery are guaranteed for given coherence
    parameters
  - explicit dual certificates Y supported on Omega, built in one step or by
    iterated tangent-space correction, and audited condition by condition

Infeasibility is reported as data with reasons; only malformed inputs raise.

`RecoveryCertificate.c` is (1-k1) - k3/sqrt(alpha(1-k2)) and is the value
gamma is built from. `c_printed` is the alternative closed form, reported
alongside for comparison only.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import CERTIFICATE_SLACK, DEFAULT_CERTIFICATE_SAMPLES
from .errors import CertificateError, ParameterError, ShapeError
from .graphs import BiregularMask
from .linalg import as_matrix, frobenius_norm, spectral_norm
from .subspace import SubspacePair, mu0_of, phi_of, project_T, project_Tperp, theta_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecoveryCertificate:
    """
    Constants of the deterministic recovery guarantee.

    Attributes:
        k1: phi, bound on the T-perp spectral norm of the certificate
        k2: theta + phi, operator bound of (1/alpha) P_T E_Omega - I on T
        k3: sqrt(r (theta^2 + phi^2)), bound on the T-component deviation
        alpha: Sampling fraction the certificate was evaluated at
        alpha_threshold: r(theta^2+phi^2) / ((1-theta-phi)(1-phi^2))
        alpha_threshold_gate: Smallest alpha for which c > 0
        c: (1-k1) - k3 / sqrt(alpha (1-k2))
        c_printed: (1-phi) - sqrt(r alpha (1-theta-phi)(theta^2+phi^2))
        gamma: Noise amplification factor of the stable bound
        feasible: Every condition holds
        reasons: Failed conditions, empty when feasible
    """

    k1: float
    k2: float
    k3: float
    alpha: float
    alpha_threshold: float
    alpha_threshold_gate: float
    c: float
    c_printed: float
    gamma: float
    feasible: bool
    reasons: tuple[str, ...] = ()

    def as_pairs(self) -> list[tuple[str, object]]:
        return [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("alpha", self.alpha),
            ("alpha_threshold", self.alpha_threshold),
            ("alpha_threshold_gate", self.alpha_threshold_gate),
            ("c", self.c),
            ("c_printed", self.c_printed),
            ("gamma", self.gamma),
            ("feasible", self.feasible),
            ("reasons", list(self.reasons)),
        ]


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """
    A matrix Y supported on Omega with its two defining norms.

    `history` holds ||W_i||_F for i = 0..iterations.
    """

    Y: np.ndarray
    deviation_T: float
    spectral_Tperp: float
    iterations: int
    history: tuple[float, ...] = field(default_factory=tuple)

    def decay_ratios(self) -> list[float]:
        return [
            after / before if before > 0 else 0.0
            for before, after in zip(self.history, self.history[1:])
        ]


@dataclass(frozen=True)
class Lemma31Verdict:
    """Outcome of auditing a candidate certificate against k1, k2, k3."""

    spectral_ok: bool
    sampling_ok: bool
    deviation_ok: bool
    gate_ok: bool
    spectral_Tperp: float
    deviation_T: float
    k1: float
    k2: float
    k3: float
    k2_sampled: float
    k2_proven: float
    n_samples: int
    c: float
    bound_factor: float | None
    reasons: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.spectral_ok and self.sampling_ok and self.deviation_ok and self.gate_ok

    def as_pairs(self) -> list[tuple[str, object]]:
        return [
            ("spectral_Tperp", self.spectral_Tperp),
            ("k1", self.k1),
            ("spectral_ok", self.spectral_ok),
            ("k2_sampled", self.k2_sampled),
            ("k2_proven", self.k2_proven),
            ("k2", self.k2),
            ("n_samples", self.n_samples),
            ("sampling_ok", self.sampling_ok),
            ("deviation_T", self.deviation_T),
            ("k3", self.k3),
            ("deviation_ok", self.deviation_ok),
            ("gate_ok", self.gate_ok),
            ("c", self.c),
            ("bound_factor", self.bound_factor),
            ("verdict", "pass" if self.passed else "fail"),
            ("reasons", list(self.reasons)),
        ]


def _c_constant(k1: float, k2: float, k3: float, alpha: float) -> float:
    if k1 >= 1.0 or k2 >= 1.0 or alpha <= 0.0:
        return -math.inf
    return (1.0 - k1) - k3 / math.sqrt(alpha * (1.0 - k2))


def _gamma(c: float, k2: float, alpha: float, n: int) -> float:
    if c <= 0.0 or k2 >= 1.0 or alpha <= 0.0:
        return math.inf
    return 2.0 * math.sqrt(1.0 + n / c**2 * (1.0 + 1.0 / (alpha * (1.0 - k2))))


def certify_theorem35(
    mu0: float, theta: float, phi: float, r: int, alpha: float, n_r: int
) -> RecoveryCertificate:
    """
    Evaluate the recovery guarantee for given coherence parameters.

    Args:
        mu0: Coherence of the reference subspaces (recorded through phi)
        theta: Neighborhood Gram deviation
        phi: (sigma2 / sigma1) * mu0 * r
        r: Rank
        alpha: Sampling fraction
        n_r: Smaller matrix dimension, entering gamma

    Returns:
        RecoveryCertificate; infeasible certificates list their reasons

    Raises:
        ParameterError: If any input is negative or r < 1
    """
    if min(mu0, theta, phi, alpha) < 0 or n_r < 0:
        raise ParameterError("Certificate inputs must be non-negative")
    if r < 1:
        raise ParameterError(f"Rank must be at least 1, got {r}")

    k1 = phi
    k2 = theta + phi
    squares = theta**2 + phi**2
    k3 = math.sqrt(r * squares)
    reasons = []

    if k2 >= 1.0:
        reasons.append("theta+phi >= 1")
        threshold = gate = math.inf
        c_printed = math.nan
    else:
        threshold = r * squares / ((1.0 - k2) * (1.0 - phi**2))
        gate = r * squares / ((1.0 - k2) * (1.0 - phi) ** 2)
        c_printed = (1.0 - phi) - math.sqrt(r * alpha * (1.0 - k2) * squares)
        if alpha <= threshold:
            reasons.append(f"alpha <= alpha_threshold ({alpha:.6g} <= {threshold:.6g})")

    c = _c_constant(k1, k2, k3, alpha)
    if k2 < 1.0 and c <= 0.0:
        reasons.append(f"gate k3 >= (1-k1)*sqrt(alpha*(1-k2)) (alpha <= {gate:.6g})")

    gamma = _gamma(c, k2, alpha, n_r)
    if reasons:
        logger.debug("Certificate infeasible: %s", "; ".join(reasons))

    return RecoveryCertificate(
        k1=k1,
        k2=k2,
        k3=k3,
        alpha=alpha,
        alpha_threshold=threshold,
        alpha_threshold_gate=gate,
        c=c,
        c_printed=c_printed,
        gamma=gamma,
        feasible=not reasons,
        reasons=tuple(reasons),
    )


def error_bound(cert: RecoveryCertificate, epsilon: float, delta: float) -> float:
    """
    (gamma + delta) * epsilon.

    Raises:
        CertificateError: If the certificate is infeasible
        ParameterError: If epsilon < 0 or delta <= 0
    """
    if not cert.feasible:
        raise CertificateError("Error bound needs a feasible certificate: " + "; ".join(cert.reasons))
    if epsilon < 0:
        raise ParameterError(f"epsilon must be non-negative, got {epsilon}")
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    return (cert.gamma + delta) * epsilon


def error_bound_limit(cert: RecoveryCertificate, epsilon: float) -> float:
    """gamma * epsilon, the infimum of error_bound over delta > 0."""
    if not cert.feasible:
        raise CertificateError("Error bound needs a feasible certificate: " + "; ".join(cert.reasons))
    if epsilon < 0:
        raise ParameterError(f"epsilon must be non-negative, got {epsilon}")
    return cert.gamma * epsilon


def _check_mask(sp: SubspacePair, mask: BiregularMask) -> None:
    if mask.shape != sp.shape:
        raise ShapeError(f"Mask shape {mask.shape} does not match subspace shape {sp.shape}")


def dual_certificate_simple(sp: SubspacePair, mask: BiregularMask) -> DualCertificate:
    """Y = (1/alpha) E_Omega o (U V^T)."""
    _check_mask(sp, mask)
    w0 = sp.w0()
    y = mask.indicator * w0 / mask.alpha
    deviation = frobenius_norm(project_T(y, sp) - w0)
    return DualCertificate(
        Y=y,
        deviation_T=deviation,
        spectral_Tperp=spectral_norm(project_Tperp(y, sp)),
        iterations=1,
        history=(frobenius_norm(w0), deviation),
    )


def dual_certificate_iterate(sp: SubspacePair, mask: BiregularMask, p: int) -> DualCertificate:
    """
    Iterated certificate Y_p = sum_{i<p} (1/alpha) E_Omega o W_i.

    Each step removes the tangent component just covered:
    W_{i+1} = W_i - (1/alpha) P_T(E_Omega o W_i), so P_T(Y_p) = W_0 - W_p.

    Args:
        sp: Reference subspaces
        mask: Biregular sample set
        p: Number of correction steps (p = 0 gives Y = 0)

    Returns:
        DualCertificate with deviation_T = ||W_p||_F and the full decay history
    """
    if p < 0:
        raise ParameterError(f"Iteration count must be non-negative, got {p}")
    _check_mask(sp, mask)

    e = mask.indicator
    w = sp.w0()
    y = np.zeros(sp.shape)
    history = [frobenius_norm(w)]
    for _ in range(p):
        step = e * w / mask.alpha
        y += step
        w = w - project_T(step, sp)
        history.append(frobenius_norm(w))

    spectral = spectral_norm(project_Tperp(y, sp)) if p > 0 else 0.0
    return DualCertificate(
        Y=y,
        deviation_T=history[-1],
        spectral_Tperp=spectral,
        iterations=p,
        history=tuple(history),
    )


def sampled_operator_norm(sp: SubspacePair, mask: BiregularMask, n_samples: int, seed: int) -> float:
    """
    Largest observed ||(1/alpha) P_T(E_Omega o Z) - Z||_F / ||Z||_F over random Z in T.

    Each Z is P_T of a standard Gaussian matrix drawn from default_rng(seed).
    """
    _check_mask(sp, mask)
    rng = np.random.default_rng(seed)
    e = mask.indicator
    worst = 0.0
    for _ in range(n_samples):
        z = project_T(rng.standard_normal(sp.shape), sp)
        norm = frobenius_norm(z)
        if norm == 0.0:
            continue
        ratio = frobenius_norm(project_T(e * z, sp) / mask.alpha - z) / norm
        worst = max(worst, ratio)
    return worst


def lemma31_check(
    y,
    sp: SubspacePair,
    mask: BiregularMask,
    k1: float,
    k2: float,
    k3: float,
    n_samples: int = DEFAULT_CERTIFICATE_SAMPLES,
    seed: int = 0,
) -> Lemma31Verdict:
    """
    Audit a candidate certificate condition by condition.

    Checks ||P_Tperp(Y)||_S <= k1, the operator bound k2 on T by random
    sampling, ||U V^T - P_T(Y)||_F <= k3 and the gate
    k3 < (1-k1) sqrt(alpha (1-k2)). The proven bound theta + phi is reported
    next to the sampled one.

    Raises:
        ShapeError: If Y, the mask and the subspaces disagree in shape
        CertificateError: If Y has a non-zero entry off Omega
    """
    if n_samples < 0:
        raise ParameterError(f"Sample count must be non-negative, got {n_samples}")
    _check_mask(sp, mask)
    candidate = as_matrix(y)
    if candidate.shape != sp.shape:
        raise ShapeError(f"Certificate shape {candidate.shape} does not match subspace shape {sp.shape}")

    off_support = np.count_nonzero(candidate[~mask.support])
    if off_support:
        raise CertificateError(f"Certificate has {off_support} non-zero entries outside the sample set")

    spectral = spectral_norm(project_Tperp(candidate, sp))
    deviation = frobenius_norm(sp.w0() - project_T(candidate, sp))
    k2_sampled = sampled_operator_norm(sp, mask, n_samples, seed)
    mu0 = max(mu0_of(sp.U), mu0_of(sp.V))
    k2_proven = theta_graph(sp, mask) + phi_of(mask, mu0, sp.rank)

    reasons = []
    spectral_ok = spectral <= k1 + CERTIFICATE_SLACK
    if not spectral_ok:
        reasons.append(f"||P_Tperp(Y)||_S = {spectral:.6g} > k1 = {k1:.6g}")
    sampling_ok = k2_sampled <= k2 + CERTIFICATE_SLACK
    if not sampling_ok:
        reasons.append(f"sampled operator norm {k2_sampled:.6g} > k2 = {k2:.6g}")
    deviation_ok = deviation <= k3 + CERTIFICATE_SLACK
    if not deviation_ok:
        reasons.append(f"||UV^T - P_T(Y)||_F = {deviation:.6g} > k3 = {k3:.6g}")

    c = _c_constant(k1, k2, k3, mask.alpha)
    gate_ok = c > 0.0
    if not gate_ok:
        reasons.append("gate k3 < (1-k1)*sqrt(alpha*(1-k2)) fails")

    bound_factor = _gamma(c, k2, mask.alpha, min(sp.shape)) if gate_ok else None
    return Lemma31Verdict(
        spectral_ok=spectral_ok,
        sampling_ok=sampling_ok,
        deviation_ok=deviation_ok,
        gate_ok=gate_ok,
        spectral_Tperp=spectral,
        deviation_T=deviation,
        k1=k1,
        k2=k2,
        k3=k3,
        k2_sampled=k2_sampled,
        k2_proven=k2_proven,
        n_samples=n_samples,
        c=c,
        bound_factor=bound_factor,
        reasons=tuple(reasons),
    )


def prior_bound_comparison(mu0: float, r: int) -> float:
    """Degree 144 mu0^2 r^2 asked for by an earlier, unproven recovery claim."""
    if mu0 <= 0 or r <= 0:
        raise ParameterError("mu0 and r must be positive")
    return 144.0 * mu0**2 * r**2
