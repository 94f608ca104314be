"""
Nuclear-norm minimisation completion by ADMM with singular value thresholding.

Exact mode solves   min ||Z||_*  s.t.  E_Omega o Z = E_Omega o X.
Stable mode solves  min ||Z||_*  s.t.  ||E_Omega o Z - E_Omega o X_W||_F <= eps.

Both use the scaled-form iteration
    X   <- svt(Z - L, 1/penalty)
    Z   <- projection of X + L onto the constraint set
    L   <- L + X - Z
and differ only in the projection. Runs are deterministic: no random state
is touched.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .config import (
    DEFAULT_DUAL_TOLERANCE,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_PENALTY,
    DEFAULT_PRIMAL_TOLERANCE,
    DEFAULT_SUCCESS_THRESHOLD,
    MONOTONE_BURN_IN,
)
from .errors import InputError, ParameterError, ShapeError
from .graphs import SampleMask
from .linalg import as_matrix, frobenius_norm, nuclear_norm, svd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    """
    ADMM settings.

    Tolerances are relative to the Frobenius norm of the observations.
    """

    max_iterations: int = DEFAULT_MAX_ITERATIONS
    primal_tolerance: float = DEFAULT_PRIMAL_TOLERANCE
    dual_tolerance: float = DEFAULT_DUAL_TOLERANCE
    penalty: float = DEFAULT_PENALTY

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if self.primal_tolerance <= 0 or self.dual_tolerance <= 0:
            raise ParameterError("Solver tolerances must be positive")
        if self.penalty <= 0:
            raise ParameterError(f"penalty must be positive, got {self.penalty}")


@dataclass(frozen=True, eq=False)
class CompletionOutcome:
    X_hat: np.ndarray
    iterations_used: int
    residual_on_omega: float
    nuclear_norm_value: float
    converged: bool

    def as_pairs(self) -> list[tuple[str, object]]:
        return [
            ("converged", self.converged),
            ("iterations_used", self.iterations_used),
            ("residual_on_omega", self.residual_on_omega),
            ("nuclear_norm_value", self.nuclear_norm_value),
        ]


def _shrink(a: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    result = svd(a)
    shrunk = np.maximum(result.singulars - tau, 0.0)
    keep = shrunk > 0
    matrix = (result.U[:, keep] * shrunk[keep]) @ result.V[:, keep].T
    return matrix, shrunk


def svt(a, tau: float) -> np.ndarray:
    """
    Singular value thresholding U diag(max(s - tau, 0)) V^T.

    This is the proximal operator of tau * ||.||_*.
    """
    if tau < 0:
        raise ParameterError(f"Threshold must be non-negative, got {tau}")
    return _shrink(as_matrix(a), tau)[0]


def _observations(observed, mask: SampleMask) -> np.ndarray:
    matrix = as_matrix(observed)
    if matrix.shape != mask.shape:
        raise ShapeError(f"Observed matrix of shape {matrix.shape} does not match mask shape {mask.shape}")
    return matrix * mask.indicator


def _exact_projection(support: np.ndarray, target: np.ndarray):
    def project(v: np.ndarray) -> np.ndarray:
        return np.where(support, target, v)

    return project


def _ball_projection(indicator: np.ndarray, target: np.ndarray, radius: float):
    def project(v: np.ndarray) -> np.ndarray:
        residual = indicator * v - target
        norm = frobenius_norm(residual)
        if norm <= radius:
            return v
        return v - residual + residual * (radius / norm)

    return project


def _admm(target: np.ndarray, project, opts: SolverOptions) -> tuple[np.ndarray, int, bool]:
    """Run the scaled ADMM loop on unit-scale data; returns (Z, iterations, converged)."""
    reference = frobenius_norm(target)
    tau = 1.0 / opts.penalty
    z = project(target)
    dual = np.zeros_like(z)
    previous_nuclear = np.inf
    violations = 0

    for iteration in range(1, opts.max_iterations + 1):
        x, shrunk = _shrink(z - dual, tau)
        z_previous = z
        z = project(x + dual)
        dual += x - z

        current_nuclear = float(shrunk.sum())
        if iteration > MONOTONE_BURN_IN and current_nuclear > previous_nuclear * (1 + 1e-12):
            violations += 1
        previous_nuclear = current_nuclear

        primal_residual = frobenius_norm(x - z) / reference
        dual_residual = opts.penalty * frobenius_norm(z - z_previous) / reference
        if primal_residual < opts.primal_tolerance and dual_residual < opts.dual_tolerance:
            if violations:
                logger.debug("Nuclear norm increased on %d iterations after burn-in", violations)
            return z, iteration, True

    if violations:
        logger.debug("Nuclear norm increased on %d iterations after burn-in", violations)
    logger.warning(
        "ADMM did not converge in %d iterations (primal %.3e, dual %.3e)",
        opts.max_iterations,
        primal_residual,
        dual_residual,
    )
    return z, opts.max_iterations, False


def _outcome(z: np.ndarray, observations: np.ndarray, mask: SampleMask, iterations: int, converged: bool):
    return CompletionOutcome(
        X_hat=z,
        iterations_used=iterations,
        residual_on_omega=frobenius_norm(mask.indicator * z - observations),
        nuclear_norm_value=nuclear_norm(z),
        converged=converged,
    )


def complete_exact(observed, mask: SampleMask, opts: SolverOptions | None = None) -> CompletionOutcome:
    """
    Minimum nuclear-norm matrix agreeing with the observations on Omega.

    Entries of `observed` off Omega are ignored. The data are rescaled to unit
    RMS over Omega for the iteration and the result scaled back.

    Args:
        observed: Dense matrix whose Omega entries are the samples
        mask: Sample set
        opts: Solver settings, defaults when omitted

    Returns:
        CompletionOutcome; converged is False when max_iterations ran out

    Raises:
        ShapeError: If observed and mask differ in shape
    """
    opts = opts or SolverOptions()
    observations = _observations(observed, mask)
    scale = frobenius_norm(observations) / np.sqrt(mask.m)
    if scale == 0.0:
        return _outcome(np.zeros(mask.shape), observations, mask, 0, True)

    target = observations / scale
    project = _exact_projection(mask.support, target)
    if mask.m == mask.n_rows * mask.n_cols:
        return _outcome(project(np.zeros(mask.shape)) * scale, observations, mask, 0, True)

    z, iterations, converged = _admm(target, project, opts)
    return _outcome(z * scale, observations, mask, iterations, converged)


def complete_stable(
    observed_noisy, mask: SampleMask, epsilon: float, opts: SolverOptions | None = None
) -> CompletionOutcome:
    """
    Minimum nuclear-norm matrix within Frobenius distance epsilon of the noisy samples on Omega.

    epsilon = 0 gives the exact-mode iteration. When epsilon is at least the
    norm of the samples the zero matrix is returned without iterating.

    Raises:
        ParameterError: If epsilon is negative
        ShapeError: If observed and mask differ in shape
    """
    if epsilon < 0:
        raise ParameterError(f"epsilon must be non-negative, got {epsilon}")
    opts = opts or SolverOptions()
    observations = _observations(observed_noisy, mask)
    sample_norm = frobenius_norm(observations)
    if epsilon >= sample_norm:
        return _outcome(np.zeros(mask.shape), observations, mask, 0, True)
    if epsilon == 0.0:
        return complete_exact(observations, mask, opts)

    scale = sample_norm / np.sqrt(mask.m)
    target = observations / scale
    project = _ball_projection(mask.indicator, target, epsilon / scale)
    z, iterations, converged = _admm(target, project, opts)
    return _outcome(z * scale, observations, mask, iterations, converged)


def relative_error(x_hat, x_true) -> float:
    """
    ||X_hat - X||_F / ||X||_F.

    Raises:
        InputError: If X_true is zero
        ShapeError: If the shapes differ
    """
    estimate = as_matrix(x_hat)
    truth = as_matrix(x_true)
    if estimate.shape != truth.shape:
        raise ShapeError(f"Estimate shape {estimate.shape} does not match truth shape {truth.shape}")
    norm = frobenius_norm(truth)
    if norm == 0.0:
        raise InputError("Relative error is undefined for a zero reference matrix")
    return frobenius_norm(estimate - truth) / norm


def recovery_success(x_hat, x_true, threshold: float = DEFAULT_SUCCESS_THRESHOLD) -> bool:
    return relative_error(x_hat, x_true) < threshold
