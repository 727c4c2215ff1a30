"""Maximum-likelihood density-matrix reconstruction from photon counts.

The data model is Poissonian: setting j collects ``n_j`` counts with
mean ``N * p_j`` where ``p_j = <j|rho|j>``.  The unknown mean flux N is
profiled out analytically (``N_hat = sum(n) / sum(p)``), and the
likelihood maximum is found by iterating the extremal equation
``R rho R = G rho G`` from the maximally mixed state, with

    R = sum_j (n_j / p_j) |j><j|
    G = (sum_j n_j) / (sum_j p_j) * sum_j |j><j|

damped by a dilution factor for stability on noisy data.

Projectors are passed as an array of ket component rows; records only
need an integer count attribute ``n``, so this module is independent of
how the projector states were produced.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateMeasurementError, EmptySubspaceError,
                     InvalidArgumentError, InvalidStateError)

HERMITICITY_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
TRACE_TOL = 1e-10

#: p_j values below this are clamped before dividing in the R operator.
PROBABILITY_FLOOR = 1e-12

#: Relative eigenvalue threshold separating the support of G from its kernel.
SUPPORT_THRESHOLD = 1e-10

#: Smallest dilution factor tried before declaring a likelihood plateau.
MIN_DILUTION = 2.0 ** -6


@dataclass
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace complex matrix."""

    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def pure_state(vector) -> DensityMatrix:
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def validate_state(rho: DensityMatrix) -> None:
    """Raise InvalidStateError unless rho satisfies all invariants."""
    m = rho.entries
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got {m.shape}")
    herm = np.max(np.abs(m - m.conj().T))
    if herm > HERMITICITY_TOL:
        raise InvalidStateError(f"not Hermitian: max asymmetry {herm:.3e}")
    trace = np.trace(m)
    if abs(trace - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace is {trace}, expected 1")
    eigenvalues = np.linalg.eigvalsh(m)
    if eigenvalues.min() < EIGENVALUE_FLOOR:
        raise InvalidStateError(
            f"negative eigenvalue {eigenvalues.min():.3e} below tolerance")


def purity(rho: DensityMatrix) -> float:
    return float(np.real(np.trace(rho.entries @ rho.entries)))


def fidelity_to_pure(rho: DensityMatrix, psi) -> float:
    """Overlap ``<psi|rho|psi>`` with a (normalized) pure target state."""
    v = np.asarray(psi, dtype=complex)
    v = v / np.linalg.norm(v)
    return float(np.real(v.conj() @ rho.entries @ v))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    diff = a.entries - b.entries
    eigenvalues = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(eigenvalues)))


@dataclass
class ReconstructionOptions:
    max_iterations: int = 5000
    log_likelihood_tolerance: float = 1e-9
    dilution: float = 0.5

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")
        if self.log_likelihood_tolerance <= 0:
            raise InvalidArgumentError("log_likelihood_tolerance must be > 0")
        if not 0.0 < self.dilution <= 1.0:
            raise InvalidArgumentError("dilution must be in (0, 1]")


@dataclass
class ReconstructionDiagnostics:
    iterations: int
    converged: bool
    log_likelihood_trace: np.ndarray
    extremal_residual: float
    extremal_residual_relative: float
    regularization_events: int
    final_probabilities: np.ndarray
    mean_flux_estimate: float
    dilution_final: float
    rank_warning: str | None = None


def _counts(records) -> np.ndarray:
    n = np.asarray([r.n for r in records], dtype=float)
    if np.any(n < 0):
        raise InvalidArgumentError("counts must be non-negative")
    return n


def _projector_array(projectors) -> np.ndarray:
    P = np.asarray(projectors, dtype=complex)
    if P.ndim != 2:
        raise InvalidArgumentError("projectors must be a (settings, dim) array")
    return P


def detection_probabilities(rho_entries: np.ndarray, projectors: np.ndarray) -> np.ndarray:
    """``p_j = <j|rho|j>`` for every projector row, clipped to [0, 1]."""
    p = np.sum((projectors.conj() @ rho_entries) * projectors, axis=1)
    return np.clip(p.real, 0.0, 1.0)


def log_likelihood(rho: DensityMatrix, records, projectors) -> float:
    """Profiled Poisson log-likelihood of the data under ``rho``.

    The mean flux is replaced by its analytic maximizer
    ``N_hat = sum(n) / sum(p)``; the additive term from the factorials
    is dropped.  Returns ``-inf`` when the model assigns zero
    probability to an observed (nonzero) count.
    """
    n = _counts(records)
    P = _projector_array(projectors)
    p = detection_probabilities(rho.entries, P)
    total_n = n.sum()
    if total_n == 0:
        return 0.0
    total_p = p.sum()
    if total_p <= 0:
        return float("-inf")
    n_hat = total_n / total_p
    mean = n_hat * p
    observed = n > 0
    if np.any(mean[observed] <= 0):
        return float("-inf")
    return float(np.sum(n[observed] * np.log(mean[observed])) - total_n)


def r_operator(rho: DensityMatrix, records, projectors):
    """``R = sum_j (n_j/p_j) |j><j|`` with small-p regularization.

    Returns
    -------
    (R, regularization_events)
        The Hermitian PSD operator and the number of settings whose
        observed count had to be paired with a clamped probability.
    """
    n = _counts(records)
    P = _projector_array(projectors)
    p = detection_probabilities(rho.entries, P)
    events = int(np.count_nonzero((p < PROBABILITY_FLOOR) & (n > 0)))
    p = np.maximum(p, PROBABILITY_FLOOR)
    R = _weighted_projector_sum(n / p, P)
    return R, events


def _weighted_projector_sum(weights: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Hermitian ``sum_j weights[j] |j><j|`` from ket rows."""
    M = (P * weights[:, np.newaxis]).T @ P.conj()
    return 0.5 * (M + M.conj().T)


def g_operator(records, rho: DensityMatrix, projectors) -> np.ndarray:
    """``G = (sum n / sum p) * sum_j |j><j|``."""
    n = _counts(records)
    P = _projector_array(projectors)
    p = detection_probabilities(rho.entries, P)
    total_p = p.sum()
    if total_p <= 0:
        raise DegenerateMeasurementError(
            "measurement assigns zero total probability to the state")
    return (n.sum() / total_p) * _weighted_projector_sum(np.ones(len(n)), P)


def _inverse_sqrt_on_support(scale: float, s_values: np.ndarray,
                             s_vectors: np.ndarray) -> np.ndarray:
    """PSD inverse square root of ``scale * S`` (identity on the kernel)."""
    dim = s_values.size
    if scale <= 0:
        return np.eye(dim, dtype=complex)
    support = s_values > SUPPORT_THRESHOLD * s_values.max()
    diag = np.ones(dim)
    diag[support] = 1.0 / np.sqrt(scale * s_values[support])
    return (s_vectors * diag) @ s_vectors.conj().T


def reconstruct(records, projectors, dim: int,
                options: ReconstructionOptions | None = None):
    """Maximum-likelihood state estimate from count records.

    Iterates ``rho <- T rho T^dag / tr`` with
    ``T = (1 - a) I + a G^{-1/2} R G^{-1/2}`` starting from the
    maximally mixed state.  The dilution ``a`` is halved (down to
    ``MIN_DILUTION``) whenever a step would decrease the profiled
    log-likelihood, which keeps the likelihood trace non-decreasing;
    iteration stops when the per-step improvement falls below the
    tolerance or ``max_iterations`` is reached (the result is then
    returned with ``converged=False``, never raised).

    Returns
    -------
    (DensityMatrix, ReconstructionDiagnostics)
    """
    if options is None:
        options = ReconstructionOptions()
    n = _counts(records)
    P = _projector_array(projectors)
    if P.shape[0] != n.size:
        raise InvalidArgumentError(
            f"{n.size} records but {P.shape[0]} projectors")
    if P.shape[1] != dim:
        raise InvalidArgumentError(
            f"projector rows have dimension {P.shape[1]}, expected {dim}")

    rho = np.eye(dim, dtype=complex) / dim
    S = _weighted_projector_sum(np.ones(n.size), P)
    s_values, s_vectors = np.linalg.eigh(S)

    def loglik(entries):
        p = detection_probabilities(entries, P)
        total_p = p.sum()
        if n.sum() == 0:
            return 0.0, p
        if total_p <= 0:
            return float("-inf"), p
        n_hat = n.sum() / total_p
        mean = n_hat * p
        observed = n > 0
        if np.any(mean[observed] <= 0):
            return float("-inf"), p
        return float(np.sum(n[observed] * np.log(mean[observed])) - n.sum()), p

    ll, p = loglik(rho)
    trace_ll = [ll]
    regularization_events = 0
    alpha = options.dilution
    converged = False
    iterations = 0

    for iterations in range(1, options.max_iterations + 1):
        total_p = p.sum()
        if total_p <= 0:
            raise DegenerateMeasurementError(
                "measurement assigns zero total probability to the state")
        scale = n.sum() / total_p
        p_reg = np.maximum(p, PROBABILITY_FLOOR)
        regularization_events += int(
            np.count_nonzero((p < PROBABILITY_FLOOR) & (n > 0)))
        R = _weighted_projector_sum(n / p_reg, P)
        g_inv_sqrt = _inverse_sqrt_on_support(scale, s_values, s_vectors)
        core = g_inv_sqrt @ R @ g_inv_sqrt

        accepted = False
        while True:
            T = (1.0 - alpha) * np.eye(dim) + alpha * core
            candidate = T @ rho @ T.conj().T
            candidate = 0.5 * (candidate + candidate.conj().T)
            candidate /= np.real(np.trace(candidate))
            ll_new, p_new = loglik(candidate)
            if ll_new >= ll - 1e-12:
                accepted = True
                break
            if alpha <= MIN_DILUTION:
                break
            alpha = max(alpha / 2.0, MIN_DILUTION)
        if not accepted:
            converged = True
            break
        improvement = ll_new - ll
        rho, ll, p = candidate, ll_new, p_new
        trace_ll.append(ll)
        if improvement < options.log_likelihood_tolerance:
            converged = True
            break

    total_p = p.sum()
    n_hat = n.sum() / total_p if total_p > 0 else 0.0
    p_reg = np.maximum(p, PROBABILITY_FLOOR)
    R = _weighted_projector_sum(n / p_reg, P)
    G = (n.sum() / total_p) * S if total_p > 0 else np.zeros_like(S)
    lhs = R @ rho @ R
    rhs = G @ rho @ G
    residual = float(np.linalg.norm(lhs - rhs))
    rhs_norm = float(np.linalg.norm(rhs))
    relative = residual / rhs_norm if rhs_norm > 0 else 0.0

    state = DensityMatrix(rho)
    diagnostics = ReconstructionDiagnostics(
        iterations=iterations,
        converged=converged,
        log_likelihood_trace=np.asarray(trace_ll),
        extremal_residual=residual,
        extremal_residual_relative=relative,
        regularization_events=regularization_events,
        final_probabilities=p,
        mean_flux_estimate=float(n_hat),
        dilution_final=alpha,
    )
    return state, diagnostics


def project_inner(rho11: DensityMatrix, inner_dim: int = 3):
    """Restrict a model-space state to its inner block and renormalize.

    Returns
    -------
    (DensityMatrix, discarded)
        The renormalized ``inner_dim`` x ``inner_dim`` state and the
        probability that lived outside the inner block.
    """
    m = rho11.entries
    block = m[:inner_dim, :inner_dim]
    weight = float(np.real(np.trace(block)))
    if weight < 1e-6:
        raise EmptySubspaceError(
            f"inner block carries probability {weight:.3e}")
    total = float(np.real(np.trace(m)))
    inner = block / weight
    inner = 0.5 * (inner + inner.conj().T)
    return DensityMatrix(inner), total - weight


@dataclass
class StateAnalysis:
    """Eigen-analysis of a reconstructed state.

    The dominant eigenvector is gauged so its first non-negligible
    component (in basis order) is real and non-negative.
    """

    eigenvalues: np.ndarray
    max_eigenvector: np.ndarray
    purity: float
    amplitudes: np.ndarray
    phases: np.ndarray
    degenerate: bool = False

    gauge_component_floor: float = field(default=1e-6, repr=False)


def analyze(rho: DensityMatrix, degeneracy_gap: float = 1e-8) -> StateAnalysis:
    """Eigendecomposition, purity, and polar form of the top eigenvector."""
    validate_state(rho)
    values, vectors = np.linalg.eigh(rho.entries)
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = vectors[:, order]
    top = vectors[:, 0]
    anchor = next((i for i, c in enumerate(top) if abs(c) >= 1e-6), 0)
    top = top * np.exp(-1j * np.angle(top[anchor]))
    return StateAnalysis(
        eigenvalues=values,
        max_eigenvector=top,
        purity=float(np.real(np.sum(values ** 2))),
        amplitudes=np.abs(top),
        phases=np.angle(top),
        degenerate=bool(values[0] - values[1] < degeneracy_gap),
    )


def poisson_residual_statistic(counts, probabilities,
                               min_expected: float = 5.0) -> float:
    """Mean of ``(n - N_hat p)^2 / (N_hat p)`` over well-populated settings.

    A value near 1 means the model residuals are at the Poisson noise
    level.  Settings with expected count below ``min_expected`` are
    excluded (the normal approximation is poor there).
    """
    n = np.asarray(counts, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    total_p = p.sum()
    if total_p <= 0:
        raise DegenerateMeasurementError("all model probabilities are zero")
    expected = (n.sum() / total_p) * p
    keep = expected >= min_expected
    if not np.any(keep):
        raise InvalidArgumentError(
            f"no setting reaches expected count {min_expected}")
    return float(np.mean((n[keep] - expected[keep]) ** 2 / expected[keep]))
