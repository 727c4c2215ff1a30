"""Projection settings, detection probabilities, and count simulation.

A measurement campaign is a list of transform-set positions; each
yields a projector state in the enlarged basis, a detection probability
``p_j = <j|rho|j>``, and (in simulation) a Poissonian count with mean
``N * p_j``.  Remote preparation models the source-side qutrit choice:
angular-momentum conservation mirrors Alice's +/-1 amplitudes onto
Bob's -/+1 components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import EnlargedBasis
from .errors import InvalidArgumentError, InvalidStateError
from .holograms import TransformSpec, transform_factor
from .mle import DensityMatrix, detection_probabilities, pure_state, validate_state

#: Shipped campaign defaults: displacements uniform in +/-1.5w, 2400 settings.
DEFAULT_DISPLACEMENT_RANGE = 1.5
DEFAULT_SETTING_COUNT = 2400
DEFAULT_SEED = 7
DEFAULT_MEAN_FLUX = 500.0

#: Per-setting accumulation window in seconds (informational only).
DEFAULT_DURATION = 2.0

_PROJECTOR_CHUNK = 64


@dataclass(frozen=True)
class ProjectionSetting:
    id: int
    transform: TransformSpec
    duration: float = DEFAULT_DURATION


@dataclass
class CountRecord:
    """Observed (or simulated) count for one projection setting."""

    setting_id: int
    n: int
    p_model: float | None = None

    def __post_init__(self):
        if self.n < 0:
            raise InvalidArgumentError(f"count must be non-negative, got {self.n}")


@dataclass(frozen=True)
class PreparationChoice:
    """Alice's projection direction: unit-norm amplitudes over
    (|0>, |+1>, |-1>)."""

    alice_vector: tuple

    def __post_init__(self):
        v = np.asarray(self.alice_vector, dtype=complex)
        if v.shape != (3,):
            raise InvalidArgumentError("alice_vector must have 3 amplitudes")
        if abs(np.sum(np.abs(v) ** 2) - 1.0) > 1e-10:
            raise InvalidArgumentError("alice_vector must have unit norm")

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PreparationChoice":
        v = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvalidArgumentError("amplitudes cannot all be zero")
        return cls(tuple(v / norm))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alice_vector, dtype=complex)


def default_settings(count: int, seed: int) -> list[ProjectionSetting]:
    """Seeded pseudorandom campaign: both holograms uniform in the
    default displacement square, no phase ramp."""
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    r = DEFAULT_DISPLACEMENT_RANGE
    displacements = rng.uniform(-r, r, size=(count, 4))
    return [
        ProjectionSetting(i, TransformSpec.from_displacements(*row))
        for i, row in enumerate(displacements)
    ]


def minimal_inner_settings() -> list[ProjectionSetting]:
    """A designed 9-setting campaign that is informationally complete on
    the inner (3-dimensional) subspace.

    A far-parked hologram (at 6w the residual phase curvature over the
    beam is negligible) effectively removes that hologram; moderate
    displacements produce superposition projectors, including two
    settings with both holograms displaced so the |+1><-1| coherence is
    probed.
    """
    far = 6.0
    d = 0.5
    b = 0.7
    rows = [
        (far, far, far, far),    # both parked together: projector ~ |0>
        (0.0, 0.0, far, far),    # plus centered: projector ~ |+1>
        (far, far, 0.0, 0.0),    # minus centered: projector ~ |-1>
        (d, 0.0, far, far),      # |0>/|+1> superpositions, two phases
        (0.0, d, far, far),
        (far, far, d, 0.0),      # |0>/|-1> superpositions, two phases
        (far, far, 0.0, d),
        (b, 0.0, -b, 0.0),       # three-component projectors probing
        (0.0, b, b, 0.0),        # the |+1>/|-1> coherence
    ]
    return [ProjectionSetting(i, TransformSpec.from_displacements(*row))
            for i, row in enumerate(rows)]


def projector_matrix(settings, basis: EnlargedBasis):
    """Projector components for many settings at once.

    Returns
    -------
    (components, outer_weights)
        ``components[j]`` are the enlarged-basis amplitudes of setting
        j's detected state, ``outer_weights[j]`` the probability
        leaking outside the model space.
    """
    grid = basis.grid
    weighted = basis.matrix().conj() * grid.cell_area
    fiber = basis.fiber_mode.amplitudes.ravel()
    n_set = len(settings)
    components = np.empty((n_set, basis.dim), dtype=complex)
    outer = np.empty(n_set)
    for start in range(0, n_set, _PROJECTOR_CHUNK):
        chunk = settings[start:start + _PROJECTOR_CHUNK]
        fields = np.empty((len(chunk), fiber.size), dtype=complex)
        for k, setting in enumerate(chunk):
            fields[k] = fiber * transform_factor(setting.transform, grid).ravel()
        block = fields @ weighted.T
        totals = np.sum(np.abs(fields) ** 2, axis=1).real * grid.cell_area
        components[start:start + len(chunk)] = block
        residue = totals - np.sum(np.abs(block) ** 2, axis=1)
        outer[start:start + len(chunk)] = np.clip(residue, 0.0, totals)
    return components, outer


def ideal_probability(rho: DensityMatrix, setting: ProjectionSetting,
                      basis: EnlargedBasis) -> float:
    """Detection probability ``<j|rho|j>`` for one setting."""
    validate_state(rho)
    if rho.dim != basis.dim:
        raise InvalidStateError(
            f"state dimension {rho.dim} does not match basis dimension {basis.dim}")
    components, _ = projector_matrix([setting], basis)
    return float(detection_probabilities(rho.entries, components)[0])


def campaign_probabilities(rho: DensityMatrix, settings, basis: EnlargedBasis,
                           projectors: np.ndarray | None = None) -> np.ndarray:
    validate_state(rho)
    if projectors is None:
        projectors, _ = projector_matrix(settings, basis)
    return detection_probabilities(rho.entries, projectors)


def simulate_counts(rho_true: DensityMatrix, settings, basis: EnlargedBasis,
                    mean_flux: float, seed: int,
                    projectors: np.ndarray | None = None) -> list[CountRecord]:
    """Draw one Poissonian count per setting with mean ``N * p_j``.

    ``projectors`` may carry precomputed projector components for the
    settings to avoid recomputing them.
    """
    if mean_flux <= 0:
        raise InvalidArgumentError(f"mean flux must be positive, got {mean_flux}")
    p = campaign_probabilities(rho_true, settings, basis, projectors)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_flux * p)
    return [CountRecord(s.id, int(n)) for s, n in zip(settings, counts)]


def remote_prepare(choice: PreparationChoice, dim: int = 11) -> DensityMatrix:
    """Bob's state for Alice's projection choice.

    Conservation of orbital angular momentum in the pair source mirrors
    the azimuthal index: Alice's |+1> amplitude lands on Bob's |-1> and
    vice versa; |0> maps to |0>; outer components are zero.  The result
    is pure.
    """
    a = choice.as_array()
    bob = np.zeros(dim, dtype=complex)
    bob[0] = a[0]
    bob[1] = a[2]
    bob[2] = a[1]
    return pure_state(bob)


def intended_inner_state(choice: PreparationChoice) -> np.ndarray:
    """The 3-component qutrit Bob should receive for Alice's choice."""
    a = choice.as_array()
    return np.array([a[0], a[2], a[1]])


def completeness_rank(settings, basis: EnlargedBasis, subspace_dim: int) -> int:
    """Rank of the real span of the projectors ``|j><j|`` on a subspace.

    Full tomographic reconstructability on a d-dimensional subspace
    needs rank d^2.
    """
    if len(settings) < 1:
        raise InvalidArgumentError("at least one setting required")
    components, _ = projector_matrix(settings, basis)
    return projector_span_rank(components[:, :subspace_dim])


def projector_span_rank(components: np.ndarray) -> int:
    """Rank of the real-linear span of ``|v_j><v_j|`` given ket rows."""
    ops = np.einsum("ja,jb->jab", components, components.conj())
    rows = np.concatenate(
        [ops.real.reshape(len(ops), -1), ops.imag.reshape(len(ops), -1)],
        axis=1)
    return int(np.linalg.matrix_rank(rows))


def demo_target_states() -> dict[str, np.ndarray]:
    """Named qutrit targets (Bob side) used by the demonstration runs:
    a two-mode superposition, two three-mode superpositions differing in
    relative phases, and a state with the |0> mode suppressed."""
    targets = {
        "two_mode": [0.68, 0.71, -0.14],
        "three_mode_i": [0.65,
                         0.53 * np.exp(-0.26j * np.pi),
                         0.55 * np.exp(-0.60j * np.pi)],
        "three_mode_ii": [0.58,
                          0.58 * np.exp(-0.05j * np.pi),
                          0.58 * np.exp(-0.89j * np.pi)],
        "suppressed_zero": [0.26,
                            0.68 * np.exp(+0.11j * np.pi),
                            0.68 * np.exp(-0.21j * np.pi)],
    }
    out = {}
    for name, amplitudes in targets.items():
        v = np.asarray(amplitudes, dtype=complex)
        out[name] = v / np.linalg.norm(v)
    return out


def preparation_for_target(target) -> PreparationChoice:
    """Alice's choice that remotely prepares a given Bob qutrit."""
    t = np.asarray(target, dtype=complex)
    return PreparationChoice.from_amplitudes([t[0], t[2], t[1]])
