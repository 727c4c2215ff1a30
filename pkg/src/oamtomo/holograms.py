"""Displaced phase holograms and two-hologram transform sets.

A charge-m hologram multiplies the field by ``exp(i*m*theta')`` where
``theta'`` winds about the hologram's dislocation center.  A transform
set is a (+1, -1) hologram pair followed by a linear phase ramp
``exp(-i*(kx*x + ky*y))``; every projection setting of the measurement
apparatus is one such set acting on the fiber mode.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .optics import Field, decompose

#: Kept in sync with the fiber-mode definition: the full-plane two-argument
#: angle, so an m-charge hologram winds phase by exactly 2*pi*m per loop.


@dataclass(frozen=True)
class HologramSpec:
    """Charge and dislocation-center displacement of one hologram."""

    charge: int
    dx: float = 0.0
    dy: float = 0.0

    def __post_init__(self):
        if self.charge != int(self.charge):
            raise InvalidArgumentError(f"charge must be an integer, got {self.charge}")


@dataclass(frozen=True)
class TransformSpec:
    """One projection setting: a +1 and a -1 hologram plus a phase ramp."""

    plus: HologramSpec
    minus: HologramSpec
    kx: float = 0.0
    ky: float = 0.0

    def __post_init__(self):
        if self.plus.charge != +1:
            raise InvalidArgumentError(
                f"plus hologram must have charge +1, got {self.plus.charge}")
        if self.minus.charge != -1:
            raise InvalidArgumentError(
                f"minus hologram must have charge -1, got {self.minus.charge}")

    @classmethod
    def from_displacements(cls, plus_dx, plus_dy, minus_dx, minus_dy,
                           kx=0.0, ky=0.0) -> "TransformSpec":
        return cls(HologramSpec(+1, plus_dx, plus_dy),
                   HologramSpec(-1, minus_dx, minus_dy), kx, ky)


def hologram_phase(h: HologramSpec, grid) -> np.ndarray:
    """Phase winding ``charge * atan2(y - dy, x - dx)`` on the grid."""
    X, Y = grid.meshes
    return h.charge * np.arctan2(Y - h.dy, X - h.dx)


def _singular_mask(grid, dx, dy):
    """Grid samples coinciding exactly with a dislocation center, if any."""
    X, Y = grid.meshes
    return (X == dx) & (Y == dy)


def hologram_factor(h: HologramSpec, grid) -> np.ndarray:
    """Complex multiplier of one hologram: ``exp(i*charge*theta')``.

    At a grid sample that coincides exactly with the dislocation center
    the phase is undefined and an intensity null develops physically;
    the multiplier is set to 0 there.  The affected weight is a single
    quadrature cell, and intact samples keep unit modulus.
    """
    if h.charge == 0:
        return np.ones((grid.samples_per_axis,) * 2, dtype=complex)
    factor = np.exp(1j * hologram_phase(h, grid))
    factor[_singular_mask(grid, h.dx, h.dy)] = 0.0
    return factor


def transform_phase(t: TransformSpec, grid) -> np.ndarray:
    """Total phase applied by a transform set (both holograms + ramp)."""
    X, Y = grid.meshes
    return (hologram_phase(t.plus, grid)
            + hologram_phase(t.minus, grid)
            - t.kx * X - t.ky * Y)


def transform_factor(t: TransformSpec, grid) -> np.ndarray:
    """Complex multiplier of a full transform set.

    The two phase windings and the ramp combine into one exponential.
    Samples sitting exactly on a dislocation center are zeroed, unless
    the two holograms share a center, where the opposite charges cancel
    and leave no net singularity.
    """
    factor = np.exp(1j * transform_phase(t, grid))
    if (t.plus.dx, t.plus.dy) != (t.minus.dx, t.minus.dy):
        factor[_singular_mask(grid, t.plus.dx, t.plus.dy)] = 0.0
        factor[_singular_mask(grid, t.minus.dx, t.minus.dy)] = 0.0
    return factor


def batch_transform_factors(plus_xy: np.ndarray, minus_xy: np.ndarray,
                            kx, ky, grid) -> np.ndarray:
    """Transform multipliers for many displacement pairs at once.

    Parameters
    ----------
    plus_xy, minus_xy : ndarray, shape (k, 2)
        Displacements of the +1 and -1 holograms per setting.
    kx, ky : float or ndarray of shape (k,)
        Ramp wavenumbers (scalar values are shared by all settings).

    Returns
    -------
    ndarray, shape (k, samples^2)
        One flattened multiplier row per setting, following the same
        singular-sample convention as :func:`transform_factor`.
    """
    X, Y = grid.meshes
    x = X.ravel()
    y = Y.ravel()
    px, py = plus_xy[:, 0:1], plus_xy[:, 1:2]
    mx, my = minus_xy[:, 0:1], minus_xy[:, 1:2]
    kx = np.atleast_1d(np.asarray(kx, dtype=float)).reshape(-1, 1)
    ky = np.atleast_1d(np.asarray(ky, dtype=float)).reshape(-1, 1)
    phase = (np.arctan2(y - py, x - px) - np.arctan2(y - my, x - mx)
             - kx * x - ky * y)
    factor = np.exp(1j * phase)
    distinct = ~((px == mx) & (py == my))
    factor[((x == px) & (y == py)) & distinct] = 0.0
    factor[((x == mx) & (y == my)) & distinct] = 0.0
    return factor


def apply_hologram(f: Field, h: HologramSpec) -> Field:
    """Multiply a field by the hologram's phase factor.

    Norm preserving except for the (at most one) sample exactly on the
    dislocation center, which is zeroed.
    """
    if h.charge == 0:
        return Field(f.grid, f.amplitudes.copy())
    return Field(f.grid, f.amplitudes * hologram_factor(h, f.grid))


def apply_transform(f: Field, t: TransformSpec) -> Field:
    """Apply the minus hologram, the plus hologram, then the phase ramp."""
    return Field(f.grid, f.amplitudes * transform_factor(t, f.grid))


@dataclass
class ProjectorState:
    """A detected state expanded in an orthonormal basis.

    ``components[i]`` is the amplitude on basis vector i and
    ``outer_weight`` the probability leaking outside the spanned model.
    """

    components: np.ndarray
    outer_weight: float

    def probability(self, rho: np.ndarray) -> float:
        """Detection probability ``<j|rho|j>`` for a model-space state."""
        v = self.components
        return float(np.real(v.conj() @ rho @ v))


def projector_state(t: TransformSpec, basis) -> ProjectorState:
    """Coefficients of the detected state ``transform|0>`` in an enlarged basis.

    Parameters
    ----------
    t : TransformSpec
        The projection setting.
    basis : EnlargedBasis
        Orthonormal model basis (provides ``vectors`` and ``fiber_mode``).

    Returns
    -------
    ProjectorState
        All ``len(basis.vectors)`` components plus the weight escaping
        the model space.
    """
    detected = apply_transform(basis.fiber_mode, t)
    coefficients, outer = decompose(detected, basis.vectors,
                                    gram_tol=basis.gram_tol)
    return ProjectorState(coefficients, outer)
