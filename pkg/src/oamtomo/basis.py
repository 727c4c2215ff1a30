"""Outer-mode transfer scans and the 11-dimensional enlarged basis.

The three "inner" states are the fiber mode |0> and the two states a
centered charge +/-1 hologram makes of it.  Scanning a displaced
hologram across the beam shows two displacement values per axis where
the transfer into modes outside the inner subspace peaks; the states
generated at those positions, orthonormalized, extend the model space
to 3 + 8 = 11 dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateGeneratorError, DegenerateScanError,
                     InsufficientDataError, InvalidArgumentError)
from .holograms import HologramSpec, apply_hologram
from .optics import Field, Grid, LgIndex, decompose, lg_mode, stack_fields

#: Default transfer-scan sampling: step 0.05w over [-3w, 3w].
DEFAULT_SCAN_STEP = 0.05
DEFAULT_SCAN_HALF_RANGE = 3.0

#: Residual norm below which a generator counts as linearly dependent.
DEGENERACY_TOL = 1e-6

#: Orthonormality guarantee of a freshly built enlarged basis.
GRAM_TOL = 1e-8


def inner_basis(grid: Grid) -> list[Field]:
    """The states reachable with centered holograms: |0>, |+1>, |-1>.

    The hologram states are renormalized on the grid (a centered
    dislocation zeroes the single on-axis sample, costing one
    quadrature cell of weight); the mutual overlaps vanish to machine
    precision by azimuthal symmetry of the lattice.
    """
    fiber = lg_mode(LgIndex(0, 0), grid)
    states = [fiber]
    for charge in (+1, -1):
        raw = apply_hologram(fiber, HologramSpec(charge))
        states.append(Field(grid, raw.amplitudes / np.sqrt(raw.norm_squared())))
    return states


def _displaced(charge: int, axis: str, d: float) -> HologramSpec:
    if axis == "x":
        return HologramSpec(charge, dx=d)
    if axis == "y":
        return HologramSpec(charge, dy=d)
    raise InvalidArgumentError(f"axis must be 'x' or 'y', got {axis!r}")


@dataclass
class TransferScan:
    """Projections of a displaced-hologram state onto the inner basis.

    For each displacement, ``inner_projections`` holds the squared
    moduli of the projections onto (|0>, |+1>, |-1>) and
    ``outer_weight`` the remaining probability.
    """

    charge: int
    axis: str
    displacements: np.ndarray
    inner_projections: np.ndarray  # shape (n_displacements, 3)
    outer_weight: np.ndarray       # shape (n_displacements,)


def transfer_scan(charge: int, axis: str, displacements, grid: Grid) -> TransferScan:
    """Scan one hologram across the beam and record inner/outer transfer.

    Applies ``H_charge`` displaced by each value along ``axis`` to the
    fiber mode and decomposes the result in the inner basis.
    """
    displacements = np.asarray(displacements, dtype=float)
    basis = inner_basis(grid)
    fiber = basis[0]
    projections = np.empty((displacements.size, 3))
    outer = np.empty(displacements.size)
    for i, d in enumerate(displacements):
        state = apply_hologram(fiber, _displaced(charge, axis, d))
        # report fractions of the total detected events: unit-normalize
        total = state.norm_squared()
        coeff, ow = decompose(state, basis)
        projections[i] = np.abs(coeff) ** 2 / total
        outer[i] = ow / total
    return TransferScan(charge, axis, displacements, projections, outer)


def default_scan_displacements(step: float = DEFAULT_SCAN_STEP,
                               half_range: float = DEFAULT_SCAN_HALF_RANGE) -> np.ndarray:
    n = int(round(half_range / step))
    return np.linspace(-half_range, half_range, 2 * n + 1)


def max_transfer_positions(scan: TransferScan) -> tuple[float, float]:
    """The negative and positive displacements maximizing outer transfer.

    Returns
    -------
    (d_negative, d_positive)
        One maximizer per displacement sign; ties broken toward
        smaller magnitude.
    """
    d = scan.displacements
    if d.size < 3:
        raise InsufficientDataError(
            f"scan has {d.size} points; at least 3 required")
    if np.max(scan.outer_weight) <= 1e-12:
        raise DegenerateScanError(
            "outer weight is zero everywhere; no transfer maximum exists")
    positions = []
    for side in (d < 0, d > 0):
        if not np.any(side):
            raise InsufficientDataError(
                "scan does not cover both displacement signs")
        ds = d[side]
        ws = scan.outer_weight[side]
        best = np.flatnonzero(ws == ws.max())
        # ties toward smaller |d|
        positions.append(float(ds[best[np.argmin(np.abs(ds[best]))]]))
    return positions[0], positions[1]


@dataclass
class EnlargedBasis:
    """Ordered orthonormal model basis: 3 inner + 8 outer vectors.

    ``generators[i]`` records the hologram that generated outer vector
    ``vectors[3 + i]`` (before orthogonalization).
    """

    grid: Grid
    vectors: list[Field]
    generators: list[HologramSpec]
    gram_tol: float = GRAM_TOL
    scan_step: float = DEFAULT_SCAN_STEP
    scan_half_range: float = DEFAULT_SCAN_HALF_RANGE
    _matrix: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.vectors)

    @property
    def fiber_mode(self) -> Field:
        return self.vectors[0]

    def matrix(self) -> np.ndarray:
        """Basis vectors stacked as a (dim, n*n) array (cached)."""
        if self._matrix is None:
            self._matrix = stack_fields(self.vectors)
        return self._matrix


def _orthogonalize(candidate: np.ndarray, basis_matrix: np.ndarray,
                   area: float) -> tuple[np.ndarray, float]:
    """Modified Gram-Schmidt step with one re-orthogonalization pass."""
    v = candidate.copy()
    for _ in range(2):
        for row in basis_matrix:
            v -= (np.vdot(row, v) * area) * row
    norm = np.sqrt(np.real(np.vdot(v, v)) * area)
    return v, float(norm)


def build_enlarged_basis(grid: Grid,
                         scan_step: float = DEFAULT_SCAN_STEP,
                         scan_half_range: float = DEFAULT_SCAN_HALF_RANGE) -> EnlargedBasis:
    """Construct the 11-vector orthonormal basis on a grid.

    Starting from the inner basis, for each hologram charge (+1 first)
    and each axis (x first) the two max-transfer displacements
    (negative first) generate candidate states; each is orthogonalized
    against the basis built so far and appended.  Downstream indexing
    relies on exactly this order.

    Raises
    ------
    DegenerateGeneratorError
        If any generator state is linearly dependent on the basis built
        so far (residual norm below ``DEGENERACY_TOL``); the error lists
        the offending generators.
    """
    vectors = inner_basis(grid)
    fiber = vectors[0]
    area = grid.cell_area
    matrix = stack_fields(vectors)
    generators: list[HologramSpec] = []
    degenerate: list[HologramSpec] = []
    displacements = default_scan_displacements(scan_step, scan_half_range)
    for charge in (+1, -1):
        for axis in ("x", "y"):
            scan = transfer_scan(charge, axis, displacements, grid)
            for d in max_transfer_positions(scan):
                spec = _displaced(charge, axis, d)
                candidate = apply_hologram(fiber, spec)
                v, norm = _orthogonalize(candidate.amplitudes.ravel(),
                                         matrix, area)
                if norm < DEGENERACY_TOL:
                    degenerate.append(spec)
                    continue
                v /= norm
                matrix = np.vstack([matrix, v[np.newaxis, :]])
                vectors.append(Field(grid, v.reshape(grid.samples_per_axis,
                                                     grid.samples_per_axis)))
                generators.append(spec)
    if degenerate:
        raise DegenerateGeneratorError(degenerate)
    return EnlargedBasis(grid, vectors, generators,
                         scan_step=scan_step, scan_half_range=scan_half_range,
                         _matrix=matrix)


def rebuild_from_generators(grid: Grid, generators) -> EnlargedBasis:
    """Rebuild a basis from recorded generator holograms (manifest path).

    Deterministic: identical grid and generators reproduce the stored
    basis bit for bit.
    """
    vectors = inner_basis(grid)
    fiber = vectors[0]
    area = grid.cell_area
    matrix = stack_fields(vectors)
    degenerate = []
    kept = []
    for spec in generators:
        candidate = apply_hologram(fiber, spec)
        v, norm = _orthogonalize(candidate.amplitudes.ravel(), matrix, area)
        if norm < DEGENERACY_TOL:
            degenerate.append(spec)
            continue
        v /= norm
        matrix = np.vstack([matrix, v[np.newaxis, :]])
        vectors.append(Field(grid, v.reshape(grid.samples_per_axis,
                                             grid.samples_per_axis)))
        kept.append(spec)
    if degenerate:
        raise DegenerateGeneratorError(degenerate)
    return EnlargedBasis(grid, vectors, kept, _matrix=matrix)


def gram_residual(basis: EnlargedBasis) -> float:
    """Max absolute deviation of the basis Gram matrix from identity."""
    mat = basis.matrix()
    gram = (mat.conj() @ mat.T) * basis.grid.cell_area
    return float(np.max(np.abs(gram - np.eye(basis.dim))))
