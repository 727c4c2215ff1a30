import numpy as np
import pytest
from scipy.integrate import trapezoid

from oamtomo.basis import inner_basis
from oamtomo.errors import (GridMismatchError, InvalidArgumentError,
                            InvalidBasisError)
from oamtomo.holograms import HologramSpec, apply_hologram
from oamtomo.optics import (Field, LgIndex, decompose, inner_product, lg_mode,
                            load_field, make_grid, overlap_matrix, save_field)


def random_field(grid, rng):
    shape = (grid.samples_per_axis,) * 2
    return Field(grid, rng.normal(size=shape) + 1j * rng.normal(size=shape))


class TestMakeGrid:
    def test_reference_spacing_exact(self):
        grid = make_grid(4.0, 257)
        assert grid.spacing == 8.0 / 256
        assert grid.spacing * (grid.samples_per_axis - 1) == 2 * grid.half_extent

    def test_minimal_two_point_grid(self):
        grid = make_grid(1.0, 2)
        assert np.array_equal(grid.axis, [-1.0, 1.0])

    @pytest.mark.parametrize("extent,samples", [(4.0, 0), (4.0, 1), (0.0, 257),
                                                (-1.0, 257)])
    def test_invalid_arguments(self, extent, samples):
        with pytest.raises(InvalidArgumentError):
            make_grid(extent, samples)


class TestLgModes:
    def test_gaussian_discrete_norm(self, ref_grid):
        mode = lg_mode(LgIndex(0, 0), ref_grid)
        assert abs(mode.norm_squared() - 1.0) < 1e-6

    def test_vortex_zero_at_origin(self, ref_grid):
        mode = lg_mode(LgIndex(0, 1), ref_grid)
        center = ref_grid.samples_per_axis // 2
        assert mode.amplitudes[center, center] == 0

    def test_azimuthal_orthogonality(self, ref_grid):
        plus = lg_mode(LgIndex(0, 1), ref_grid)
        minus = lg_mode(LgIndex(0, -1), ref_grid)
        assert abs(inner_product(plus, minus)) < 1e-6

    def test_radial_orthogonality(self, ref_grid):
        gauss = lg_mode(LgIndex(0, 0), ref_grid)
        ring = lg_mode(LgIndex(1, 0), ref_grid)
        assert abs(inner_product(gauss, gauss) - 1.0) < 1e-6
        assert abs(inner_product(gauss, ring)) < 1e-6

    def test_orthonormality_low_order_family(self, ref_grid):
        modes = [lg_mode(LgIndex(p, m), ref_grid)
                 for p in range(4) for m in range(-2, 3)]
        gram = overlap_matrix(modes)
        assert np.max(np.abs(gram - np.eye(len(modes)))) < 1e-4

    def test_invalid_index(self):
        with pytest.raises(InvalidArgumentError):
            LgIndex(-1, 0)
        with pytest.raises(InvalidArgumentError):
            LgIndex(0, 0, w=0.0)


class TestInnerProduct:
    def test_conjugate_symmetry(self, small_grid):
        rng = np.random.default_rng(0)
        f, g = random_field(small_grid, rng), random_field(small_grid, rng)
        assert inner_product(f, g) == pytest.approx(
            np.conj(inner_product(g, f)), abs=1e-12)

    def test_self_overlap_real_nonnegative(self, small_grid):
        rng = np.random.default_rng(1)
        f = random_field(small_grid, rng)
        value = inner_product(f, f)
        assert value.real >= 0
        assert abs(value.imag) < 1e-12 * value.real

    def test_sesquilinear(self, small_grid):
        rng = np.random.default_rng(2)
        f, g, h = (random_field(small_grid, rng) for _ in range(3))
        a, b = 0.3 - 1.1j, -0.7 + 0.2j
        combo = Field(small_grid, a * g.amplitudes + b * h.amplitudes)
        expected = a * inner_product(f, g) + b * inner_product(f, h)
        assert inner_product(f, combo) == pytest.approx(expected, rel=1e-12)
        scaled = Field(small_grid, a * f.amplitudes)
        assert inner_product(scaled, g) == pytest.approx(
            np.conj(a) * inner_product(f, g), rel=1e-12)

    def test_grid_mismatch(self, small_grid, ref_grid):
        f = lg_mode(LgIndex(0, 0), small_grid)
        g = lg_mode(LgIndex(0, 0), ref_grid)
        with pytest.raises(GridMismatchError):
            inner_product(f, g)

    def test_amplitude_shape_checked(self, small_grid):
        with pytest.raises(InvalidArgumentError):
            Field(small_grid, np.zeros((3, 3), dtype=complex))


def trapezoid_overlap(f, g, grid):
    """Independent quadrature route: iterated trapezoid rule."""
    integrand = np.conj(f.amplitudes) * g.amplitudes
    return trapezoid(trapezoid(integrand, dx=grid.spacing, axis=1),
                     dx=grid.spacing)


class TestDecompose:
    def test_basis_vector_reproduced(self, ref_grid):
        basis = inner_basis(ref_grid)
        coeff, outer = decompose(basis[0], basis)
        assert np.allclose(coeff, [1.0, 0.0, 0.0], atol=1e-10)
        assert outer < 1e-10

    def test_equal_superposition(self, ref_grid):
        basis = inner_basis(ref_grid)
        f = Field(ref_grid,
                  (basis[0].amplitudes + basis[1].amplitudes) / np.sqrt(2))
        coeff, outer = decompose(f, basis)
        assert np.allclose(np.abs(coeff), [0.7071067811865476] * 2 + [0.0],
                           atol=1e-10)
        assert outer < 1e-10

    def test_displaced_hologram_outer_weight(self, ref_grid):
        # frozen from the trapezoid-rule oracle below on the reference grid
        frozen_outer = 0.2055069390958
        basis = inner_basis(ref_grid)
        fiber = basis[0]
        state = apply_hologram(fiber, HologramSpec(+1, dx=0.7))
        coeff, outer = decompose(state, basis)
        assert outer > 0
        assert outer == pytest.approx(frozen_outer, abs=1e-9)
        oracle_coeff = [trapezoid_overlap(b, state, ref_grid) for b in basis]
        oracle_outer = (trapezoid_overlap(state, state, ref_grid).real
                        - np.sum(np.abs(oracle_coeff) ** 2))
        assert outer == pytest.approx(oracle_outer, abs=1e-7)

    def test_residual_field_matches_outer_weight(self, ref_grid):
        rng = np.random.default_rng(3)
        basis = inner_basis(ref_grid)
        state = apply_hologram(basis[0], HologramSpec(+1, dx=0.31, dy=-0.42))
        coeff, outer = decompose(state, basis)
        residual = state.amplitudes - sum(
            c * b.amplitudes for c, b in zip(coeff, basis))
        residual_norm = np.sum(np.abs(residual) ** 2) * ref_grid.cell_area
        assert abs(residual_norm - outer) < 1e-8

    def test_non_orthonormal_basis_rejected(self, ref_grid):
        basis = inner_basis(ref_grid)
        with pytest.raises(InvalidBasisError):
            decompose(basis[0], [basis[0], basis[0]])


def test_field_round_trip(tmp_path, small_grid):
    rng = np.random.default_rng(4)
    f = random_field(small_grid, rng)
    path = tmp_path / "field.npz"
    save_field(path, f)
    loaded = load_field(path)
    assert loaded.grid == small_grid
    assert np.array_equal(loaded.amplitudes, f.amplitudes)
