import numpy as np
import pytest

from oamtomo.basis import inner_basis
from oamtomo.errors import InvalidArgumentError
from oamtomo.holograms import (HologramSpec, TransformSpec, apply_hologram,
                               apply_transform, batch_transform_factors,
                               projector_state, transform_factor)
from oamtomo.optics import Field, LgIndex, inner_product, lg_mode


def normalized(field):
    return Field(field.grid, field.amplitudes / np.sqrt(field.norm_squared()))


class TestApplyHologram:
    def test_centered_plus_defines_plus_state(self, ref_grid):
        fiber = lg_mode(LgIndex(0, 0), ref_grid)
        raw = apply_hologram(fiber, HologramSpec(+1))
        plus = inner_basis(ref_grid)[1]
        # the raw state loses only the single on-axis sample
        assert abs(inner_product(plus, raw)) > 0.9995
        assert abs(inner_product(plus, normalized(raw)) - 1.0) < 1e-12

    def test_fiber_overlap_vanishes_when_centered(self, ref_grid):
        fiber = lg_mode(LgIndex(0, 0), ref_grid)
        out = apply_hologram(fiber, HologramSpec(+1))
        assert abs(inner_product(fiber, out)) < 1e-6

    def test_far_displaced_hologram_is_nearly_transparent(self, ref_grid):
        fiber = lg_mode(LgIndex(0, 0), ref_grid)
        out = apply_hologram(fiber, HologramSpec(+1, dx=10.0))
        assert abs(inner_product(fiber, out)) > 0.99

    def test_charge_zero_is_identity(self, small_grid):
        fiber = lg_mode(LgIndex(0, 0), small_grid)
        out = apply_hologram(fiber, HologramSpec(0, dx=0.3))
        assert np.array_equal(out.amplitudes, fiber.amplitudes)

    def test_non_integer_charge_rejected(self):
        with pytest.raises(InvalidArgumentError):
            HologramSpec(0.5)


class TestApplyTransform:
    def test_centered_pair_cancels_exactly(self, small_grid):
        fiber = lg_mode(LgIndex(0, 0), small_grid)
        t = TransformSpec.from_displacements(0, 0, 0, 0)
        out = apply_transform(fiber, t)
        assert np.array_equal(out.amplitudes, fiber.amplitudes)

    def test_far_minus_leaves_plus_state(self, ref_grid):
        fiber = lg_mode(LgIndex(0, 0), ref_grid)
        t = TransformSpec.from_displacements(0, 0, 10.0, 0)
        out = apply_transform(fiber, t)
        plus = inner_basis(ref_grid)[1]
        assert abs(inner_product(plus, out)) > 0.99

    def test_ramp_only_gaussian_overlap(self, ref_grid):
        # opposite charges at a common center cancel; the ramp remains.
        # The overlap of the fiber mode with its ramped copy is the
        # Gaussian characteristic function exp(-k^2 w^2 / 8) for the
        # exp(-r^2/w^2) amplitude convention used throughout.
        fiber = lg_mode(LgIndex(0, 0), ref_grid)
        kx = np.pi
        t = TransformSpec.from_displacements(0, 0, 0, 0, kx=kx)
        out = apply_transform(fiber, t)
        assert inner_product(fiber, out) == pytest.approx(
            np.exp(-kx ** 2 / 8.0), abs=1e-4)

    def test_norm_preserved_on_random_fields(self, small_grid):
        rng = np.random.default_rng(5)
        shape = (small_grid.samples_per_axis,) * 2
        for _ in range(5):
            f = Field(small_grid,
                      rng.normal(size=shape) + 1j * rng.normal(size=shape))
            t = TransformSpec.from_displacements(*rng.uniform(-2, 2, size=4),
                                                 *rng.uniform(-3, 3, size=2))
            out = apply_transform(f, t)
            assert out.norm_squared() == pytest.approx(f.norm_squared(),
                                                       rel=1e-12)

    def test_composition_order(self, small_grid):
        rng = np.random.default_rng(6)
        fiber = lg_mode(LgIndex(0, 0), small_grid)
        t = TransformSpec.from_displacements(*rng.uniform(-1, 1, size=4),
                                             kx=0.8, ky=-1.3)
        combined = apply_transform(fiber, t)
        staged = apply_hologram(fiber, t.minus)
        staged = apply_hologram(staged, t.plus)
        X, Y = small_grid.meshes
        staged = Field(small_grid,
                       staged.amplitudes * np.exp(-1j * (t.kx * X + t.ky * Y)))
        assert np.max(np.abs(combined.amplitudes - staged.amplitudes)) < 1e-12

    def test_charge_inversion_is_identity(self, small_grid):
        fiber = lg_mode(LgIndex(0, 0), small_grid)
        spec = dict(dx=0.37, dy=-0.81)
        out = apply_hologram(apply_hologram(fiber, HologramSpec(+1, **spec)),
                             HologramSpec(-1, **spec))
        assert np.max(np.abs(out.amplitudes - fiber.amplitudes)) < 1e-12

    def test_charge_validation(self):
        with pytest.raises(InvalidArgumentError):
            TransformSpec(HologramSpec(-1), HologramSpec(-1))
        with pytest.raises(InvalidArgumentError):
            TransformSpec(HologramSpec(+1), HologramSpec(+1))


class TestProjectorState:
    def test_identity_transform(self, ref_basis):
        t = TransformSpec.from_displacements(0, 0, 0, 0)
        state = projector_state(t, ref_basis)
        expected = np.zeros(ref_basis.dim)
        expected[0] = 1.0
        assert np.allclose(state.components, expected, atol=1e-6)
        assert state.outer_weight < 1e-6

    def test_plus_dominated(self, ref_basis):
        t = TransformSpec.from_displacements(0, 0, 8.0, 8.0)
        state = projector_state(t, ref_basis)
        assert abs(state.components[1]) ** 2 > 0.97

    def test_closure(self, ref_basis):
        rng = np.random.default_rng(7)
        for _ in range(5):
            t = TransformSpec.from_displacements(*rng.uniform(-1.5, 1.5, 4))
            state = projector_state(t, ref_basis)
            total = np.sum(np.abs(state.components) ** 2) + state.outer_weight
            assert abs(total - 1.0) < 1e-6

    def test_probability_of_pure_state(self, small_basis):
        t = TransformSpec.from_displacements(0.4, -0.2, 0.1, 0.6)
        state = projector_state(t, small_basis)
        rho = np.zeros((small_basis.dim,) * 2, dtype=complex)
        rho[0, 0] = 1.0
        assert state.probability(rho) == pytest.approx(
            abs(state.components[0]) ** 2, rel=1e-12)


def test_batch_factors_match_single(small_grid):
    rng = np.random.default_rng(8)
    plus_xy = rng.uniform(-1, 1, size=(6, 2))
    minus_xy = rng.uniform(-1, 1, size=(6, 2))
    kx, ky = 0.3, -0.9
    batch = batch_transform_factors(plus_xy, minus_xy, kx, ky, small_grid)
    for i in range(6):
        t = TransformSpec.from_displacements(*plus_xy[i], *minus_xy[i], kx, ky)
        single = transform_factor(t, small_grid).ravel()
        assert np.allclose(batch[i], single, atol=1e-12)


def test_batch_factors_zero_singular_sample(small_grid):
    # displacements on exact grid nodes: the dislocation sample is zeroed
    plus_xy = np.array([[0.0, 0.0]])
    minus_xy = np.array([[0.5, 0.5]])
    batch = batch_transform_factors(plus_xy, minus_xy, 0.0, 0.0, small_grid)
    n = small_grid.samples_per_axis
    grid_index = lambda v: int(round((v + small_grid.half_extent)
                                     / small_grid.spacing))
    assert batch[0].reshape(n, n)[grid_index(0.0), grid_index(0.0)] == 0
    assert batch[0].reshape(n, n)[grid_index(0.5), grid_index(0.5)] == 0
