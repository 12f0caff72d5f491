"""
Tests for the Gaussian engine.

Covers:
- Fermi-sea ground states and their degeneracy guard
- Slater and Bogoliubov entropies on the same state
- All measurement kinds: identity at W = 0, purity, the two-site formula
- Mutual information bookkeeping
"""

import math

import numpy as np
import pytest

from engines import gaussian
from errors import DegeneracyError, DomainError, SizeGuardError
from lattice.specs import MeasurementKind, MeasurementSpec, ModelSpec, Region


def binary_entropy(p):
    return -(p * math.log(p) + (1 - p) * math.log(1 - p))


# ═══════════════════════════════════════════════════════════════════
# Ground states
# ═══════════════════════════════════════════════════════════════════


class TestGroundState:

    def test_open_chain_energy(self):
        model = ModelSpec(10)
        k = np.arange(1, 11) * np.pi / 11
        expected = np.sort(-2 * np.cos(k))[:5].sum()
        assert gaussian.ground_energy_quadratic(model) == pytest.approx(expected, abs=1e-12)

    def test_particle_number(self):
        state = gaussian.ground_state_quadratic(ModelSpec(12, filling="1/4"))
        assert state.n_particles == 3
        assert np.trace(state.correlation()).real == pytest.approx(3.0)

    def test_periodic_degenerate_fermi_level(self):
        with pytest.raises(DegeneracyError) as exc:
            gaussian.ground_state_quadratic(ModelSpec(8, "periodic"))
        assert exc.value.gap < 1e-12
        assert "spin_periodic" in str(exc.value)

    def test_spin_periodic_is_nondegenerate(self):
        for n in (8, 10, 12):
            gaussian.ground_state_quadratic(ModelSpec(n, "spin_periodic"))

    def test_interacting_model_rejected(self):
        with pytest.raises(DomainError):
            gaussian.ground_state_quadratic(ModelSpec(8, delta=0.5))

    def test_unmeasured_ring_log_law(self):
        """S(L/2) of the free ring grows as (1/3) ln L."""
        s = [gaussian.half_chain_entropy(gaussian.ground_state_quadratic(ModelSpec(n, "spin_periodic")))
             for n in (64, 128)]
        assert (s[1] - s[0]) / math.log(2) == pytest.approx(1 / 3, abs=0.02)


# ═══════════════════════════════════════════════════════════════════
# Entropies
# ═══════════════════════════════════════════════════════════════════


class TestEntropy:

    def test_complement_symmetry(self):
        state = gaussian.ground_state_quadratic(ModelSpec(10))
        a = Region((0, 3, 4))
        rest = Region(tuple(s for s in range(10) if s not in a.sites))
        assert gaussian.entanglement_entropy(state, a) == pytest.approx(
            gaussian.entanglement_entropy(state, rest), abs=1e-10)

    def test_bogoliubov_form_agrees(self):
        slater = gaussian.ground_state_quadratic(ModelSpec(10, "spin_periodic"))
        bogo = slater.to_bogoliubov()
        for region in (Region.interval(0, 3), Region((1, 4, 7)), Region.half(10)):
            assert gaussian.entanglement_entropy(bogo, region) == pytest.approx(
                gaussian.entanglement_entropy(slater, region), abs=1e-10)

    def test_empty_region(self):
        state = gaussian.ground_state_quadratic(ModelSpec(6))
        assert gaussian.entanglement_entropy(state, Region()) == 0.0

    def test_profile_length(self):
        state = gaussian.ground_state_quadratic(ModelSpec(8))
        profile = gaussian.entropy_profile(state)
        assert profile.shape == (7,)
        np.testing.assert_allclose(profile, profile[::-1], atol=1e-10)

    def test_mutual_information(self):
        state = gaussian.ground_state_quadratic(ModelSpec(16, "spin_periodic"))
        a, b = Region.interval(0, 3), Region.interval(8, 11)
        assert gaussian.mutual_information(state, a, b) > 0
        with pytest.raises(DomainError):
            gaussian.mutual_information(state, a, Region.interval(2, 5))


# ═══════════════════════════════════════════════════════════════════
# Measurements
# ═══════════════════════════════════════════════════════════════════


ALL_KINDS = [
    MeasurementSpec(MeasurementKind.DENSITY_STAGGERED),
    MeasurementSpec(MeasurementKind.BOND_XX_YY_PAIRED),
    MeasurementSpec(MeasurementKind.BOND_XX),
    MeasurementSpec(MeasurementKind.DENSITY_PATTERN, pattern=(0.0, 1.0)),
]


class TestMeasurement:

    @pytest.mark.parametrize("meas", ALL_KINDS, ids=lambda m: m.kind)
    def test_zero_strength_is_identity(self, meas):
        model = ModelSpec(8)
        state = gaussian.ground_state_quadratic(model)
        measured = gaussian.apply_measurement(state, meas.with_strength(0.0), model)
        for l in range(1, 8):
            region = Region.interval(0, l)
            assert gaussian.entanglement_entropy(measured, region) == pytest.approx(
                gaussian.entanglement_entropy(state, region), abs=1e-10)

    @pytest.mark.parametrize("meas", [m for m in ALL_KINDS if m.conserves_number],
                             ids=lambda m: m.kind)
    def test_strong_measurement_reduces_half_chain_entropy(self, meas):
        model = ModelSpec(12, "spin_periodic")
        state = gaussian.ground_state_quadratic(model)
        measured = gaussian.apply_measurement(state, meas.with_strength(4.0), model)
        assert gaussian.half_chain_entropy(measured) < 0.5 * gaussian.half_chain_entropy(state)

    def test_number_conserving_stays_slater(self):
        model = ModelSpec(8)
        state = gaussian.ground_state_quadratic(model)
        measured = gaussian.apply_measurement(state, ALL_KINDS[0].with_strength(1.0), model)
        assert isinstance(measured, gaussian.SlaterState)
        assert measured.n_particles == 4

    def test_bond_xx_gives_bogoliubov(self):
        model = ModelSpec(8)
        measured = gaussian.measured_state(model, MeasurementSpec("bond_xx", 1.0))
        assert isinstance(measured, gaussian.BogoliubovState)
        assert np.max(np.abs(measured.anomalous())) > 1e-3

    @pytest.mark.parametrize("w", [0.1, 0.5, 1.0, 3.0])
    def test_two_site_formula(self, w):
        model = ModelSpec(2)
        measured = gaussian.measured_state(model, MeasurementSpec("density_staggered", w))
        p = 1 / (1 + math.exp(-4 * w))
        assert gaussian.entanglement_entropy(measured, Region((0,))) == pytest.approx(
            binary_entropy(p), abs=1e-12)

    def test_size_mismatch(self):
        state = gaussian.ground_state_quadratic(ModelSpec(8))
        with pytest.raises(SizeGuardError):
            gaussian.apply_measurement(state, ALL_KINDS[0], ModelSpec(10))

    def test_pattern_must_fit(self):
        model = ModelSpec(6)
        state = gaussian.ground_state_quadratic(model)
        meas = MeasurementSpec("density_pattern", 1.0, (1, 0, -1, 0))
        with pytest.raises(SizeGuardError):
            gaussian.apply_measurement(state, meas, model)

    def test_strong_staggered_measurement_freezes_chain(self):
        model = ModelSpec(16, "spin_periodic")
        measured = gaussian.measured_state(model, MeasurementSpec("density_staggered", 8.0))
        assert gaussian.half_chain_entropy(measured) < 1e-5


# ═══════════════════════════════════════════════════════════════════
# Structural properties
# ═══════════════════════════════════════════════════════════════════


def projector(state):
    if isinstance(state, gaussian.SlaterState):
        return state.correlation()
    return state.nambu()


class TestComposition:
    """M(W1) M(W2) and M(W1 + W2) give the same post-selected state."""

    @pytest.mark.parametrize("kind", list(MeasurementKind))
    def test_strengths_add(self, kind):
        model = ModelSpec(12, "spin_periodic")
        meas = MeasurementSpec(kind, pattern=(0.0, 1.0) if kind == MeasurementKind.DENSITY_PATTERN else None)
        ground = gaussian.ground_state_quadratic(model)
        twice = gaussian.apply_measurement(
            gaussian.apply_measurement(ground, meas.with_strength(0.3), model),
            meas.with_strength(0.5), model)
        once = gaussian.apply_measurement(ground, meas.with_strength(0.8), model)
        np.testing.assert_allclose(projector(twice), projector(once), atol=1e-10)


class TestStrongSubadditivity:
    """S(AB) + S(BC) >= S(B) + S(ABC) for adjacent intervals."""

    @pytest.mark.parametrize("kind", list(MeasurementKind))
    def test_adjacent_intervals(self, kind):
        model = ModelSpec(16)
        meas = MeasurementSpec(kind, 0.7, (0.0, 1.0) if kind == MeasurementKind.DENSITY_PATTERN else None)
        state = gaussian.measured_state(model, meas)
        s = lambda a, b: gaussian.entanglement_entropy(state, Region.interval(a, b))
        for start, mid, stop, end in [(0, 3, 6, 9), (2, 4, 10, 13), (1, 2, 3, 15)]:
            assert s(start, stop) + s(mid, end) >= s(mid, stop) + s(start, end) - 1e-12


class TestReorthonormalization:
    """Mixing the columns of Q leaves the Gaussian state unchanged."""

    def test_bogoliubov_state_is_invariant(self):
        model = ModelSpec(10)
        state = gaussian.measured_state(model, MeasurementSpec("bond_xx", 0.6))
        rng = np.random.default_rng(5)
        mix = np.triu(rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))) + 4 * np.eye(10)
        mixed = gaussian.BogoliubovState.from_stacked(gaussian._reorthonormalize(state.stacked @ mix))
        np.testing.assert_allclose(mixed.nambu(), state.nambu(), atol=1e-10)
        for l in range(1, 10):
            region = Region.interval(0, l)
            assert gaussian.entanglement_entropy(mixed, region) == pytest.approx(
                gaussian.entanglement_entropy(state, region), abs=1e-10)

    def test_slater_state_is_invariant(self):
        state = gaussian.ground_state_quadratic(ModelSpec(10))
        rotated = gaussian.SlaterState(gaussian._reorthonormalize(state.orbitals @ np.triu(np.ones((5, 5)))))
        np.testing.assert_allclose(rotated.correlation(), state.correlation(), atol=1e-12)
