"""
Tests for the closed-form predictions in ``lattice.theory``.

The dilogarithm and the cot-based prefactor are checked against mpmath at
high precision and against scipy.special.spence.
"""

import math

import mpmath
import numpy as np
import pytest
from scipy.special import spence

from errors import DomainError, PoleError
from lattice import theory

mpmath.mp.dps = 50


# ═══════════════════════════════════════════════════════════════════
# Luttinger parameter and exponents
# ═══════════════════════════════════════════════════════════════════


class TestLuttinger:

    def test_free_point(self):
        assert theory.luttinger_k(0.0) == pytest.approx(1.0, abs=1e-15)

    def test_repulsive_value(self):
        assert theory.luttinger_k(0.6) == pytest.approx(0.709388, abs=1e-6)

    def test_matches_mpmath(self):
        for delta in (-0.9, -0.3, 0.25, 0.8):
            exact = mpmath.pi / (2 * (mpmath.pi - mpmath.acos(delta)))
            assert theory.luttinger_k(delta) == pytest.approx(float(exact), rel=1e-14)

    def test_repulsive_side_below_one(self):
        assert theory.luttinger_k(0.3) < 1.0 < theory.luttinger_k(-0.3)

    @pytest.mark.parametrize("delta", [-1.0, 1.0, 1.5])
    def test_outside_critical_line(self, delta):
        with pytest.raises(DomainError):
            theory.luttinger_k(delta)

    def test_power_law_exponent(self):
        k = theory.luttinger_k(0.6)
        assert theory.power_law_exponent(k) == pytest.approx(2 / k - 2)
        assert theory.power_law_exponent(k) > 0

    def test_power_law_exponent_needs_k_below_one(self):
        with pytest.raises(DomainError):
            theory.power_law_exponent(1.0)


class TestFOfK:

    def test_matches_mpmath(self):
        for k in (0.3, 0.5, 0.7, 0.9):
            r = 1 / mpmath.sqrt(k)
            pref = 1 / (1 - 2 / mpmath.mpf(k)) - 1 / (2 - 2 / mpmath.mpf(k))
            exact = pref * (mpmath.pi * r * mpmath.cot(mpmath.pi * r) - 1)
            assert theory.f_of_k(k) == pytest.approx(float(exact), rel=1e-12)

    def test_pole_at_quarter(self):
        # 1/sqrt(K) = 2
        with pytest.raises(PoleError):
            theory.f_of_k(0.25)

    def test_pole_is_a_domain_error(self):
        with pytest.raises(DomainError):
            theory.f_of_k(1 / 9)

    @pytest.mark.parametrize("k", [0.0, 1.0, 1.2])
    def test_outside_domain(self, k):
        with pytest.raises(DomainError):
            theory.f_of_k(k)


# ═══════════════════════════════════════════════════════════════════
# Dilogarithm
# ═══════════════════════════════════════════════════════════════════


class TestDilog:

    @pytest.mark.parametrize("z", [-1.0, -0.9, -0.5, -0.2, 0.0, 0.1, 0.5, 0.6, 0.95, 0.999, 1.0])
    def test_matches_mpmath(self, z):
        assert theory.dilog(z) == pytest.approx(float(mpmath.polylog(2, z)), abs=1e-13)

    def test_matches_spence(self):
        for z in np.linspace(-1, 1, 41):
            assert theory.dilog(z) == pytest.approx(float(spence(1 - z)), abs=1e-12)

    def test_special_values(self):
        assert theory.dilog(1.0) == pytest.approx(math.pi ** 2 / 6, abs=1e-15)
        assert theory.dilog(-1.0) == pytest.approx(-math.pi ** 2 / 12, abs=1e-13)
        assert theory.dilog(0.0) == 0.0

    def test_outside_interval(self):
        with pytest.raises(DomainError):
            theory.dilog(1.5)


class TestDilogReflection:
    """Li2(z) + Li2(1 - z) = pi^2/6 - ln z ln(1 - z)."""

    @pytest.mark.parametrize("z", [0.01, 0.2, 0.3, 0.5, 0.7, 0.9, 0.99])
    def test_identity(self, z):
        lhs = theory.dilog(z) + theory.dilog(1 - z)
        rhs = math.pi ** 2 / 6 - math.log(z) * math.log(1 - z)
        assert lhs == pytest.approx(rhs, abs=1e-13)


# ═══════════════════════════════════════════════════════════════════
# Effective central charge
# ═══════════════════════════════════════════════════════════════════


class TestCeff:

    def test_unmeasured_limit_is_exact(self):
        assert theory.c_eff_theory(0.0) == 1.0

    def test_reference_value(self):
        assert theory.c_eff_theory(1.0) == pytest.approx(0.1225, abs=1e-3)

    def test_matches_mpmath_bracket(self):
        for w in (0.25, 0.5, 1.0, 2.0):
            s = 1 / mpmath.cosh(2 * w)
            bracket = ((1 + s) * mpmath.log(1 + s) + (1 - s) * mpmath.log(1 - s)) * mpmath.log(s)
            bracket += (1 + s) * mpmath.polylog(2, -s) + (1 - s) * mpmath.polylog(2, s)
            exact = -6 / mpmath.pi ** 2 * bracket
            assert theory.c_eff_theory(w) == pytest.approx(float(exact), abs=1e-10)

    def test_decreasing_in_strength(self):
        values = [theory.c_eff_theory(w) for w in np.linspace(0, 3, 31)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert all(0.0 <= v <= 1.0 for v in values)

    def test_small_strength_continuous(self):
        assert theory.c_eff_theory(1e-6) == pytest.approx(1.0, abs=1e-6)

    def test_strong_measurement_vanishes(self):
        assert theory.c_eff_theory(400.0) == 0.0

    def test_odd_sites_variant(self):
        assert theory.c_eff_theory(1.0, "odd_sites") == pytest.approx(theory.c_eff_theory(0.5))

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            theory.ceff_parameter(1.0, "bond")

    def test_negative_strength(self):
        with pytest.raises(DomainError):
            theory.c_eff_theory(-0.1)
