"""
Tests for fits, theory curves and data collapse on synthetic data with known
parameters.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from errors import DomainError, FitError, PoleError
from services import analysis
from services.analysis import FitModel, Scaling


def log_series(a, b, sizes):
    return [(n, a + b * math.log(n)) for n in sizes]


# ═══════════════════════════════════════════════════════════════════
# Log law and power law
# ═══════════════════════════════════════════════════════════════════


class TestLogLaw:

    def test_exact_recovery(self):
        fit = analysis.fit_log_law(log_series(0.0435, 0.04, [8, 16, 32, 64, 128]))
        assert fit.model == FitModel.LOG_LAW
        assert fit["a"] == pytest.approx(0.0435, abs=1e-12)
        assert fit["b"] == pytest.approx(0.04, abs=1e-12)
        assert fit["c_eff"] == pytest.approx(0.12, abs=1e-12)
        assert fit.one_minus_r2 == pytest.approx(0.0, abs=1e-12)

    def test_min_size_window(self):
        data = log_series(0.1, 0.2, [4, 8]) + [(2, 5.0)] + log_series(0.1, 0.2, [32, 64, 128])
        fit = analysis.fit_log_law(data, min_size=32)
        assert fit["b"] == pytest.approx(0.2, abs=1e-12)
        assert len(fit.residuals) == 3

    def test_order_does_not_matter(self):
        data = log_series(0.3, 0.1, [10, 20, 40, 80])
        a = analysis.fit_log_law(data)
        b = analysis.fit_log_law(data[::-1])
        assert a.params == b.params

    def test_too_few_points(self):
        with pytest.raises(FitError):
            analysis.fit_log_law(log_series(0, 1, [8, 16]))

    def test_rank_deficient(self):
        with pytest.raises(FitError):
            analysis.fit_log_law([(8, 1.0), (8, 1.1), (8, 0.9)])

    def test_nonpositive_abscissa(self):
        with pytest.raises(DomainError):
            analysis.fit_log_law([(0, 1.0), (1, 1.0), (2, 1.0)])


class TestPowerLaw:

    def test_exact_recovery(self):
        sizes = [8, 12, 16, 24, 32, 48, 64]
        data = [(n, 0.1 + 0.5 * n ** -0.8) for n in sizes]
        fit = analysis.fit_power_law(data)
        assert fit["a"] == pytest.approx(0.1, abs=1e-6)
        assert fit["b"] == pytest.approx(0.5, abs=1e-5)
        assert fit["c"] == pytest.approx(0.8, abs=1e-5)
        assert fit.r_squared > 1 - 1e-10

    def test_noisy_recovery(self):
        rng = np.random.default_rng(11)
        sizes = np.arange(6, 80, 4)
        data = [(n, 0.1 + 0.5 * n ** -0.8 + rng.normal(scale=1e-6)) for n in sizes]
        fit = analysis.fit_power_law(data)
        assert fit["c"] == pytest.approx(0.8, abs=0.02)

    def test_needs_four_points(self):
        with pytest.raises(FitError):
            analysis.fit_power_law([(n, 1 / n) for n in (2, 4, 8)])

    def test_fit_error_carries_parameters(self):
        err = FitError("did not converge", {"a": 1.0, "b": 2.0, "c": 0.5})
        assert err.last_params["c"] == 0.5


# ═══════════════════════════════════════════════════════════════════
# Chord fits
# ═══════════════════════════════════════════════════════════════════


class TestChord:

    def test_chord_length(self):
        assert analysis.chord_length(7, 14) == pytest.approx(28 / math.pi)

    def test_chord_distance(self):
        np.testing.assert_allclose(analysis.chord_distance([1, 7, 13], 14), [1, 7, 1])

    def test_chord_log_recovery(self):
        total = 14
        data = [(l, analysis.theory_chord_entropy(0.6, l, total, 0.2)) for l in range(1, total)]
        fit = analysis.fit_chord_log(data, total)
        assert fit["c_eff"] == pytest.approx(0.6, abs=1e-10)
        assert fit["c2"] == pytest.approx(0.2, abs=1e-10)

    def test_odd_sizes_only(self):
        pts = analysis.odd_sizes_only([(l, float(l)) for l in range(1, 10)])
        assert [p.x for p in pts] == [1, 3, 5, 7, 9]

    def test_chord_power_law_recovery(self):
        total = 30
        data = [(l, 0.3 + 0.4 * analysis.chord_distance(l, total) ** -0.7) for l in range(1, 30, 2)]
        fit = analysis.fit_chord_power_law(data, total)
        assert fit["c"] == pytest.approx(0.7, abs=1e-5)

    def test_outside_chain(self):
        with pytest.raises(DomainError):
            analysis.fit_chord_log([(0.5, 1.0), (14, 1.0), (3, 1.0)], 14)


# ═══════════════════════════════════════════════════════════════════
# Mutual information
# ═══════════════════════════════════════════════════════════════════


class TestMutualInformation:

    def test_small_argument_remainder(self):
        c = 0.7
        coeff = analysis.mi_small_argument_coefficient(c)
        for x in (0.01, 0.03, 0.05, 0.1):
            remainder = abs(analysis.theory_mutual_information(c, x) - coeff * x ** 2)
            assert remainder <= math.pi ** 4 * x ** 4 / 9

    def test_pole(self):
        with pytest.raises(PoleError):
            analysis.theory_mutual_information(1.0, 0.5)
        with pytest.raises(DomainError):
            analysis.theory_mutual_information(1.0, 0.6)

    def test_fit_recovers_quadratic(self):
        c = 0.35
        data = [(x, analysis.mi_small_argument_coefficient(c) * x ** 2) for x in (0.01, 0.02, 0.03, 0.05)]
        fit = analysis.fit_mutual_information(data)
        assert fit["eta"] == pytest.approx(2.0, abs=1e-10)
        # the quartic term of the theory curve is a sub-percent effect at x <= 0.05
        assert fit["c_eff"] == pytest.approx(c, rel=1e-2)

    def test_fit_on_theory_curve(self):
        c = 0.5
        data = [(x, analysis.theory_mutual_information(c, x)) for x in (0.01, 0.02, 0.03, 0.04, 0.05)]
        fit = analysis.fit_mutual_information(data)
        assert 1.8 <= fit["eta"] <= 2.2
        assert fit["c_eff"] == pytest.approx(c, rel=1e-12)
        assert fit["prefactor"] == pytest.approx(analysis.mi_small_argument_coefficient(c), rel=1e-12)

    def test_prefactor_is_not_biased_by_free_exponent(self):
        """A scaled, slightly tilted curve: eta drifts but c_eff stays on the curve."""
        c = 0.515
        xs = (0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05)
        data = [(x, 0.99 * analysis.theory_mutual_information(c, x) * (x / 0.035) ** 0.06) for x in xs]
        fit = analysis.fit_mutual_information(data)
        assert fit["eta"] > 2.05
        assert fit["c_eff"] == pytest.approx(c, rel=0.03)

    def test_fit_rejects_large_ratios(self):
        with pytest.raises(DomainError):
            analysis.fit_mutual_information([(0.1, 0.1), (0.2, 0.4), (0.3, 0.9)])

    def test_fit_rejects_nonpositive(self):
        with pytest.raises(FitError):
            analysis.fit_mutual_information([(0.01, 0.0), (0.02, 0.1), (0.03, 0.2)])


class TestDiscreteSlopes:

    def test_log_law_has_constant_slope(self):
        sizes = [8, 10, 12, 14, 16]
        slopes = analysis.discrete_log_slopes(sizes, [0.3 + 0.25 * math.log(n) for n in sizes])
        np.testing.assert_allclose(slopes, 0.25)

    def test_matches_derivative_integral(self):
        """Mean slope over [a, b] equals the integral of dS/dlnL over ln L."""
        f = lambda u: 0.1 * u ** 2
        value, _ = integrate.quad(lambda u: 0.2 * u, math.log(8), math.log(16))
        slope = analysis.discrete_log_slopes([8, 16], [f(math.log(8)), f(math.log(16))])[0]
        assert slope == pytest.approx(value / math.log(2))


# ═══════════════════════════════════════════════════════════════════
# Data collapse
# ═══════════════════════════════════════════════════════════════════


def family(scaling_fn, sizes, deltas):
    return {n: [(d, scaling_fn(d, n)) for d in deltas] for n in sizes}


class TestCollapse:

    deltas = np.linspace(-0.5, 0.5, 11)
    sizes = [8, 12, 16]

    def test_log_family_collapses_under_log_scaling(self):
        curves = family(lambda d, n: 0.4 * d * math.log(n), self.sizes, self.deltas)
        log_res = analysis.data_collapse(curves, 0.0, Scaling.LOG_L)
        pow_res = analysis.data_collapse(curves, 0.0, Scaling.POWER_L, nu=1.0)
        assert log_res.residual < 1e-20
        assert log_res.residual < pow_res.residual

    def test_power_family_prefers_power_scaling(self):
        curves = family(lambda d, n: 0.05 * d * n, self.sizes, self.deltas)
        log_res = analysis.data_collapse(curves, 0.0, Scaling.LOG_L)
        pow_res = analysis.data_collapse(curves, 0.0, Scaling.POWER_L, nu=1.0)
        assert pow_res.residual < log_res.residual

    def test_subtract_critical(self):
        curves = family(lambda d, n: 0.4 * d * math.log(n) + 0.3 * math.log(n), self.sizes, self.deltas)
        raw = analysis.data_collapse(curves, 0.0, Scaling.LOG_L)
        shifted = analysis.data_collapse(curves, 0.0, Scaling.LOG_L, subtract_critical=True)
        assert shifted.residual < 1e-20 < raw.residual

    def test_overlap_and_label(self):
        curves = family(lambda d, n: d, self.sizes, self.deltas)
        res = analysis.data_collapse(curves, 0.0, "log_L")
        assert res.overlap == pytest.approx((-0.5 * math.log(8), 0.5 * math.log(8)))
        assert "proxy" in res.label

    def test_needs_three_sizes(self):
        with pytest.raises(FitError):
            analysis.data_collapse(family(lambda d, n: d, [8, 12], self.deltas), 0.0)

    def test_no_overlap(self):
        curves = {8: [(0.1, 0.0), (0.2, 0.0)], 12: [(0.3, 0.0), (0.4, 0.0)], 16: [(0.5, 0.0), (0.6, 0.0)]}
        with pytest.raises(FitError):
            analysis.data_collapse(curves, 0.0, Scaling.POWER_L)

    def test_critical_point_must_be_bracketed(self):
        curves = family(lambda d, n: d, self.sizes, [0.1, 0.2, 0.3])
        with pytest.raises(FitError):
            analysis.data_collapse(curves, 0.0, subtract_critical=True)
