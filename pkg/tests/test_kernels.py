import numpy as np
import pytest

from timomem import (ConstructionError, Kernel, check_classical_conditions,
                     check_nec, compact_flat_kernel, compact_inflection_kernel,
                     exponential_kernel, moments, polynomial_kernel,
                     strict_decay_measure, tabulated_kernel)
from timomem.kernels import tail_mass


def brute_force_sup_ratio(k, delta, sigma_max, s_max, num=600):
    """Independent oracle: dense grid search of mu(sigma+s) e^{d sigma}/mu(s)."""
    sig = np.linspace(0.0, sigma_max, num)
    s = np.linspace(s_max / num, s_max, num)
    best = -np.inf
    arg = None
    for sg in sig:
        mu_s = k.mu(s)
        ratio = np.where(mu_s > 0, k.mu(sg + s) * np.exp(delta * sg) / mu_s, 0.0)
        j = int(np.argmax(ratio))
        if ratio[j] > best:
            best, arg = float(ratio[j]), (sg, s[j])
    return best, arg


class TestEval:
    def test_exponential_left_endpoint(self):
        k = exponential_kernel(0.5, 1.0)
        assert k.mu(0.0) == pytest.approx(0.5)

    def test_polynomial_closed_form(self):
        k = polynomial_kernel(1.0, 4.0)
        assert k.mu(1.0) == pytest.approx(0.0625)

    def test_compact_flat_outside_support(self):
        k = compact_flat_kernel(0.1, 1.0, 2.0)
        assert k.mu(3.0) == 0.0
        assert k.dmu(3.0) == 0.0

    def test_negative_s_rejected(self):
        k = exponential_kernel(0.5, 1.0)
        with pytest.raises(ValueError):
            k.mu(-0.1)
        with pytest.raises(ValueError):
            k.dmu(-0.1)

    def test_monotone_on_grid(self):
        for k in (exponential_kernel(0.5, 1.0), polynomial_kernel(1.0, 4.0),
                  compact_flat_kernel(0.1, 1.0, 2.0),
                  compact_inflection_kernel(0.12, 2.0)):
            s = np.linspace(0.0, 5.0, 400)
            mu = k.mu(s)
            assert np.all(np.diff(mu) <= 1e-15)
            assert np.all(mu >= 0)
            assert np.all(k.dmu(s) <= 1e-15)

    def test_compact_flat_constant_on_flat_zone(self):
        k = compact_flat_kernel(0.1, 1.0, 2.0)
        s = np.linspace(0.0, 1.0, 50)
        assert np.allclose(k.mu(s), 0.1)
        assert np.allclose(k.dmu(s), 0.0)

    def test_inflection_point_is_horizontal(self):
        k = compact_inflection_kernel(0.12, 2.0, inflection=0.5)
        s0 = 1.0  # inflection * support_end
        assert k.dmu(s0) == pytest.approx(0.0, abs=1e-14)
        assert k.d2mu(s0) == pytest.approx(0.0, abs=1e-14)
        assert k.dmu(0.5) < -1e-4 and k.dmu(1.5) < -1e-4

    def test_tabulated_beyond_table_warns(self):
        k = tabulated_kernel([0.0, 1.0, 2.0], [0.3, 0.2, 0.1])
        assert not k.beyond_table
        assert k.mu(5.0) == 0.0
        assert k.beyond_table

    def test_tabulated_derivative_matches_finite_differences(self):
        s = np.linspace(0.0, 4.0, 41)
        k = tabulated_kernel(s, 0.5 * np.exp(-s))
        mid = 0.5 * (s[:-1] + s[1:])
        fd = np.diff(0.5 * np.exp(-s)) / np.diff(s)
        assert np.allclose(k.dmu(mid), fd, rtol=1e-12)


class TestMoments:
    def test_exponential(self):
        m, a = moments(exponential_kernel(0.5, 1.0, b=1.0))
        assert m == pytest.approx(0.5, rel=1e-8)
        assert a == pytest.approx(0.5, rel=1e-8)

    def test_polynomial(self):
        m, a = moments(polynomial_kernel(1.0, 4.0, b=1.0))
        assert m == pytest.approx(1.0 / 3.0, rel=1e-8)
        assert a == pytest.approx(2.0 / 3.0, rel=1e-8)

    def test_compact_flat_closed_form(self):
        # level * (flat_end + ramp/2): the C^1 ramp carries half a rectangle
        k = compact_flat_kernel(0.1, 2.0, 2.5, b=1.0)
        m, a = moments(k)
        assert m == pytest.approx(0.1 * (2.0 + 0.25), rel=1e-8)
        assert a == pytest.approx(1.0 - 0.225, rel=1e-8)

    def test_narrow_ramp_approaches_rectangle(self):
        k = compact_flat_kernel(0.1, 2.0, 2.01, b=1.0)
        m, _ = moments(k)
        assert m == pytest.approx(0.2, abs=6e-4)

    def test_compact_inflection_closed_form(self):
        # cubic with centered inflection integrates to level * support / 2
        k = compact_inflection_kernel(0.12, 2.0, inflection=0.5)
        m, _ = moments(k)
        assert m == pytest.approx(0.12, rel=1e-8)

    def test_residual_violation_names_m_and_b(self):
        with pytest.raises(ConstructionError, match="m = .*b = "):
            exponential_kernel(2.0, 1.0, b=1.0)  # m = 2 > b

    def test_non_integrable_rejected(self):
        with pytest.raises(ConstructionError, match="not integrable"):
            polynomial_kernel(1.0, 1.0)

    def test_tail_mass_closed_forms(self):
        assert tail_mass(exponential_kernel(0.5, 1.0), 10.0) == pytest.approx(
            0.5 * np.exp(-10.0), rel=1e-12)
        assert tail_mass(polynomial_kernel(1.0, 4.0), 9.0) == pytest.approx(
            10.0**-3 / 3.0, rel=1e-12)
        assert tail_mass(compact_flat_kernel(0.1, 1.0, 2.0), 2.0) == 0.0


class TestNecCondition:
    def test_exponential_equality_case(self, exp1):
        v = check_nec(exp1, C=1.0, delta=1.0)
        assert v.holds
        assert v.sup_ratio_grid == pytest.approx(1.0, abs=1e-11)

    def test_polynomial_fails_with_witness(self, poly125):
        v = check_nec(poly125, C=10.0, delta=0.1, sigma_max=200.0)
        assert not v.holds
        assert v.witness is not None
        sigma_w, s_w = v.witness
        # the oracle agrees the inequality is violated at the witness
        lhs = float(poly125.mu(sigma_w + s_w))
        rhs = 10.0 * np.exp(-0.1 * sigma_w) * float(poly125.mu(s_w))
        assert lhs > rhs
        # ratio blows up at large sigma, small s
        best, (sg, _) = brute_force_sup_ratio(poly125, 0.1, 200.0, 200.0)
        assert best > 10.0
        assert sg > 100.0

    def test_compact_flat_holds_with_e2(self):
        k = compact_flat_kernel(0.1, 1.0, 2.0)
        # oracle: the scaled ratio never exceeds e^{delta * support_end}
        best, _ = brute_force_sup_ratio(k, 1.0, 50.0, 10.0)
        assert best <= np.exp(2.0) * (1 + 1e-9)
        v = check_nec(k, C=float(np.exp(2.0)), delta=1.0, sigma_max=50.0,
                      s_max=10.0)
        assert v.holds

    def test_search_mode_exponential(self, exp1):
        v = check_nec(exp1)
        assert v.holds
        assert v.C == pytest.approx(1.0, abs=1e-9)
        assert v.delta == pytest.approx(1.0, rel=1e-6)

    def test_search_mode_polynomial_fails(self, poly125):
        v = check_nec(poly125)
        assert not v.holds
        assert v.witness is not None
        assert v.sup_ratio_grid > 1e6

    def test_self_consistency_weaker_constants(self, exp1):
        v = check_nec(exp1, C=1.0, delta=1.0)
        assert v.holds
        assert check_nec(exp1, C=2.0, delta=0.5).holds

    def test_compact_search_mode_holds_with_C_above_one(self):
        v = check_nec(compact_flat_kernel(0.1, 1.5, 2.0))
        assert v.holds
        assert v.C > 1.0

    def test_zero_over_zero_is_satisfied(self):
        k = compact_flat_kernel(0.1, 1.0, 2.0)
        v = check_nec(k, C=float(np.exp(4.0)), delta=2.0, sigma_max=20.0,
                      s_max=30.0)  # grid reaches past the support
        assert v.holds

    def test_zero_plateau_then_positive_data_integrity(self):
        # bypass the constructor to exercise the internal integrity guard:
        # mu vanishes on [1, 2] yet is positive beyond, which contradicts a
        # nonincreasing kernel
        k = Kernel("tabulated", {}, 1.0,
                   table_s=np.array([0.0, 1.0, 2.0, 3.0]),
                   table_mu=np.array([0.5, 0.0, 0.0, 0.2]))
        with pytest.raises(ValueError, match="data-integrity"):
            check_nec(k, C=1.0, delta=1.0, sigma_max=1.5, s_max=3.0)

    def test_invalid_constants_rejected(self, exp1):
        with pytest.raises(ValueError):
            check_nec(exp1, C=0.5, delta=1.0)
        with pytest.raises(ValueError):
            check_nec(exp1, C=1.0, delta=-1.0)
        with pytest.raises(ValueError):
            check_nec(exp1, C=2.0)  # delta missing


class TestClassicalConditions:
    def test_exponential_domination_holds(self, exp1):
        v = check_classical_conditions(exp1, delta=1.0, k1=1.0, k2=1.0, p=1.25)
        assert v.exp_domination
        assert v.bounded_variation
        assert not v.curvature_skipped

    def test_flat_zone_fails_domination(self):
        k = compact_flat_kernel(0.1, 1.0, 2.0)
        v = check_classical_conditions(k, delta=0.5, k1=1.0, k2=10.0, p=1.25)
        assert not v.exp_domination
        assert v.first_violation_exp is not None
        assert v.first_violation_exp < 1.0  # inside the flat zone

    def test_inflection_point_fails_domination(self):
        k = compact_inflection_kernel(0.12, 2.0)
        v = check_classical_conditions(k, delta=0.5, k1=50.0, k2=100.0, p=1.25)
        assert not v.exp_domination

    def test_power_domination_exact_polynomial(self, poly125):
        # mu' = -4 mu^{5/4} exactly for (1+s)^{-4} with amplitude 1
        v = check_classical_conditions(poly125, delta=4.0, k1=4.0, k2=25.0,
                                       p=1.25)
        assert v.power_domination

    def test_power_domination_fails_for_larger_delta(self, poly125):
        v = check_classical_conditions(poly125, delta=4.5, k1=4.0, k2=25.0,
                                       p=1.25)
        assert not v.power_domination
        assert v.first_violation_power is not None

    def test_p_range_enforced(self, exp1):
        with pytest.raises(ValueError):
            check_classical_conditions(exp1, 1.0, 1.0, 1.0, p=1.6)

    def test_tabulated_skips_curvature(self):
        s = np.linspace(0.0, 5.0, 200)
        k = tabulated_kernel(s, 0.5 * np.exp(-s))
        v = check_classical_conditions(k, delta=0.9, k1=1.1, k2=1.0, p=1.25)
        assert v.curvature_skipped


class TestStrictDecayMeasure:
    def test_exponential_decays_everywhere(self, exp1):
        measure, positive = strict_decay_measure(exp1, s_max=20.0)
        assert positive
        assert measure == pytest.approx(20.0, rel=1e-6)

    def test_compact_flat_measures_the_ramp(self):
        k = compact_flat_kernel(0.1, 1.0, 2.0)
        measure, positive = strict_decay_measure(k, s_max=3.0)
        assert positive
        assert measure == pytest.approx(1.0, abs=0.01)

    def test_constant_then_cut_table_has_measure_zero(self):
        k = tabulated_kernel([0.0, 1.0, 2.0], [0.1, 0.1, 0.1])
        measure, positive = strict_decay_measure(k, s_max=2.0)
        assert measure == 0.0
        assert not positive


class TestFourTwoVsNec:
    def test_counterexample_kernel_separates_conditions(self, poly125):
        """The slow-decay kernel satisfies the pointwise power condition
        with p = 1.25 yet fails the mass-ratio condition for every tested
        constant pair."""
        v = check_classical_conditions(poly125, delta=4.0, k1=4.0, k2=25.0,
                                       p=1.25)
        assert v.power_domination
        # the sigma horizon must reach the scale where e^{delta sigma}
        # overtakes the polynomial tail, else the grid verdict is vacuous
        for C in (1.0, 10.0, 100.0, 1e4):
            for delta in (0.01, 0.1, 1.0):
                v = check_nec(poly125, C=C, delta=delta, sigma_max=1e4)
                assert not v.holds
                assert v.witness is not None
