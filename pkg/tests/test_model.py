"""Model core: parameters, efficacy algebra, vector field and equilibria."""

import math
from fractions import Fraction

import numpy as np
import pytest

from hcvdelay import (
    InvalidModelInput,
    ModelParams,
    NO_THERAPY,
    SystemState,
    TherapyEfficacies,
    basic_r0,
    combined_efficacy,
    critical_efficacy,
    endemic_equilibrium,
    uninfected_equilibrium,
    uninfected_equilibrium_point,
    vector_field,
)
from conftest import random_valid_setup


class TestModelParams:
    def test_rejects_nonpositive(self, table1):
        with pytest.raises(InvalidModelInput):
            ModelParams(s=0.0, r=2.0, t_max=3.6e7, alpha=2.25e-7, beta=2.9,
                        d1=0.01, d2=1.0, d3=6.0)
        with pytest.raises(InvalidModelInput):
            ModelParams(s=1.0, r=2.0, t_max=3.6e7, alpha=-1e-7, beta=2.9,
                        d1=0.01, d2=1.0, d3=6.0)

    def test_rejects_r_not_exceeding_d1(self):
        with pytest.raises(InvalidModelInput):
            ModelParams(s=1.0, r=0.01, t_max=3.6e7, alpha=2.25e-7, beta=2.9,
                        d1=0.01, d2=1.0, d3=6.0)

    def test_source_above_turnover_warns_but_constructs(self):
        with pytest.warns(UserWarning):
            p = ModelParams(s=2e5, r=2.0, t_max=1e7, alpha=2.25e-7, beta=2.9,
                            d1=0.01, d2=1.0, d3=6.0)
        assert p.s == 2e5


class TestTherapyEfficacies:
    def test_bounds(self):
        with pytest.raises(InvalidModelInput):
            TherapyEfficacies(eta1=1.0, eta_r=0.0, c=0.5)
        with pytest.raises(InvalidModelInput):
            TherapyEfficacies(eta1=0.0, eta_r=-0.1, c=0.5)
        with pytest.raises(InvalidModelInput):
            TherapyEfficacies(eta1=0.0, eta_r=0.0, c=0.0)
        TherapyEfficacies(eta1=0.0, eta_r=0.0, c=0.5)  # zero efficacies fine

    def test_derived_factors(self):
        eff = TherapyEfficacies(eta1=0.5, eta_r=0.7, c=0.81)
        assert eff.eta_bar == pytest.approx(0.6)
        assert eff.infection_factor == pytest.approx(1 - 0.405)
        assert eff.production_factor == pytest.approx(0.4)


class TestCombinedEfficacy:
    def test_no_drug(self):
        assert combined_efficacy(NO_THERAPY) == 0.0

    def test_reference_triple(self):
        eff = TherapyEfficacies(eta1=0.5, eta_r=0.7, c=0.81)
        assert combined_efficacy(eff) == pytest.approx(0.762, abs=1e-12)

    def test_attenuation_limit(self):
        eff = TherapyEfficacies(eta1=0.8, eta_r=0.8, c=1.0 - 1e-12)
        assert combined_efficacy(eff) == pytest.approx(0.96, abs=1e-9)

    def test_in_unit_interval_randomized(self, rng):
        for _ in range(50):
            eff = TherapyEfficacies(eta1=rng.uniform(0, 1 - 1e-9),
                                    eta_r=rng.uniform(0, 1 - 1e-9),
                                    c=rng.uniform(1e-9, 1 - 1e-9))
            assert 0.0 <= combined_efficacy(eff) < 1.0


class TestVectorField:
    def test_zero_at_endemic_equilibrium(self, table2, eff_crit):
        eq = endemic_equilibrium(table2, eff_crit)
        f = vector_field(eq.state, eq.state, table2, eff_crit)
        scale = np.max(np.abs(eq.state.as_array()))
        assert np.max(np.abs(f)) < 1e-8 * scale

    def test_zero_at_uninfected_equilibrium(self, table1):
        t_hat = uninfected_equilibrium(table1)
        st = SystemState(t_hat, 0.0, 0.0, 0.0)
        f = vector_field(st, st, table1, NO_THERAPY)
        assert np.max(np.abs(f)) < 1e-8 * t_hat

    def test_exact_arithmetic_oracle(self, table1):
        """Term-by-term recomputation with exact rational arithmetic."""
        st = SystemState(1e7, 1e7, 1e7, 1e7)
        f = vector_field(st, st, table1, NO_THERAPY)
        s, r, tm = Fraction(1), Fraction(2), Fraction(36_000_000)
        al = Fraction(225, 10) / Fraction(10) ** 8
        be = Fraction(29, 10)
        d1, d2, d3 = Fraction(1, 100), Fraction(1), Fraction(6)
        T = I = VI = VNI = Fraction(10) ** 7
        exact = [
            s + r * T * (1 - (T + I) / tm) - d1 * T - al * VI * T,
            al * VI * T - d2 * I,
            be * I - d3 * VI,
            Fraction(0) * be * I - d3 * VNI,
        ]
        for got, want in zip(f, exact):
            assert got == pytest.approx(float(want), rel=1e-12)

    def test_quasi_positivity_randomized(self, rng):
        for _ in range(30):
            p, eff = random_valid_setup(rng, require_endemic=False)
            vals = 10 ** rng.uniform(0, 7, size=4)
            for i in range(4):
                x = vals.copy()
                x[i] = 0.0
                st = SystemState.from_array(x)
                f = vector_field(st, st, p, eff)
                assert f[i] >= 0.0

    def test_delay_enters_infection_term_only(self, table1):
        cur = SystemState(1e7, 1e6, 1e5, 1e4)
        d_a = SystemState(2e7, 5e6, 3e5, 9e4)
        d_b = SystemState(1e6, 5e6, 8e5, 9e4)
        fa = vector_field(cur, d_a, table1, NO_THERAPY)
        fb = vector_field(cur, d_b, table1, NO_THERAPY)
        assert fa[0] == fb[0] and fa[2] == fb[2] and fa[3] == fb[3]
        assert fa[1] != fb[1]


class TestUninfectedEquilibrium:
    def test_small_source_limit(self):
        p = ModelParams(s=1e-30, r=2.0, t_max=3.6e7, alpha=2.25e-7, beta=2.9,
                        d1=0.01, d2=1.0, d3=6.0)
        limit = p.t_max * (p.r - p.d1) / p.r
        assert uninfected_equilibrium(p) == pytest.approx(limit, rel=1e-12)

    def test_quadratic_residual(self, table1, table2):
        for p in (table1, table2):
            th = uninfected_equilibrium(p)
            res = p.s + p.r * th * (1 - th / p.t_max) - p.d1 * th
            assert abs(res) < 1e-10 * max(p.d1 * th, 1.0)

    def test_reference_values(self, table1, table2):
        assert uninfected_equilibrium(table1) == pytest.approx(3.582e7, rel=1e-3)
        assert uninfected_equilibrium(table2) == pytest.approx(6.031e6, rel=1e-3)


class TestBasicR0:
    def test_untreated_table1(self, table1):
        assert basic_r0(table1, NO_THERAPY) == pytest.approx(3.895, rel=2e-3)

    def test_eta_064(self, table1):
        eff = TherapyEfficacies(eta1=0.8, eta_r=0.0, c=0.5)
        assert combined_efficacy(eff) == pytest.approx(0.64)
        assert basic_r0(table1, eff) == pytest.approx(3.8954 * 0.36, rel=2e-3)

    def test_unity_at_critical_efficacy(self, table1):
        eta_c = critical_efficacy(table1)
        # any triple realizing eta = eta_c makes R0 = 1
        eta1 = 0.5
        c = 0.5
        eta_bar_needed = 1 - (1 - eta_c) / (1 - c * eta1)
        eff = TherapyEfficacies(eta1=eta1, eta_r=2 * eta_bar_needed - eta1, c=c)
        assert basic_r0(table1, eff) == pytest.approx(1.0, rel=1e-12)

    def test_monotone_decreasing_in_efficacies(self, rng):
        for _ in range(20):
            p, eff = random_valid_setup(rng, require_endemic=False)
            up1 = TherapyEfficacies(min(eff.eta1 + 0.1, 1 - 1e-9), eff.eta_r, eff.c)
            upr = TherapyEfficacies(eff.eta1, min(eff.eta_r + 0.1, 1 - 1e-9), eff.c)
            assert basic_r0(p, up1) < basic_r0(p, eff)
            assert basic_r0(p, upr) < basic_r0(p, eff)


class TestCriticalEfficacy:
    def test_reference_values(self, table1, table2):
        assert critical_efficacy(table1) == pytest.approx(0.7433, abs=1e-3)
        assert critical_efficacy(table2) == pytest.approx(0.9447, abs=1e-3)

    def test_threshold_dichotomy_randomized(self, rng):
        for _ in range(30):
            p, eff = random_valid_setup(rng, require_endemic=False)
            above = basic_r0(p, eff) > 1.0
            below_thresh = combined_efficacy(eff) < critical_efficacy(p)
            assert above == below_thresh


class TestEndemicEquilibrium:
    def test_absent_when_cleared(self, table1):
        eff = TherapyEfficacies(eta1=0.9, eta_r=0.8, c=0.9)
        assert combined_efficacy(eff) > critical_efficacy(table1)
        assert endemic_equilibrium(table1, eff) is None

    def test_reference_values(self, table2, eff_crit):
        eq = endemic_equilibrium(table2, eff_crit)
        assert eq.kind == "endemic"
        assert eq.state.t_cells == pytest.approx(1.401e6, rel=1e-3)
        assert eq.r0 == pytest.approx(4.31, rel=2e-3)

    def test_virion_ratio(self, rng):
        for _ in range(20):
            p, eff = random_valid_setup(rng)
            if eff.eta_bar == 0:
                continue
            eq = endemic_equilibrium(p, eff)
            ratio = eq.state.v_ni / eq.state.v_i
            assert ratio == pytest.approx(eff.eta_bar / (1 - eff.eta_bar), rel=1e-12)

    def test_total_virion_identity(self, rng):
        for _ in range(20):
            p, eff = random_valid_setup(rng)
            eq = endemic_equilibrium(p, eff)
            want = p.beta * eq.state.i_cells / p.d3
            assert eq.state.total_virions == pytest.approx(want, rel=1e-12)

    def test_zero_field_randomized(self, rng):
        for _ in range(20):
            p, eff = random_valid_setup(rng)
            eq = endemic_equilibrium(p, eff)
            f = vector_field(eq.state, eq.state, p, eff)
            scale = np.max(np.abs(eq.state.as_array()))
            assert np.max(np.abs(f)) < 1e-8 * scale

    def test_uninfected_point_record(self, table1):
        eq = uninfected_equilibrium_point(table1, NO_THERAPY)
        assert eq.kind == "uninfected"
        assert eq.state.i_cells == eq.state.v_i == eq.state.v_ni == 0.0


class TestSystemState:
    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(InvalidModelInput):
            SystemState(-1.0, 0.0, 0.0, 0.0)
        with pytest.raises(InvalidModelInput):
            SystemState(math.nan, 0.0, 0.0, 0.0)

    def test_array_round_trip(self):
        st = SystemState(1.0, 2.0, 3.0, 4.0)
        assert SystemState.from_array(st.as_array()) == st
        assert st.total_virions == 7.0
