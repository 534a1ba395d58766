import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsvirial import DomainError, Kind, Nonlinearity
from nlsvirial.model import (F_value, f_value, omega, omega_factored, parameter_grid,
                             quartic_gap, ratio_kernel, ratio_kernel_deficit, rho0, s_alpha,
                             sat_eta, sat_h, sat_omega, sat_rho, sqrt_h, tau_star,
                             verify_scalar_inequalities)

from oracles import F_by_quadrature, F_exact, f_exact, ratio_exact

SAT = Nonlinearity.saturable()
SQRT = Nonlinearity.square_root()
BOUNDED = [SAT, SQRT]
KINDS = [SAT, SQRT, Nonlinearity.power_law(2.0), Nonlinearity.power_law(2.5)]
alphas_inner = st.floats(-1 + 1e-9, -0.5 - 1e-9)


def _mp_label(nl):
    return {Kind.SQUARE_ROOT: "sqrt", Kind.SATURABLE: "saturable", Kind.POWER_LAW: "power"}[nl.kind]


class TestNonlinearity:
    def test_constructors(self):
        assert SAT.kind is Kind.SATURABLE and SAT.p is None
        assert Nonlinearity.power_law(2.0).p == 2.0

    @pytest.mark.parametrize("p", [1.0, 0.5, -2.0, float("nan"), float("inf")])
    def test_power_law_needs_p_above_one(self, p):
        with pytest.raises(DomainError):
            Nonlinearity.power_law(p)

    def test_p_only_for_power_law(self):
        with pytest.raises(DomainError):
            Nonlinearity(Kind.SATURABLE, 2.0)

    def test_subcritical_flag(self):
        assert Nonlinearity.power_law(2.9).subcritical
        assert not Nonlinearity.power_law(3.0).subcritical

    def test_hashable_and_equal(self):
        assert Nonlinearity.saturable() == SAT
        assert len({SAT, Nonlinearity.saturable(), SQRT}) == 2


class TestValues:
    @pytest.mark.parametrize("nl, s, want", [(SAT, 1.0, 0.5), (SQRT, 3.0, 0.5),
                                             (Nonlinearity.power_law(2.0), 4.0, 2.0)])
    def test_f_examples(self, nl, s, want):
        assert f_value(nl, s) == pytest.approx(want, rel=1e-15)

    def test_F_examples(self):
        assert F_value(SQRT, 3.0) == pytest.approx(1.0, rel=1e-15)
        assert F_value(SAT, 1.0) == pytest.approx(1.0 - math.log(2.0), rel=1e-14)
        assert F_value(SAT, 1.0) == pytest.approx(0.3068528194400547, rel=1e-14)
        for nl in KINDS:
            assert F_value(nl, 0.0) == 0.0

    @pytest.mark.parametrize("bad", [-1e-300, -1.0, float("nan"), float("inf")])
    @pytest.mark.parametrize("fn", [f_value, F_value])
    def test_domain_errors(self, fn, bad):
        with pytest.raises(DomainError):
            fn(SAT, bad)

    def test_array_with_negative_rejected(self):
        with pytest.raises(DomainError):
            f_value(SQRT, np.array([1.0, -0.1]))

    def test_scalar_in_scalar_out(self):
        assert isinstance(f_value(SAT, 2.0), float)
        assert f_value(SAT, np.array([2.0])).shape == (1,)

    @pytest.mark.parametrize("nl", KINDS, ids=lambda n: n.label())
    def test_f_zero_and_strictly_increasing(self, nl):
        s = np.concatenate([[0.0], np.geomspace(1e-12, 1e6, 20_000)])
        v = f_value(nl, s)
        assert v[0] == 0.0
        assert np.all(np.diff(v) > 0)

    @pytest.mark.parametrize("nl", BOUNDED, ids=lambda n: n.label())
    def test_bounded_range(self, nl):
        v = f_value(nl, np.geomspace(1e-12, 1e12, 1000))
        assert np.all((v >= 0) & (v < 1))

    @pytest.mark.parametrize("nl", KINDS, ids=lambda n: n.label())
    def test_F_matches_quadrature_of_f(self, nl):
        # 100 log-spaced points; scipy quad on the f definition as the oracle
        for s in np.geomspace(1e-6, 1e6, 100):
            ref = F_by_quadrature(lambda x: float(f_value(nl, x)), s)
            assert F_value(nl, s) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("nl", KINDS, ids=lambda n: n.label())
    def test_F_against_high_precision(self, nl):
        for s in np.geomspace(1e-12, 1e8, 60):
            ref = float(F_exact(_mp_label(nl), s, nl.p))
            assert F_value(nl, s) == pytest.approx(ref, rel=1e-13)

    @pytest.mark.parametrize("nl", KINDS, ids=lambda n: n.label())
    def test_f_against_high_precision(self, nl):
        for s in np.geomspace(1e-12, 1e8, 60):
            ref = float(f_exact(_mp_label(nl), s, nl.p))
            assert f_value(nl, s) == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("nl", KINDS, ids=lambda n: n.label())
    def test_F_strictly_increasing(self, nl):
        v = F_value(nl, np.geomspace(1e-6, 1e6, 10_000))
        assert np.all(np.diff(v) > 0)


class TestRatioKernel:
    def test_examples(self):
        assert ratio_kernel(SQRT, 3.0) == pytest.approx(1.5, rel=1e-15)
        assert ratio_kernel(SAT, 1.0) == pytest.approx(0.5 / (1.0 - math.log(2.0)), rel=1e-14)
        assert 2.0 - ratio_kernel(SAT, 1e-6) < 1e-6
        assert 2.0 - ratio_kernel(SAT, 1e-6) > 0

    def test_high_precision_oracle(self):
        for nl in BOUNDED:
            for s in np.geomspace(1e-14, 1e10, 80):
                with mp.workdps(60):
                    ref = ratio_exact(_mp_label(nl), s)
                    ref_def = float(2 - ref)
                assert ratio_kernel(nl, s) == pytest.approx(float(ref), rel=1e-14)
                assert ratio_kernel_deficit(nl, s) == pytest.approx(ref_def, rel=1e-9)

    def test_square_root_closed_form(self):
        s = np.geomspace(1e-8, 1e8, 200)
        assert np.allclose(ratio_kernel(SQRT, s), 1.0 + 1.0 / np.sqrt(1.0 + s), rtol=1e-14)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_nonpositive_rejected(self, bad):
        with pytest.raises(DomainError):
            ratio_kernel(SAT, bad)

    def test_power_law_unsupported(self):
        with pytest.raises(DomainError):
            ratio_kernel(Nonlinearity.power_law(2.0), 1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-300, 1e300), st.sampled_from(BOUNDED))
    def test_kernel_strictly_between_one_and_two(self, s, nl):
        k = ratio_kernel(nl, s)
        assert 1.0 <= k <= 2.0  # strict in exact arithmetic; rounding can reach the ends
        if 1e-6 < s < 1e6:
            assert 1.0 < k < 2.0

    @pytest.mark.parametrize("nl", BOUNDED, ids=lambda n: n.label())
    def test_decreasing_pairwise(self, nl):
        s = np.geomspace(1e-10, 1e10, 5000)
        assert np.all(np.diff(ratio_kernel_deficit(nl, s)) > 0)

    def test_limits(self):
        for nl in BOUNDED:
            assert abs(ratio_kernel(nl, 1e-9) - 2.0) < 1e-8
            assert abs(ratio_kernel(nl, 1e12) - 1.0) < 1e-5


class TestAlphaFunctions:
    def test_s_alpha_examples(self):
        assert s_alpha(-0.75) == pytest.approx(3.0, rel=1e-15)
        assert s_alpha(-0.9) == pytest.approx(0.5625, rel=1e-15)
        assert s_alpha(-0.5 - 1e-6) > 1e10

    def test_rho0_examples(self):
        assert rho0(-0.75) == pytest.approx((1.0 / 6.0) ** 1.5, rel=1e-15)
        assert rho0(-0.75) == pytest.approx(0.0680414, abs=1e-7)
        assert rho0(-1 + 1e-9) == pytest.approx((1.0 / 3.0) ** 1.5, rel=1e-8)

    @pytest.mark.parametrize("fn", [s_alpha, rho0, tau_star])
    @pytest.mark.parametrize("a", [-0.5, -1.0, -0.3, -1.5, float("nan")])
    def test_boundary_excluded(self, fn, a):
        with pytest.raises(DomainError):
            fn(a)

    @settings(max_examples=200, deadline=None)
    @given(alphas_inner)
    def test_s_alpha_defining_relation(self, a):
        s = s_alpha(a)
        with mp.workdps(50):
            sm = mp.mpf(s)
            resid = 2 * a * (mp.sqrt(1 + sm) - (1 + sm)) - sm
            scale = max(1.0, abs(float(sm)))
        assert abs(float(resid)) <= 1e-12 * scale

    @settings(max_examples=100, deadline=None)
    @given(alphas_inner)
    def test_omega_minimum_at_tau_star(self, a):
        ts = tau_star(a)
        assert ts > 1.0
        assert omega_factored(a, ts) == 0.0
        assert abs(omega(a, ts)) < 1e-12 * max(1.0, ts ** 3)
        for t in (ts * 0.9, ts * 1.1):
            assert omega_factored(a, t) > 0

    def test_omega_forms_agree(self):
        t = np.linspace(1.0, 1e3, 5000)
        for a in parameter_grid(-1.0, -0.5):
            assert np.allclose(omega(a, t), omega_factored(a, t), rtol=1e-9, atol=1e-9)

    def test_omega_nonnegative_example(self):
        t = np.geomspace(1.0 + 1e-9, 1e3, 100_000)
        assert np.all(omega_factored(-0.75, t) >= 0)


class TestInequalities:
    def test_sqrt_h_negative(self):
        s = np.geomspace(1e-12, 1e6, 10_000)
        for a in parameter_grid(-0.5, 0.0, closed_lo=True):
            assert np.all(sqrt_h(a, s) < 0)

    def test_sat_h_example(self):
        s = np.geomspace(1e-12, 1e6, 10_000)
        assert np.all(sat_h(-0.5, s) < 0)

    def test_saturable_helpers_against_mpmath(self):
        with mp.workdps(60):
            for s in np.geomspace(1e-8, 1e6, 50):
                sm = mp.mpf(s)
                rho = 2 * sm ** 2 - (sm ** 2 + 2 * sm) * mp.log1p(sm)
                eta = 4 - 2 * (1 + sm) * mp.log1p(sm) / sm - (2 + sm) / (1 + sm)
                om = sm - mp.log1p(sm) - sm ** 2 / (2 * (1 + sm) ** 2)
                assert sat_rho(s) == pytest.approx(float(rho), rel=1e-10)
                assert sat_eta(s) == pytest.approx(float(eta), rel=1e-10)
                assert sat_omega(s) == pytest.approx(float(om), rel=1e-10)

    def test_quartic_example(self):
        s = 2.0
        assert s - math.log1p(s) == pytest.approx(2.0 - math.log(3.0), rel=1e-15)
        assert s - math.log1p(s) <= s * s / 2
        assert quartic_gap(SAT, s) > 0

    def test_quartic_gap_against_mpmath(self):
        with mp.workdps(60):
            for s in np.geomspace(1e-10, 1e6, 50):
                assert quartic_gap(SAT, s) == pytest.approx(
                    float(s ** 2 / 2 - F_exact("saturable", s)), rel=1e-10)
                assert quartic_gap(SQRT, s) == pytest.approx(
                    float(s ** 2 / 4 - F_exact("sqrt", s)), rel=1e-10)

    def test_parameter_grid(self):
        g = parameter_grid(-1.0, 0.0)
        assert g.size == 20 and g[0] == pytest.approx(-0.999) and g[-1] == pytest.approx(-1e-3)


class TestVerifySuite:
    @pytest.mark.parametrize("nl", BOUNDED, ids=lambda n: n.label())
    def test_suite_passes(self, nl):
        rep = verify_scalar_inequalities(nl, 1e6, 100_000)
        assert rep.passed, [c for c in rep.checks if not c.passed]
        assert all(c.min_margin > 0 for c in rep.checks)
        assert rep.n_samples == 100_000

    def test_parameterized_families_have_twenty_values(self):
        rep = verify_scalar_inequalities(SQRT, 1e6, 1000)
        counts = {name: n for name, n, _, _ in rep.summary_rows()}
        assert max(counts.values()) == 20

    def test_saturable_example(self):
        rep = verify_scalar_inequalities(SAT, 1e6, 10_000)
        assert rep.passed

    def test_power_law_families(self):
        rep = verify_scalar_inequalities(Nonlinearity.power_law(2.0), 1e6, 1000)
        assert rep.passed

    @pytest.mark.parametrize("kw", [dict(n_samples=99), dict(s_max=0.0), dict(s_max=-1.0)])
    def test_preconditions(self, kw):
        args = dict(s_max=1e6, n_samples=1000)
        args.update(kw)
        with pytest.raises(DomainError):
            verify_scalar_inequalities(SAT, **args)
