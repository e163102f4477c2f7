import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critwaves.dispersion import (DEGENERATE, HYPERBOLIC, OSCILLATORY, BracketError, FlowParams,
                                  PoleError, PreconditionError, RangeError, alpha_scan_multiplicity,
                                  exhaustive_k_max, find_alpha_two_modes, h, kernel_report,
                                  lhs_dispersion, rhs_dispersion, solve_mu, theta,
                                  two_mode_bracket)

mp.mp.dps = 30


def mp_lhs(alpha, k):
    u = mp.mpf(alpha) + mp.mpf(k) ** 2
    if u == 0:
        return mp.mpf(1)
    th = mp.sqrt(abs(u))
    return th * (mp.coth(th) if u > 0 else mp.cot(th))


class TestFlowParams:
    def test_rejects_inadmissible(self):
        with pytest.raises(PreconditionError):
            FlowParams(0.0, -1.0, 1.0)
        with pytest.raises(PreconditionError):
            FlowParams(1.0, 0.0, 1.0)
        with pytest.raises(PreconditionError):
            FlowParams(1.0, -1.0, 0.0)
        with pytest.raises(PreconditionError):
            FlowParams(1.0, -1.0, 1.0, kappa=-1.0)

    def test_dict_round_trip(self):
        p = FlowParams(0.3, -5.0, 2.0, 0.5)
        assert FlowParams.from_dict(p.as_dict()) == p


class TestTheta:
    def test_degenerate(self):
        assert theta(-4.0, 2.0).regime == DEGENERATE
        assert theta(-4.0, 2.0).magnitude == 0.0

    def test_oscillatory(self):
        t = theta(-60.0, 7.0)
        assert t.regime == OSCILLATORY
        assert t.magnitude == pytest.approx(float(mp.sqrt(11)), rel=1e-15)

    def test_hyperbolic(self):
        t = theta(-3.0, 2.0)
        assert t.regime == HYPERBOLIC and t.magnitude == 1.0


class TestLhs:
    def test_degenerate_convention(self):
        for k in (1.0, 2.5, 7.0):
            assert lhs_dispersion(-k * k, k) == 1.0

    def test_quarter_wave_zero(self):
        assert abs(lhs_dispersion(-1.0 - math.pi ** 2 / 4, 1.0)) < 1e-15

    def test_coth_one(self):
        assert lhs_dispersion(-3.0, 2.0) == pytest.approx(float(mp.coth(1)), rel=1e-14)
        assert lhs_dispersion(-3.0, 2.0) == pytest.approx(1.313035, abs=1e-6)

    def test_pole_guard(self):
        with pytest.raises(PoleError):
            lhs_dispersion(-1.0 - math.pi ** 2, 1.0)
        with pytest.raises(PoleError):
            lhs_dispersion(-(2 * math.pi + 5e-9) ** 2, 0.0 + 1e-300)

    @given(st.floats(0.1, 20.0), st.floats(-1.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_series_continuity(self, k, e):
        eps = e * 1e-4
        v = lhs_dispersion(-k * k + eps, k)
        assert abs(v - float(mp_lhs(-k * k + eps, k))) < 1e-12

    @given(st.floats(-200.0, -0.01), st.floats(0.1, 20.0))
    @settings(max_examples=300, deadline=None)
    def test_matches_high_precision(self, alpha, k):
        try:
            v = lhs_dispersion(alpha, k)
        except PoleError:
            th = math.sqrt(abs(alpha + k * k))
            assert abs(th - round(th / math.pi) * math.pi) < 1e-8
            return
        ref = float(mp_lhs(alpha, k))
        assert abs(v - ref) <= 1e-9 * max(1.0, abs(ref))


class TestRhsAndMu:
    def test_rhs_examples(self):
        assert rhs_dispersion(FlowParams(1.0, -1.0, math.pi / 2)) == pytest.approx(1.0, abs=1e-15)
        assert rhs_dispersion(FlowParams(1.0, -4.0, math.pi / 2)) == pytest.approx(0.25, abs=1e-15)
        assert rhs_dispersion(FlowParams(0.5, -4.0, math.pi / 2)) == pytest.approx(1.0, abs=1e-15)

    def test_solve_mu_examples(self):
        assert solve_mu(1.0, -4.0, math.pi / 2) == pytest.approx(0.5, rel=1e-15)
        assert solve_mu(1.0, -1.0, math.pi / 2) == pytest.approx(1.0, rel=1e-15)
        mu = solve_mu(18.0, -60.0, 3 * math.pi / 4)
        assert abs(rhs_dispersion(FlowParams(mu, -60.0, 3 * math.pi / 4)) - 18.0) < 1e-12 * 18

    def test_range_error(self):
        with pytest.raises(RangeError):
            solve_mu(-3.0, -4.0, math.pi / 4)  # floor is 2 cot(pi/4) = 2

    @given(st.floats(-100.0, -0.01), st.floats(0.05, math.pi - 0.05), st.floats(1e-3, 50.0))
    @settings(max_examples=300, deadline=None)
    def test_round_trip(self, alpha, lam, excess):
        a = math.sqrt(-alpha) / math.tan(lam) + excess
        mu = solve_mu(a, alpha, lam)
        assert mu > 0
        assert abs(rhs_dispersion(FlowParams(mu, alpha, lam)) - a) <= 1e-12 * max(1.0, abs(a))

    def test_negative_sine_branch(self):
        # lambda in (pi, 2 pi): the positive root still reproduces a
        mu = solve_mu(3.0, -2.0, 4.0)
        assert mu > 0 and abs(rhs_dispersion(FlowParams(mu, -2.0, 4.0)) - 3.0) < 1e-12


class TestH:
    def test_continuity_value(self):
        assert h(9.0, 3.0) == 1.0

    def test_oscillatory_value(self):
        # sqrt(3) cot(sqrt(3)) from an independent high-precision evaluation
        assert h(4.0, 1.0) == pytest.approx(float(mp.sqrt(3) * mp.cot(mp.sqrt(3))), rel=1e-13)
        assert h(4.0, 1.0) == pytest.approx(-0.2817473, abs=1e-7)

    def test_hyperbolic_value(self):
        assert h(3.0, 2.0) == pytest.approx(1.313035285499331, rel=1e-14)

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            h(0.0, 1.0)

    def test_monotone_in_k_on_hyperbolic_side(self):
        t = 30.0
        ks = np.linspace(math.sqrt(t) + 0.01, 40.0, 400)
        vals = [h(t, k) for k in ks]
        assert np.all(np.diff(vals) > 0)

    def test_monotone_in_t_between_poles(self):
        k = 3.0
        # between the first and second cot poles of h(.; 3)
        ts = k * k + (np.linspace(1.0, 2.0, 402)[1:-1] * math.pi) ** 2
        vals = [h(t, k) for t in ts]
        assert np.all(np.diff(vals) < 0)


class TestKernelReport:
    def test_degenerate_hit(self):
        p = FlowParams(1.0, -4.0, math.atan2(1.0, -1.0))
        # choose mu so that rhs = 1 at lambda = 3 pi / 4
        mu = solve_mu(1.0, -4.0, p.lam)
        rep = kernel_report(p.with_(mu=mu), 10.0, tol=1e-10)
        assert 2.0 in rep.wavenumbers

    def test_constructed_hit(self):
        p = FlowParams(solve_mu(lhs_dispersion(-12.0, 2.0), -12.0, 2.8), -12.0, 2.8)
        rep = kernel_report(p, 10.0)
        assert rep.wavenumbers == (2.0,)
        assert rep.residuals[0] <= 1e-10

    def test_brute_force_scan(self):
        p = FlowParams(1.0, -1.0, math.pi / 2)
        rep = kernel_report(p, 10.0)
        rhs = rhs_dispersion(p)
        expected = [k for k in range(1, 11) if abs(lhs_dispersion(-1.0, k) - rhs) <= 1e-8]
        assert list(rep.wavenumbers) == expected
        assert rep.dimension == len(rep.residuals)
        assert all(r <= rep.tol for r in rep.residuals)

    def test_pole_skipped_with_warning(self):
        alpha = -1.0 - math.pi ** 2
        p = FlowParams(1.0, alpha, math.pi / 2)
        rep = kernel_report(p, 3.0)
        assert any("k=1" in w for w in rep.warnings)

    def test_exhaustive_bound(self):
        alpha, a = -60.0, 18.0
        kmax = exhaustive_k_max(alpha, a)
        for k in np.arange(math.ceil(kmax), kmax + 50):
            assert lhs_dispersion(alpha, k) > a


class TestTwoModes:
    def test_example_4_7(self):
        alpha, a = find_alpha_two_modes(4.0, 7.0, strategy="below")
        assert abs(alpha + 60.0) <= 1.5 and abs(a - 18.0) <= 1.0
        assert abs(h(-alpha, 4.0) - h(-alpha, 7.0)) < 1e-10
        # bracket of the below strategy: 33 = k2^2 - k1^2 lies in (3 pi^2, 5 pi^2) -> n = 1
        assert 49 + math.pi ** 2 < -alpha < 49 + 4 * math.pi ** 2

    def test_inside_1_5(self):
        alpha, a = find_alpha_two_modes(1.0, 5.0, lam=math.pi / 2, strategy="inside")
        assert -25.0 < alpha < -1.0 - math.pi ** 2
        assert 1 + math.pi ** 2 < -alpha < 1 + 2.25 * math.pi ** 2
        g = lambda t: float(mp_lhs(-t, 1) - mp_lhs(-t, 5))  # noqa: E731
        ref = mp.findroot(lambda t: mp_lhs(-t, 1) - mp_lhs(-t, 5), -alpha)
        assert abs(float(ref) + alpha) < 1e-10
        assert abs(g(-alpha)) < 1e-10

    def test_inside_precondition(self):
        with pytest.raises(PreconditionError):
            find_alpha_two_modes(1.0, 2.0, strategy="inside")

    def test_below_preconditions(self):
        with pytest.raises(PreconditionError):
            find_alpha_two_modes(1.0, 2.0, strategy="below")
        k2 = math.sqrt(1.0 + 5 * math.pi ** 2)
        with pytest.raises(PreconditionError):
            two_mode_bracket(1.0, k2, math.pi / 2, "below")
        with pytest.raises(PreconditionError):
            find_alpha_two_modes(4.0, 7.0, strategy="sideways")

    def test_inside_needs_nonpositive_cot(self):
        with pytest.raises(PreconditionError):
            find_alpha_two_modes(1.0, 5.0, lam=1.0, strategy="inside")

    def test_sparse_sampling_may_fail_loudly(self):
        try:
            find_alpha_two_modes(4.0, 7.0, strategy="below", samples_per_pi=1)
        except BracketError as exc:
            assert "samples" in str(exc)

    @pytest.mark.parametrize("k1,k2,strategy", [(4, 7, "below"), (1, 5, "inside"), (2, 6, "inside"),
                                                (1, 6, "below"), (3, 9, "below")])
    def test_construction_soundness(self, k1, k2, strategy):
        lam = 2.0 if strategy == "inside" else math.pi / 2
        alpha, a = find_alpha_two_modes(k1, k2, lam=lam, strategy=strategy)
        mu = solve_mu(a, alpha, lam)
        rep = kernel_report(FlowParams(mu, alpha, lam), exhaustive_k_max(alpha, a))
        assert {float(k1), float(k2)} <= set(rep.wavenumbers)
        assert all(r <= 1e-9 for r in rep.residuals)


class TestScan:
    def test_scan_contains_4_7(self):
        alpha, _ = find_alpha_two_modes(4.0, 7.0, strategy="below")
        found = alpha_scan_multiplicity(math.pi / 2, 8.0, (55.0, 65.0), 2000)
        hits = [(al, rep) for al, rep in found if {4.0, 7.0} <= set(rep.wavenumbers)]
        assert hits and min(abs(al - alpha) for al, _ in hits) < 1e-9

    def test_single_wavenumber_is_empty(self):
        assert alpha_scan_multiplicity(math.pi / 2, 1.5, (1.0, 50.0), 500) == []

    def test_no_oscillatory_pairs_below_pi_squared(self):
        found = alpha_scan_multiplicity(math.pi / 2, 8.0, (1e-3, math.pi ** 2), 4000)
        ts = np.linspace(1e-3, math.pi ** 2, 4000)
        for alpha, rep in found:
            osc = [k for k in rep.wavenumbers if -alpha - k * k > 0]
            assert len(osc) < 2
        # brute force: on (0, pi^2) every oscillatory theta_k is below pi, where x cot x decreases in x,
        # so distinct oscillatory k never coincide
        for t in ts[::50]:
            vals = [h(t, k) for k in range(1, 9) if t - k * k > 0]
            assert len(set(np.round(vals, 12))) == len(vals)
