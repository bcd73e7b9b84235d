"""Tilted-family weights, eigenvalues, Dini bounds, and round-offs."""

import math

import numpy as np
import pytest

from orbiteig import bessel, cone_analysis, eigensolver as E, geometry as G
from orbiteig import perturbation as P
from orbiteig.errors import PreconditionError


class TestWeights:
    def test_values_at_origin(self):
        p0, q0 = P.weights_PQ(2, 0.0, 0.0)
        assert (p0, q0) == (2.0, 1.0)

    def test_terminal_zero(self):
        for n in (2, 4):
            p1, q1 = P.weights_PQ(n, 1.0, 1.0)
            assert p1 == 0.0 and q1 == 0.0

    def test_dot_zero_at_s0(self):
        pd, qd = P.weights_PQ_dot(3, 0.0, 0.5)
        assert pd == 0.0 and qd == 0.0

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_dot_finite_differences(self, n):
        h = 1e-5
        ts = np.linspace(0.0, 0.95, 11)
        for s in (0.1, 0.3):
            pd, qd = P.weights_PQ_dot(n, s, ts)
            pp, qp = P.weights_PQ(n, s + h, ts)
            pm, qm = P.weights_PQ(n, s - h, ts)
            assert np.max(np.abs((pp - pm) / (2 * h) - pd)) < 1e-6
            assert np.max(np.abs((qp - qm) / (2 * h) - qd)) < 1e-6

    def test_scaled_dot_tends_to_ddot(self):
        # the limit is non-uniform toward t = 1, so test away from the end
        ts = np.linspace(0.0, 0.9, 9)
        for n in (2, 4):
            pdd, qdd = P.weights_PQ_ddot0(n, ts)
            errs = []
            for s in (0.02, 0.01, 0.005):
                pd, qd = P.weights_PQ_dot(n, s, ts)
                errs.append(max(np.max(np.abs(pd / s - pdd)), np.max(np.abs(qd / s - qdd))))
            assert errs[2] < errs[1] < errs[0]
            assert errs[-1] < 0.05

    def test_ddot_domain(self):
        with pytest.raises(PreconditionError):
            P.weights_PQ_ddot0(2, 1.0)


class TestLambdaSigmaS:
    def test_s0_matches_closed_form(self):
        for n in (2, 4):
            sol = P.lambda_sigma_s(n, 0.0, cross_check=True)
            exact = cone_analysis.cone_lambda_p2(n)
            assert abs(sol.lam - exact) <= sol.error_bar + 1e-9 * exact

    def test_cross_check_enabled(self):
        sol = P.lambda_sigma_s(2, 0.1, cross_check=True)
        assert sol.extras["curve_cross_check"]["gap"] <= 2 * (
            sol.error_bar + sol.extras["curve_cross_check"]["error_bar"] + 1e-10 * sol.lam
        )

    def test_continuity_toward_zero(self):
        base = cone_analysis.cone_lambda_p2(2)
        gaps = []
        for s in (0.1, 0.05, 0.025):
            sol = P.lambda_sigma_s(2, s, cross_check=False)
            gaps.append(abs(sol.lam - base))
        assert gaps[0] > gaps[1] > gaps[2]

    def test_two_sided_comparison_bound(self):
        # lambda(s0) <= lambda(s) * (1+s^2)/(1+s0^2) * max(1, s0/s)
        pairs = [(0.05, 0.1), (0.1, 0.2), (0.2, 0.1), (0.3, 0.15)]
        lam = {}
        for s in {v for pair in pairs for v in pair}:
            lam[s] = P.lambda_sigma_s(2, s, cross_check=False).lam
        for s0, s in pairs:
            bound = lam[s] * (1 + s**2) / (1 + s0**2) * max(1.0, s0 / s)
            assert lam[s0] <= bound * (1 + 1e-8)

    def test_eigenfunction_converges_to_explicit_one(self):
        # phi'(0) = 1 normalization on both sides; compare on [0, 0.9]
        nodes = 2048
        t = np.linspace(0.0, 1.0, nodes + 1)
        tm = 0.5 * (t[:-1] + t[1:])
        keep = t <= 0.9
        keep_el = tm <= 0.9
        scale0 = bessel.phi_sigma_prime(2, 0.0)
        phi_ref = bessel.phi_sigma(2, t[keep]) / scale0
        dphi_ref = bessel.phi_sigma_prime(2, tm[keep_el]) / scale0
        sups = []
        dsups = []
        for s in (0.2, 0.1, 0.05):
            prob = P.sigma_problem_factory(2, s)(nodes)
            sol = E.solve_p2(prob)
            phi = sol.phi / (sol.phi[1] / t[1])
            d = np.diff(phi) / np.diff(t)
            sups.append(np.max(np.abs(phi[keep] - phi_ref)))
            dsups.append(np.max(np.abs(d[keep_el] - dphi_ref)))
        assert sups[0] > sups[1] > sups[2]
        assert dsups[0] > dsups[1] > dsups[2]
        assert sups[-1] < 0.05 * np.max(np.abs(phi_ref))


class TestDini:
    def test_positive_at_small_s(self):
        for n in (2, 3, 4, 5):
            for s in (0.025, 0.05):
                assert P.dini_lower_bound(n, s, nodes=2048).bound > 0.0

    def test_matches_finite_differences(self):
        h = 1e-3
        for n, s in ((2, 0.1), (4, 0.2), (5, 0.1)):
            b = P.dini_lower_bound(n, s, nodes=2048)
            lam = lambda ss: E.solve_p2(P.sigma_problem_factory(n, ss)(2048)).lam
            fd = (lam(s) - lam(s - h)) / h
            assert fd >= b.bound - 1e-3
            # one-sided difference carries an O(h) bias of a few 1e-3
            assert fd == pytest.approx(b.bound, abs=2e-2)

    def test_known_negative_region(self):
        # the family turns around: by s = 0.2 the slope at n = 5 is negative
        assert P.dini_lower_bound(5, 0.2, nodes=2048).bound < 0.0

    def test_scaled_numerator_approaches_limit_integral(self):
        target = P.conemin0_integral(4)
        values = [P.dini_lower_bound(4, s, nodes=4096).scaled_numerator
                  for s in (0.2, 0.1, 0.05, 0.025)]
        errors = [abs(v - target) for v in values]
        assert all(b < a for a, b in zip(errors, errors[1:]))

    def test_s_range(self):
        with pytest.raises(PreconditionError):
            P.dini_lower_bound(2, 0.0)
        with pytest.raises(PreconditionError):
            P.dini_lower_bound(2, 0.7)


class TestConemin0:
    def test_divergent_at_n2(self):
        assert P.conemin0_integral(2) == math.inf

    def test_signs(self):
        for n in (3, 4, 5):
            assert P.conemin0_integral(n) > 0.0
        for n in (6, 7):
            assert P.conemin0_integral(n) < 0.0

    def test_truncated_growth_for_n2(self):
        a = P.conemin0_truncated(2, 0.1)
        b = P.conemin0_truncated(2, 0.03)
        assert b > a > 0.0

    def test_range(self):
        with pytest.raises(PreconditionError):
            P.conemin0_integral(8)


class TestRoundoff:
    def test_matches_segment_before_tangency(self):
        n, s, delta, N = 2, 0.2, 0.02, 512
        rc = P.roundoff_curve(n, s, delta, N)
        sg = G.sigma_s_curve(n, s, N)
        t = rc.nodes
        t0 = 1.0 - s * delta / (1.0 + s * s)
        early = t <= t0
        assert np.array_equal(rc.points[early], sg.points[early])

    def test_endpoint_formula(self):
        s, delta = 0.3, 0.05
        rc = P.roundoff_curve(2, s, delta, 64)
        u, v = rc.uv()
        assert v[-1] == 0.0
        assert u[-1] == pytest.approx(s - delta + delta / math.sqrt(1 + s * s), rel=1e-12)

    def test_tangency_validation(self):
        with pytest.raises(PreconditionError):
            P.roundoff_curve(2, 0.1, 0.1, 64)
        with pytest.raises(PreconditionError):
            P.roundoff_curve(2, 0.1, -0.01, 64)

    def test_beats_cone_for_n2(self):
        sol = E.refine_and_extrapolate(
            lambda N: P.roundoff_curve(2, 0.2, 0.02, N), 2.0, levels=3, base_nodes=512
        )
        assert sol.lam - cone_analysis.cone_lambda_p2(2) > sol.error_bar

    def test_delta_limit_recovers_segment(self):
        lam_seg = P.lambda_sigma_s(2, 0.2, cross_check=False)
        sols = [
            E.refine_and_extrapolate(
                lambda N, d=d: P.roundoff_curve(2, 0.2, d, N), 2.0, levels=2,
                base_nodes=512,
            )
            for d in (0.08, 0.02)
        ]
        gaps = [abs(s.lam - lam_seg.lam) for s in sols]
        assert gaps[1] < gaps[0]
        assert gaps[1] < 1e-4 * lam_seg.lam


class TestReport:
    def test_report_shapes_and_margins(self):
        rep = P.perturbation_report(2, s_values=(0.05, 0.1), levels=2, base_nodes=256,
                                    dini_nodes=1024)
        assert list(rep.s_grid) == [0.0, 0.05, 0.1]
        assert rep.margins[0] == 0.0
        assert np.all(rep.margins[1:] > 0.0)
        assert set(rep.dini_bounds) == {0.05, 0.1}
        payload = rep.to_json_dict()
        assert payload["conemin0_divergent"] is True
        rows = rep.to_csv_rows()
        assert rows[0] == ("s", "lambda", "error_bar", "dini_bound", "margin")
        assert len(rows) == 4
