"""Solver checks: assemblies, quotients, eigenvalues against closed forms."""

import math

import numpy as np
import pytest

from orbiteig import bessel
from orbiteig import eigensolver as E
from orbiteig import geometry as G
from orbiteig.errors import DegenerateCurveError, PreconditionError


class TestAssemble:
    def test_cylinder_weights(self, unit_orbit):
        curve = G.cylinder_curve(unit_orbit, 16)
        prob = E.assemble(curve, 2.0)
        tm = 0.5 * (curve.nodes[:-1] + curve.nodes[1:])
        expected = G.volume_constant(2) * (1 - tm)
        assert np.allclose(prob.a, expected, rtol=1e-13)
        assert np.allclose(prob.b, expected, rtol=1e-13)

    def test_cone_weights(self, unit_orbit):
        p = 3.0
        curve = G.cone_curve(unit_orbit, 16)
        prob = E.assemble(curve, p)
        tm = 0.5 * (curve.nodes[:-1] + curve.nodes[1:])
        f = G.volume_constant(2) * (1 - tm) ** 2
        assert np.allclose(prob.a, f * 2.0 ** (0.5 * (1 - p)), rtol=1e-13)
        assert np.allclose(prob.b, f * math.sqrt(2.0), rtol=1e-13)

    def test_repeated_node_contracted(self, unit_orbit):
        t = np.linspace(0, 1, 7)
        pts = np.outer(1 - t, [1.0, 1.0])
        pts[3] = pts[2]
        curve = G.ProfileCurve(unit_orbit, t, pts)
        prob = E.assemble(curve, 2.0)
        assert prob.a.size == curve.n_elements - 1

    def test_zero_length_curve(self, unit_orbit):
        t = np.linspace(0, 1, 4)
        pts = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
        pts[-1] = [1.0, 0.0]
        # all elements except the last are degenerate; shrink the last too
        pts = np.array([[1.0, 1.0]] * 4)
        pts[-1] = [1.0, 1.0 - 1e-16]
        with pytest.raises((DegenerateCurveError, Exception)):
            curve = G.ProfileCurve(unit_orbit, t, pts)
            E.assemble(curve, 2.0)

    def test_p_below_two(self, unit_orbit):
        with pytest.raises(PreconditionError):
            E.assemble(G.cone_curve(unit_orbit, 8), 1.5)


class TestRayleighQuotient:
    def test_zero_function_is_infinite(self, unit_orbit):
        prob = E.assemble(G.cylinder_curve(unit_orbit, 32), 2.0)
        assert E.rayleigh_quotient(prob, np.zeros(prob.n_nodes)) == math.inf

    def test_linear_ramp_on_cylinder(self, unit_orbit):
        # exact integrals: (1/2) / (1/12) = 6 in the continuum
        values = []
        for N in (64, 256, 1024, 4096):
            prob = E.assemble(G.cylinder_curve(unit_orbit, N), 2.0)
            values.append(E.rayleigh_quotient(prob, prob.t_nodes))
        errors = [abs(v - 6.0) for v in values]
        assert errors[-1] < 1e-5
        assert all(b < a for a, b in zip(errors, errors[1:]))

    def test_variational_upper_bound(self, unit_orbit, rng):
        prob = E.assemble(G.cone_curve(unit_orbit, 128), 2.0)
        lam = E.solve_p2(prob).lam
        for _ in range(200):
            w = np.concatenate([[0.0], rng.uniform(-1, 1, prob.n_nodes - 1)])
            assert E.rayleigh_quotient(prob, w) >= lam - 1e-10

    def test_shape_and_start_validation(self, unit_orbit):
        prob = E.assemble(G.cone_curve(unit_orbit, 8), 2.0)
        with pytest.raises(PreconditionError):
            E.rayleigh_quotient(prob, np.ones(prob.n_nodes + 1))
        with pytest.raises(PreconditionError):
            E.rayleigh_quotient(prob, np.ones(prob.n_nodes))


class TestSolveP2:
    def test_cone_n2(self, unit_orbit):
        sol = E.refine_and_extrapolate(G.cone_curve(unit_orbit, 128), 2.0, levels=4)
        assert sol.lam == pytest.approx(math.pi**2 / 2, rel=1e-6)
        assert sol.error_bar < 1e-6 * sol.lam

    def test_cylinder_n2(self, unit_orbit):
        sol = E.refine_and_extrapolate(G.cylinder_curve(unit_orbit, 128), 2.0, levels=4)
        assert sol.lam == pytest.approx(bessel.first_root(0.0) ** 2, rel=1e-6)

    def test_cone_n4(self):
        orbit = G.BoundaryOrbit(4, 1.0, 1.0)
        sol = E.refine_and_extrapolate(G.cone_curve(orbit, 128), 2.0, levels=4)
        assert sol.lam == pytest.approx(bessel.first_root(2.5) ** 2 / 2, rel=1e-6)

    def test_cylinder_n3_is_pi_squared(self):
        orbit = G.BoundaryOrbit(3, 1.0, 1.0)
        sol = E.refine_and_extrapolate(G.cylinder_curve(orbit, 128), 2.0, levels=4)
        assert abs(sol.lam - math.pi**2) < max(sol.error_bar, 1e-6 * sol.lam)

    def test_solution_invariants(self, unit_orbit):
        prob = E.assemble(G.cone_curve(unit_orbit, 256), 2.0)
        sol = E.solve_p2(prob)
        assert sol.phi[0] == 0.0
        assert np.all(sol.phi[1:] > 0.0)
        assert np.max(np.abs(sol.phi)) == 1.0
        assert E.rayleigh_quotient(prob, sol.phi) == pytest.approx(sol.lam, rel=1e-12)

    def test_wrong_exponent(self, unit_orbit):
        prob = E.assemble(G.cone_curve(unit_orbit, 8), 3.0)
        with pytest.raises(PreconditionError):
            E.solve_p2(prob)


class TestSolveGeneralP:
    def test_p2_cross_check(self, unit_orbit):
        prob = E.assemble(G.cylinder_curve(unit_orbit, 256), 2.0)
        direct = E.solve_p2(prob).lam
        descent = E.solve_general_p(prob, rng_seed=4).lam
        assert descent == pytest.approx(direct, rel=1e-8)

    def test_scaling_law(self, unit_orbit):
        curve = G.cone_curve(unit_orbit, 128)
        big = G.scale_curve(curve, 2.0)
        for p in (2.0, 3.0, 5.0):
            if p == 2.0:
                lam1 = E.solve_p2(E.assemble(curve, p)).lam
                lam2 = E.solve_p2(E.assemble(big, p)).lam
            else:
                lam1 = E.solve_general_p(E.assemble(curve, p), rng_seed=1).lam
                lam2 = E.solve_general_p(E.assemble(big, p), rng_seed=1).lam
            assert abs(lam2 * 2.0**p / lam1 - 1.0) < 1e-10

    def test_relation_to_ball_at_p3(self):
        # ratio of the cone quotient to the (2n-1)-ball quotient is exactly
        # 2^{-p/2} element-by-element, so the solved ratio must match closely
        from orbiteig.cone_analysis import cone_ball_relation_check

        rep = cone_ball_relation_check(2, 3.0, levels=2, base_nodes=256)
        assert rep.relative_deviation < 1e-4

    def test_eigenfunction_positive(self, unit_orbit):
        prob = E.assemble(G.cylinder_curve(unit_orbit, 128), 4.0)
        sol = E.solve_general_p(prob, rng_seed=0)
        assert np.all(sol.phi[1:] > 0.0)
        assert sol.phi[0] == 0.0


class TestRefineAndExtrapolate:
    def test_single_level_rejected(self, unit_orbit):
        with pytest.raises(PreconditionError):
            E.refine_and_extrapolate(G.cone_curve(unit_orbit, 32), 2.0, levels=1)

    def test_factory_source(self, unit_orbit):
        sol = E.refine_and_extrapolate(
            lambda N: G.cone_curve(unit_orbit, N), 2.0, levels=3, base_nodes=64
        )
        assert sol.lam == pytest.approx(math.pi**2 / 2, rel=1e-7)
        assert sol.extras["level_nodes"] == [65, 129, 257]

    def test_empirical_order_reported(self, unit_orbit):
        sol = E.refine_and_extrapolate(G.cylinder_curve(unit_orbit, 64), 3.0, levels=3)
        assert sol.extras["order_estimate"] == pytest.approx(2.0, abs=0.3)

    def test_nodal_reparametrization_exactness(self, unit_orbit, rng):
        # the discrete quotient does not see the parameter labels at all
        curve = G.sigma_s_curve(2, 0.3, 64)
        breaks = np.sort(rng.uniform(0.02, 0.98, curve.n_elements - 1))
        relabeled = G.ProfileCurve(
            curve.orbit, np.concatenate([[0.0], breaks, [1.0]]), curve.points.copy()
        )
        lam_a = E.solve_p2(E.assemble(curve, 2.0)).lam
        lam_b = E.solve_p2(E.assemble(relabeled, 2.0)).lam
        assert lam_a == pytest.approx(lam_b, rel=1e-13)

    def test_reflection_invariance(self):
        from orbiteig.transforms import random_profile_curve

        curve = random_profile_curve(2, 128, np.random.default_rng(11))
        lam_a = E.solve_p2(E.assemble(curve, 2.0)).lam
        lam_b = E.solve_p2(E.assemble(G.reflect_curve(curve), 2.0)).lam
        assert lam_a == pytest.approx(lam_b, rel=1e-12)

    def test_large_p_trend_quick(self, unit_orbit):
        roots = []
        for p in (4.0, 8.0):
            sol = E.refine_and_extrapolate(G.cylinder_curve(unit_orbit, 128), p, levels=2)
            roots.append(sol.lam ** (1.0 / p))
        assert roots[0] > roots[1] > 1.0
