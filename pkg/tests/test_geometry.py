"""Orbit-space geometry: coordinates, weights, curves, CSV round-trips."""

import math

import numpy as np
import pytest
import scipy.integrate

from orbiteig import geometry as G
from orbiteig.errors import DomainError, PreconditionError, ValidationError


class TestWeight:
    def test_unit_point(self):
        assert G.weight_F((1.0, 1.0), 2) == pytest.approx((2 * math.pi) ** 2, rel=1e-15)

    def test_product_rule(self):
        assert G.weight_F((2.0, 3.0), 2) == pytest.approx(6 * (2 * math.pi) ** 2, rel=1e-15)

    def test_boundary_vanishes(self):
        for n in (2, 3, 5):
            assert G.weight_F((0.7, 0.0), n) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            G.weight_F((-0.1, 1.0), 2)
        with pytest.raises(DomainError):
            G.weight_F((1.0, 1.0), 1)

    def test_unit_constant_mode(self):
        assert G.weight_F((2.0, 3.0), 3, unit_constant=True) == pytest.approx(36.0)

    def test_constant_is_squared_sphere_area(self):
        assert G.volume_constant(2) == pytest.approx((2 * math.pi) ** 2)
        assert G.sphere_area(3) == pytest.approx(4 * math.pi)


class TestUVCoordinates:
    def test_symmetric_point(self):
        uv = G.to_uv((1.0, 1.0))
        assert (uv.u, uv.v, uv.r) == (0.0, 1.0, 1.0)

    def test_boundary_point(self):
        uv = G.to_uv((1.0, 0.0))
        assert (uv.u, uv.v, uv.r) == (0.5, 0.0, 0.5)

    def test_arithmetic(self):
        uv = G.to_uv((2.0, 1.0))
        assert (uv.u, uv.v) == (1.5, 2.0)
        assert uv.r == pytest.approx(2.5, rel=1e-15)

    def test_from_uv_examples(self):
        assert G.from_uv((0.0, 1.0)) == (1.0, 1.0)
        x, y = G.from_uv((1.5, 2.0))
        assert (x, y) == (pytest.approx(2.0, rel=1e-14), pytest.approx(1.0, rel=1e-14))
        assert G.from_uv((0.5, 0.0)) == (1.0, 0.0)

    def test_round_trips(self, rng):
        for _ in range(300):
            x, y = rng.uniform(0.0, 3.0, 2)
            uv = G.to_uv((x, y))
            x2, y2 = G.from_uv(uv)
            assert x2 == pytest.approx(x, rel=1e-12, abs=1e-12)
            assert y2 == pytest.approx(y, rel=1e-12, abs=1e-12)

    def test_uv_point_validation(self):
        with pytest.raises(ValidationError):
            G.UVPoint(u=0.0, v=-1.0, r=1.0)
        with pytest.raises(ValidationError):
            G.UVPoint(u=1.0, v=1.0, r=3.0)
        with pytest.raises(DomainError):
            G.from_uv((0.0, -0.5))

    def test_array_round_trip_boundary(self):
        us = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        vs = np.zeros(5)
        xs, ys = G.xy_from_uv(us, vs)
        assert np.all(xs * ys == 0.0)
        u2, v2 = G.uv_from_xy(xs, ys)
        assert np.allclose(u2, us, rtol=1e-12)


class TestBoundaryOrbit:
    def test_canonical_reflection(self):
        orbit = G.BoundaryOrbit(2, 1.0, 2.0)
        assert (orbit.x0, orbit.y0) == (2.0, 1.0)
        assert orbit == G.BoundaryOrbit(2, 2.0, 1.0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            G.BoundaryOrbit(1, 1.0, 1.0)
        with pytest.raises(ValidationError):
            G.BoundaryOrbit(2, 0.0, 1.0)

    def test_rho0(self):
        assert G.BoundaryOrbit(2, 3.0, 4.0).rho0 == pytest.approx(5.0)


class TestProfileCurve:
    def test_validation_errors(self, unit_orbit):
        t = np.linspace(0, 1, 5)
        good = np.outer(1 - t, [1.0, 1.0])
        G.ProfileCurve(unit_orbit, t, good)
        bad_t = t.copy()
        bad_t[2] = bad_t[1]
        with pytest.raises(ValidationError):
            G.ProfileCurve(unit_orbit, bad_t, good)
        wrong_start = good.copy()
        wrong_start[0] = [0.9, 1.0]
        with pytest.raises(ValidationError):
            G.ProfileCurve(unit_orbit, t, wrong_start)
        interior_boundary = good.copy()
        interior_boundary[2, 1] = 0.0
        with pytest.raises(ValidationError):
            G.ProfileCurve(unit_orbit, t, interior_boundary)
        off_boundary = good.copy()
        off_boundary[-1] = [0.3, 0.3]
        with pytest.raises(ValidationError):
            G.ProfileCurve(unit_orbit, t, off_boundary)

    def test_terminal_snap(self, unit_orbit):
        t = np.linspace(0, 1, 5)
        pts = np.column_stack([np.ones(5), 1 - t])
        pts[-1, 1] = 1e-15
        curve = G.ProfileCurve(unit_orbit, t, pts)
        assert curve.points[-1, 1] == 0.0


class TestSpeedsAndLengths:
    def test_straight_segment_length(self, unit_orbit):
        curve = G.cone_curve(unit_orbit, 16)
        assert G.length_g(curve) == pytest.approx(math.sqrt(2.0), rel=1e-14)

    def test_cylinder_length(self, unit_orbit):
        curve = G.cylinder_curve(unit_orbit, 16)
        assert G.length_g(curve) == pytest.approx(1.0, rel=1e-14)

    def test_cone_h_length_against_quadrature(self, unit_orbit):
        # oracle: integrate F along the diagonal x = y = (1-t) with speed sqrt(2)
        oracle, _ = scipy.integrate.quad(
            lambda t: G.weight_F(((1 - t), (1 - t)), 2) * math.sqrt(2.0), 0.0, 1.0
        )
        assert oracle == pytest.approx(math.sqrt(2) * (2 * math.pi) ** 2 / 3.0, rel=1e-12)
        curve = G.cone_curve(unit_orbit, 8192)
        assert G.length_h(curve) == pytest.approx(oracle, rel=1e-8)

    def test_h_length_is_weighted_g_length(self, rng, unit_orbit):
        # consistency under refinement on a smooth curve
        from orbiteig.transforms import random_profile_curve

        curve = random_profile_curve(2, 8192, np.random.default_rng(5))
        mids = G.element_midpoints(curve)
        weighted = float(
            np.sum(G.weight_F((mids[:, 0], mids[:, 1]), 2) * G.element_chords(curve))
        )
        assert G.length_h(curve) == pytest.approx(weighted, rel=1e-12)

    def test_speed_g_uv_agreement(self):
        curve = G.sigma_s_curve(2, 0.3, 4096)
        for i in (0, 1000, 2000, 4000):
            assert G.speed_g_uv(curve, i) == pytest.approx(
                G.speed_g(curve, i), rel=1e-6
            )

    def test_reflection_preserves_weights(self, unit_orbit):
        from orbiteig.transforms import random_profile_curve

        curve = random_profile_curve(2, 64, np.random.default_rng(9))
        refl = G.reflect_curve(curve)
        assert np.array_equal(G.element_speeds_g(curve), G.element_speeds_g(refl))
        assert np.array_equal(G.element_speeds_h(curve), G.element_speeds_h(refl))


class TestConstructors:
    def test_cone_requires_symmetric_orbit(self):
        with pytest.raises(PreconditionError):
            G.cone_curve(G.BoundaryOrbit(2, 2.0, 1.0), 8)

    def test_cone_weight_profile(self, unit_orbit):
        curve = G.cone_curve(unit_orbit, 32)
        f = G.weight_F((curve.x, curve.y), 2)
        expected = G.volume_constant(2) * (1 - curve.nodes) ** 2
        assert np.allclose(f, expected, rtol=1e-13)

    def test_sigma0_point(self):
        curve = G.sigma0_curve(2, 4)
        assert curve.points[3] == pytest.approx([0.5, 0.5], rel=1e-14)

    def test_sigma_s_zero_matches_sigma0(self):
        a = G.sigma_s_curve(3, 0.0, 64)
        b = G.sigma0_curve(3, 64)
        assert np.max(np.abs(a.points - b.points)) < 1e-12

    def test_sigma_s_endpoint(self):
        curve = G.sigma_s_curve(2, 1.0, 8)
        u, v = curve.uv()
        assert (u[-1], v[-1]) == (pytest.approx(1.0, rel=1e-14), 0.0)
        assert curve.points[-1] == pytest.approx([math.sqrt(2.0), 0.0])

    def test_cylinder_midpoint(self, unit_orbit):
        curve = G.cylinder_curve(unit_orbit, 2)
        assert tuple(curve.points[1]) == (1.0, 0.5)

    def test_subdivide_preserves_geometry(self, unit_orbit):
        curve = G.sigma_s_curve(2, 0.4, 32)
        fine = G.subdivide_curve(curve, 2)
        assert fine.n_elements == 128
        assert G.length_g(fine) == pytest.approx(G.length_g(curve), rel=1e-14)

    def test_scale_curve(self, unit_orbit):
        curve = G.cone_curve(unit_orbit, 8)
        big = G.scale_curve(curve, 2.0)
        assert big.orbit.x0 == 2.0
        assert G.length_g(big) == pytest.approx(2 * math.sqrt(2.0), rel=1e-14)


class TestCurveCSV:
    def test_round_trip(self, tmp_path, unit_orbit):
        curve = G.sigma_s_curve(2, 0.25, 17)
        path = tmp_path / "curve.csv"
        G.write_curve_csv(curve, path)
        back = G.read_curve_csv(path, 2)
        assert np.array_equal(back.nodes, curve.nodes)
        assert np.array_equal(back.points, curve.points)

    def test_reflects_non_canonical_start(self, tmp_path):
        orbit = G.BoundaryOrbit(2, 2.0, 1.0)
        t = np.linspace(0, 1, 9)
        pts = np.column_stack([2.0 * (1 - t) + 1e-9, (1 - t)])
        pts[-1] = [0.0, 0.0]
        pts[0] = [2.0, 1.0]
        curve = G.ProfileCurve(orbit, t, pts)
        path = tmp_path / "c.csv"
        G.write_curve_csv(curve, path)
        swapped = path.read_text().splitlines()
        header, rows = swapped[0], swapped[1:]
        flipped = [header] + [
            ",".join([r.split(",")[0], r.split(",")[2], r.split(",")[1]]) for r in rows
        ]
        path.write_text("\n".join(flipped) + "\n")
        back = G.read_curve_csv(path, 2)
        assert back.orbit == orbit
        assert np.allclose(back.points, curve.points)

    def test_header_validation(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n0,1,1\n1,0,0\n")
        with pytest.raises(ValidationError):
            G.read_curve_csv(path, 2)
