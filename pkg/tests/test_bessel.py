"""Bessel kernel against half-integer closed forms and independent oracles."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from orbiteig import bessel
from orbiteig.errors import DomainError


def j_half(x):
    return math.sqrt(2.0 / (math.pi * x)) * math.sin(x)


def j_minus_half(x):
    return math.sqrt(2.0 / (math.pi * x)) * math.cos(x)


def j_three_halves(x):
    return math.sqrt(2.0 / (math.pi * x)) * (math.sin(x) / x - math.cos(x))


def j_five_halves(x):
    return math.sqrt(2.0 / (math.pi * x)) * (
        (3.0 / (x * x) - 1.0) * math.sin(x) - 3.0 * math.cos(x) / x
    )


CLOSED_FORMS = {
    -0.5: j_minus_half,
    0.5: j_half,
    1.5: j_three_halves,
    2.5: j_five_halves,
}


def tan_equals_x_root():
    """First positive root of tan x = x, located by plain bisection.

    This is the first root of the order-3/2 Bessel function, but the
    solve below never touches the Bessel code.
    """
    lo, hi = 0.5 * math.pi + 1e-9, 1.5 * math.pi - 1e-9
    f = lambda x: math.sin(x) / math.cos(x) - x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestBesselJ:
    def test_at_zero(self):
        assert bessel.bessel_j(0.0, 0.0) == 1.0
        assert bessel.bessel_j(1.5, 0.0) == 0.0
        assert bessel.bessel_j(-0.5, 0.0) == math.inf

    def test_half_integer_closed_forms(self):
        xs = np.linspace(0.05, 10.0, 173)
        for nu, closed in CLOSED_FORMS.items():
            ours = bessel.bessel_j(nu, xs)
            ref = np.array([closed(x) for x in xs])
            assert np.max(np.abs(ours - ref)) < 1e-12 * (1.0 + np.max(np.abs(ref)))

    def test_sine_root(self):
        assert abs(bessel.bessel_j(0.5, math.pi)) < 1e-15

    def test_large_argument_recurrence_regime(self):
        for nu in (-0.5, 0.5, 1.5, 2.5):
            for x in (15.0, 25.0, 40.0):
                assert bessel.bessel_j(nu, x) == pytest.approx(
                    CLOSED_FORMS[nu](x), abs=1e-13
                )

    def test_against_scipy(self):
        xs = np.linspace(0.1, 30.0, 97)
        for nu in (0.0, 0.5, 1.0, 2.5, 3.5, 5.5):
            ours = bessel.bessel_j(nu, xs)
            ref = scipy.special.jv(nu, xs)
            assert np.max(np.abs(ours - ref)) < 1e-11

    def test_three_term_recurrence_residual(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            nu = rng.uniform(0.5, 5.5)
            x = rng.uniform(0.2, 12.0)
            res = (
                bessel.bessel_j(nu - 1.0, x)
                + bessel.bessel_j(nu + 1.0, x)
                - (2.0 * nu / x) * bessel.bessel_j(nu, x)
            )
            assert abs(res) < 1e-10

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            bessel.bessel_j(-1.0, 1.0)
        with pytest.raises(DomainError):
            bessel.bessel_j(0.5, -1.0)


class TestFirstRoot:
    def test_half_order_is_pi(self):
        assert bessel.first_root(0.5) == pytest.approx(math.pi, rel=1e-12)

    def test_order_zero(self):
        # frozen from an independent bisection on the ascending series
        assert bessel.first_root(0.0) == pytest.approx(2.404825557695773, rel=1e-12)
        assert bessel.first_root(0.0) == pytest.approx(
            scipy.special.jn_zeros(0, 1)[0], rel=1e-12
        )

    def test_three_halves_vs_tangent_oracle(self):
        assert bessel.first_root(1.5) == pytest.approx(tan_equals_x_root(), rel=1e-12)

    def test_roots_increase_with_order(self):
        roots = [bessel.first_root(nu) for nu in (0.5, 1.5, 2.5, 3.5)]
        assert all(a < b for a, b in zip(roots, roots[1:]))

    def test_root_residual(self):
        for nu in (0.0, 0.5, 1.5, 2.5, 4.5, 5.5):
            j = bessel.first_root(nu)
            assert abs(bessel.bessel_j(nu, j)) < 1e-10


class TestLommel:
    def test_zero(self):
        assert bessel.lommel_f(0.5, 0.0) == 0.0

    def test_value_at_pi(self):
        # closed-form half-integer evaluation collapses to exactly 2
        assert bessel.lommel_f(0.5, math.pi) == pytest.approx(2.0, abs=1e-12)

    def test_derivative_matches_integrand(self):
        h = 1e-5
        for alpha in (0.5, 1.5, 2.5):
            j = bessel.first_root(alpha)
            for t in np.linspace(0.15 * j, 0.95 * j, 7):
                fd = (bessel.lommel_f(alpha, t + h) - bessel.lommel_f(alpha, t - h)) / (2 * h)
                exact = t * (
                    bessel.bessel_j(alpha + 1.0, t) ** 2 + bessel.bessel_j(alpha, t) ** 2
                )
                assert fd == pytest.approx(exact, abs=1e-6)

    def test_first_integral_closed_form(self):
        for n in (2, 3, 4, 5):
            alpha = n - 1.5
            j = bessel.first_root(alpha)
            expected = j * j * bessel.bessel_j(alpha + 1.0, j) ** 2
            assert bessel.first_integral(alpha) == pytest.approx(expected, rel=1e-12)

    def test_first_integral_against_quadrature(self):
        for n in (2, 5):
            alpha = n - 1.5
            j = bessel.first_root(alpha)
            quad, _ = scipy.integrate.quad(
                lambda t: t
                * (scipy.special.jv(alpha + 1, t) ** 2 + scipy.special.jv(alpha, t) ** 2),
                0.0,
                j,
            )
            assert bessel.first_integral(alpha) == pytest.approx(quad, rel=1e-9)


class TestPhiSigma:
    def test_dirichlet_end(self):
        for n in (2, 3, 4, 5):
            assert abs(bessel.phi_sigma(n, 0.0)) < 1e-12

    def test_closed_form_value(self):
        assert bessel.phi_sigma(2, 0.75) == pytest.approx(2.0 * math.sqrt(2.0) / math.pi,
                                                          rel=1e-12)

    def test_free_end_limit(self):
        for n in (2, 3, 5):
            alpha = n - 1.5
            j = bessel.first_root(alpha)
            expected = (0.5 * j) ** alpha / math.gamma(alpha + 1.0)
            assert bessel.phi_sigma(n, 1.0) == pytest.approx(expected, rel=1e-12)
            near = bessel.phi_sigma(n, 1.0 - 1e-9)
            assert near == pytest.approx(expected, rel=1e-6)

    def test_derivative_finite_differences(self):
        h = 1e-5
        for n in (2, 3, 4):
            for t in np.linspace(0.05, 0.9, 9):
                fd = (bessel.phi_sigma(n, t + h) - bessel.phi_sigma(n, t - h)) / (2 * h)
                assert fd == pytest.approx(bessel.phi_sigma_prime(n, t), abs=1e-6)

    def test_domain(self):
        with pytest.raises(DomainError):
            bessel.phi_sigma(2, 1.5)
