"""Self-contained Bessel-function kernel.

Evaluation of J_nu for real order nu >= -1/2 and x >= 0, first positive
roots, the Lommel antiderivative of t*(J_{a+1}^2 + J_a^2), and the
explicit radial eigenfunction of the degenerate-weight problem together
with its derivative.  Everything here is built from the ascending series
and three-term recurrences only, so it can serve as an independent
oracle for the eigenvalue solvers; no special-function library is used.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, PreconditionError

# Series below the switch point, Miller-style backward recurrence above.
# The series alone covers every order/argument this package needs; the
# recurrence keeps the kernel usable for larger arguments (root tables).
_SERIES_MAX_TERMS = 300
_ROOT_SCAN_STEP = math.pi / 8
_ROOT_SCAN_MAX_STEPS = 2000
_ROOT_BISECTION_WIDTH = 1e-13


def _x_switch(nu: float) -> float:
    return max(12.0, 2.0 * abs(nu))


def _series_scalar(nu: float, x: float) -> float:
    """Ascending power series with compensated summation."""
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    comp = 0.0
    for k in range(1, _SERIES_MAX_TERMS):
        term *= -q / (k * (nu + k))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) < 1e-18 * abs(total) and k > q:
            break
    return (0.5 * x) ** nu / math.gamma(nu + 1.0) * total


def _miller_scalar(nu: float, x: float) -> float:
    """Backward recurrence normalized by the generalized Neumann sum.

    The downward pass is stable for all orders; the normalization uses
    (x/2)^nu = sum_m (nu+2m) Gamma(nu+m)/m! * J_{nu+2m}(x).
    """
    m_top = int(x + 10.0 * math.sqrt(x) + 40.0 + abs(nu))
    if m_top % 2 == 1:
        m_top += 1
    fp = 0.0
    fc = 1e-30
    vals = np.empty(m_top + 1)
    vals[m_top] = fc
    for k in range(m_top, 0, -1):
        fm = (2.0 * (nu + k) / x) * fc - fp
        fp, fc = fc, fm
        vals[k - 1] = fc
        if abs(fc) > 1e250:
            fp /= 1e250
            fc /= 1e250
            vals[k - 1 :] /= 1e250
    # normalization sum: (x/2)^nu = Gamma(nu+1) J_nu + sum_m (nu+2m) g_m J_{nu+2m}
    # with g_m = Gamma(nu+m)/m!, g_1 = Gamma(nu+1)
    norm = math.gamma(nu + 1.0) * vals[0]
    g = math.gamma(nu + 1.0)
    for m in range(1, m_top // 2 + 1):
        norm += (nu + 2.0 * m) * g * vals[2 * m]
        g *= (nu + m) / (m + 1.0)
    return vals[0] * (0.5 * x) ** nu / norm


def _bessel_scalar(nu: float, x: float) -> float:
    if x < 0.0:
        raise DomainError(f"bessel_j requires x >= 0, got {x}")
    if x == 0.0:
        if nu > 0.0:
            return 0.0
        if nu == 0.0:
            return 1.0
        return math.inf
    if x <= _x_switch(nu):
        return _series_scalar(nu, x)
    return _miller_scalar(nu, x)


def _series_array(nu: float, x: np.ndarray) -> np.ndarray:
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    kmax = int(np.max(q)) + 40 if x.size else 1
    kmax = min(max(kmax, 20), _SERIES_MAX_TERMS)
    for k in range(1, kmax):
        term = term * (-q / (k * (nu + k)))
        total = total + term
    with np.errstate(divide="ignore"):
        pref = np.where(x > 0.0, (0.5 * x) ** nu, 0.0)
    out = pref / math.gamma(nu + 1.0) * total
    if np.any(x == 0.0):
        out = np.where(x == 0.0, _bessel_scalar(nu, 0.0), out)
    return out


def bessel_j(nu: float, x):
    """Bessel function of the first kind J_nu(x) for nu >= -1/2, x >= 0.

    Accepts a scalar or an ndarray argument.  Relative accuracy is at
    the 1e-12 level against the half-integer closed forms on the range
    used by the rest of the package.
    """
    if nu < -0.5:
        raise DomainError(f"bessel_j supports nu >= -1/2, got nu={nu}")
    if np.ndim(x) == 0:
        return _bessel_scalar(nu, float(x))
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("bessel_j requires x >= 0")
    out = np.empty_like(x)
    small = x <= _x_switch(nu)
    if np.any(small):
        out[small] = _series_array(nu, x[small])
    if np.any(~small):
        out[~small] = [_miller_scalar(nu, float(v)) for v in x[~small]]
    return out


def first_root(nu: float) -> float:
    """First positive root j_{nu,1} of J_nu.

    Brackets by scanning for a sign change in steps of pi/8 starting at
    nu + 1 (J_nu is positive on (0, j_{nu,1})), then bisects the bracket
    down to a width of 1e-13.  Bisection is deliberate: unconditional
    convergence matters more than iteration count here.
    """
    if nu < -0.5:
        raise DomainError(f"first_root supports nu >= -1/2, got nu={nu}")
    a = nu + 1.0
    fa = _bessel_scalar(nu, a)
    if fa <= 0.0:
        raise ConvergenceError(f"scan start {a} is not left of the first root of J_{nu}")
    b = a
    for _ in range(_ROOT_SCAN_MAX_STEPS):
        b = a + _ROOT_SCAN_STEP
        fb = _bessel_scalar(nu, b)
        if fb <= 0.0:
            break
        a, fa = b, fb
    else:
        raise ConvergenceError(f"no sign change of J_{nu} found within the scan bound")
    while b - a > _ROOT_BISECTION_WIDTH:
        mid = 0.5 * (a + b)
        if _bessel_scalar(nu, mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


@lru_cache(maxsize=None)
def cached_first_root(nu: float) -> float:
    return first_root(nu)


def lommel_f(alpha: float, t):
    """Antiderivative of t*(J_{alpha+1}(t)^2 + J_alpha(t)^2) vanishing at 0.

    f(t) = (t^2/2) * (J_{a+1}^2 - J_{a+2} J_a + J_a^2 - J_{a+1} J_{a-1}),
    which satisfies f'(t) = t (J_{a+1}^2 + J_a^2) by Lommel's integral.
    """
    if alpha < 0.5:
        raise DomainError(f"lommel_f requires alpha >= 1/2, got {alpha}")
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt < 0.0):
        raise DomainError("lommel_f requires t >= 0")
    val = np.zeros_like(tt)  # f(0) = 0: the t^2 prefactor wins against J_{alpha-1}
    pos = tt > 0.0
    if np.any(pos):
        tp = tt[pos]
        ja = bessel_j(alpha, tp)
        jap1 = bessel_j(alpha + 1.0, tp)
        jap2 = bessel_j(alpha + 2.0, tp)
        jam1 = bessel_j(alpha - 1.0, tp)
        val[pos] = 0.5 * tp * tp * (jap1 * jap1 - jap2 * ja + ja * ja - jap1 * jam1)
    return float(val[0]) if scalar else val


def first_integral(alpha: float) -> float:
    """Exact value of the integral of t*(J_{a+1}^2 + J_a^2) over [0, j_{a,1}].

    Evaluating the Lommel antiderivative at the root collapses to
    j^2 * J_{alpha+1}(j)^2 because J_alpha(j) = 0 and the three-term
    recurrence gives J_{alpha-1}(j) = -J_{alpha+1}(j).
    """
    j = cached_first_root(alpha)
    return lommel_f(alpha, j)


def phi_sigma(n: int, t):
    """Radial first eigenfunction on the straight profile through the corner.

    phi(t) = (1-t)^{(3-2n)/4} * J_a(j_a * sqrt(1-t)) with a = n - 3/2.
    It vanishes at t = 0 (Dirichlet end) and tends to the finite limit
    (j_a/2)^a / Gamma(a+1) as t -> 1, since J_a(z)/z^a is entire.
    """
    alpha = n - 1.5
    j = cached_first_root(alpha)
    scalar = np.ndim(t) == 0
    tt = np.asarray(t, dtype=float)
    if np.any(tt > 1.0) or np.any(tt < 0.0):
        raise DomainError("phi_sigma requires 0 <= t <= 1")
    limit = (0.5 * j) ** alpha / math.gamma(alpha + 1.0)
    one_m = 1.0 - tt
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(
            one_m > 0.0,
            one_m ** (-0.5 * alpha) * bessel_j(alpha, j * np.sqrt(np.maximum(one_m, 0.0))),
            limit,
        )
    return float(val) if scalar else val


def phi_sigma_prime(n: int, t):
    """Derivative of phi_sigma, via  (a/x) J_a(x) - J_a'(x) = J_{a+1}(x):

    phi'(t) = (j_a/2) (1-t)^{-(a+1)/2} J_{a+1}(j_a * sqrt(1-t)).
    """
    alpha = n - 1.5
    j = cached_first_root(alpha)
    scalar = np.ndim(t) == 0
    tt = np.asarray(t, dtype=float)
    if np.any(tt > 1.0) or np.any(tt < 0.0):
        raise DomainError("phi_sigma_prime requires 0 <= t <= 1")
    limit = 0.5 * j * (0.5 * j) ** (alpha + 1.0) / math.gamma(alpha + 2.0)
    one_m = 1.0 - tt
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(
            one_m > 0.0,
            0.5 * j * one_m ** (-0.5 * (alpha + 1.0))
            * bessel_j(alpha + 1.0, j * np.sqrt(np.maximum(one_m, 0.0))),
            limit,
        )
    return float(val) if scalar else val


def root_table(orders) -> list[tuple[float, float]]:
    """(nu, j_{nu,1}) pairs for the requested orders."""
    table = []
    for nu in orders:
        if nu < -0.5:
            raise PreconditionError(f"orders must be >= -1/2, got {nu}")
        table.append((float(nu), first_root(float(nu))))
    return table
