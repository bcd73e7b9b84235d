"""Closed-form eigenvalue facts for the straight cone profile, plus the
certificate that decides the sign of the limiting second-variation
integral by elementary means.

For p = 2 the cone profile's first eigenvalue is j_{a,1}^2 / 2 with
a = n - 3/2, and for every p it is 2^{-p/2} times the first eigenvalue
of the unit ball in R^{2n-1}.  The certificate brackets the integral

    I(n) = int_0^j t (J_{a+1}^2 + J_a^2) * (j^2 - t^2)^2 / (2 t^4) dt

from below by Riemann-Stieltjes sums against the Lommel antiderivative
(the weight (j^2-t^2)^2/(2t^4) is decreasing) and compares the plain
integral f(j) = int_0^j t (J_{a+1}^2 + J_a^2) dt with the threshold 4:
``first integral < 4`` and ``lower sum > 4`` together give the verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bessel, perturbation
from .eigensolver import WeightedRayleighProblem, refine_and_extrapolate
from .errors import InconclusiveCertificateError, PreconditionError
from .geometry import BoundaryOrbit, cone_curve
from .quadrature import adaptive_quad

CERT_THRESHOLD = 4.0
_CERT_START_CELLS = 8
_CERT_MAX_CELLS = 2**14


def cone_lambda_p2(n: int, R: float = 1.0) -> float:
    """Closed-form p = 2 eigenvalue j_{n-3/2,1}^2 / 2, scaled by R^{-2}."""
    if n < 2:
        raise PreconditionError(f"cone_lambda_p2 requires n >= 2, got {n}")
    if R <= 0.0:
        raise PreconditionError("cone_lambda_p2 requires R > 0")
    j = bessel.cached_first_root(n - 1.5)
    return 0.5 * j * j / (R * R)


def radial_ball_problem_factory(d: int, p: float):
    """Radial quotient of the unit ball in R^d: weight (1-t)^{d-1} on both sides."""
    if d < 1:
        raise PreconditionError("ball dimension must be >= 1")

    def make(n_elements: int) -> WeightedRayleighProblem:
        t = np.linspace(0.0, 1.0, n_elements + 1)
        tm = 0.5 * (t[:-1] + t[1:])
        w = (1.0 - tm) ** (d - 1)
        return WeightedRayleighProblem(p=float(p), a=w, b=w.copy(), dt=np.diff(t), n=None)

    return make


@dataclass
class RelationReport:
    """Measured ratio of the cone eigenvalue to the matching ball eigenvalue."""

    n: int
    p: float
    lambda_cone: float
    error_bar_cone: float
    lambda_ball: float
    error_bar_ball: float

    @property
    def ratio(self) -> float:
        return self.lambda_cone / self.lambda_ball

    @property
    def expected(self) -> float:
        return 2.0 ** (-0.5 * self.p)

    @property
    def relative_deviation(self) -> float:
        return abs(self.ratio - self.expected) / self.expected

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "lambda_cone": self.lambda_cone,
            "error_bar_cone": self.error_bar_cone,
            "lambda_ball": self.lambda_ball,
            "error_bar_ball": self.error_bar_ball,
            "ratio": self.ratio,
            "expected_ratio": self.expected,
            "relative_deviation": self.relative_deviation,
        }


def cone_ball_relation_check(
    n: int,
    p: float,
    levels: int = 3,
    base_nodes: int = 256,
    rng_seed: int = 0,
) -> RelationReport:
    """Solve the cone curve and the (2n-1)-ball problem; report the ratio.

    The two sides are solved independently (curve assembly vs analytic
    radial weights) and their ratio is compared against 2^{-p/2}.
    """
    if p < 2.0:
        raise PreconditionError("cone_ball_relation_check requires p >= 2")
    orbit = BoundaryOrbit(n, 1.0, 1.0)
    cone = refine_and_extrapolate(
        lambda N: cone_curve(orbit, N), p, levels=levels, base_nodes=base_nodes,
        rng_seed=rng_seed,
    )
    ball = refine_and_extrapolate(
        radial_ball_problem_factory(2 * n - 1, p), p, levels=levels,
        base_nodes=base_nodes, rng_seed=rng_seed + 1,
    )
    return RelationReport(
        n=n,
        p=p,
        lambda_cone=cone.lam,
        error_bar_cone=cone.error_bar,
        lambda_ball=ball.lam,
        error_bar_ball=ball.error_bar,
    )


def certificate_weight(alpha: float, t):
    """The decreasing factor (j^2 - t^2)^2 / (2 t^4) of the integrand."""
    j = bessel.cached_first_root(alpha)
    tt = np.asarray(t, dtype=float)
    val = (j * j - tt * tt) ** 2 / (2.0 * tt**4)
    return float(val) if np.ndim(t) == 0 else val


def weighted_tail_integral(n: int, lower: float, rtol: float = 1e-10) -> float:
    """Quadrature of the certified integrand over [lower, j] (finite there)."""
    alpha = n - 1.5
    j = bessel.cached_first_root(alpha)

    def f(t):
        return t * (bessel.bessel_j(alpha + 1.0, t) ** 2 + bessel.bessel_j(alpha, t) ** 2) \
            * certificate_weight(alpha, t)

    value, _ = adaptive_quad(f, lower, j, rtol=rtol)
    return value


@dataclass
class IdentityReport:
    """Two-sided evaluation of the second-variation integral.

    ``t_side`` integrates the eigenfunction against the limiting weight
    derivatives in the curve parameter; ``bessel_side`` integrates the
    equivalent expression in the Bessel variable.  When the integral
    diverges (n = 2) both sides are +inf and the identity is checked on
    matched truncated domains instead.
    """

    n: int
    t_side: float
    bessel_side: float
    relative_difference: float
    divergent: bool
    truncations: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        def _num(v):
            return None if math.isinf(v) else v

        return {
            "n": self.n,
            "t_side": _num(self.t_side),
            "bessel_side": _num(self.bessel_side),
            "relative_difference": self.relative_difference,
            "divergent": self.divergent,
            "truncations": list(self.truncations),
        }


def _bessel_side_integral(n: int, lower: float, rtol: float = 1e-10) -> float:
    alpha = n - 1.5
    j = bessel.cached_first_root(alpha)

    def f(t):
        g = certificate_weight(alpha, t)
        return t * (bessel.bessel_j(alpha + 1.0, t) ** 2 + bessel.bessel_j(alpha, t) ** 2) \
            * (g - 1.0)

    value, _ = adaptive_quad(f, lower, j, rtol=rtol)
    return value


def exp_integral_identity_check(
    n: int,
    rtol: float = 1e-9,
    truncation_cuts=(0.3, 0.1, 0.03),
) -> IdentityReport:
    """Evaluate the second-variation integral along two independent routes.

    The change of variables t -> j*sqrt(1-t) maps one side onto the
    other exactly, so the two adaptive quadratures must agree; their
    relative difference is the reported consistency measure.  For n = 2
    both full-domain integrals are +inf (the integrand has a positive
    nonintegrable tail) and the comparison runs on matched truncations.
    """
    if not 2 <= n <= 7:
        raise PreconditionError("exp_integral_identity_check supports 2 <= n <= 7")
    alpha = n - 1.5
    j = bessel.cached_first_root(alpha)
    divergent = alpha <= 1.0
    truncations = []
    if divergent:
        rels = []
        for cut in truncation_cuts:
            t_val = perturbation.conemin0_truncated(n, cut, rtol=rtol)
            b_val = _bessel_side_integral(n, j * cut, rtol=rtol)
            rel = abs(t_val - b_val) / max(abs(t_val), abs(b_val))
            truncations.append(
                {"tau_cut": cut, "t_side": t_val, "bessel_side": b_val,
                 "relative_difference": rel}
            )
            rels.append(rel)
        return IdentityReport(
            n=n,
            t_side=math.inf,
            bessel_side=math.inf,
            relative_difference=max(rels),
            divergent=True,
            truncations=truncations,
        )
    t_val = perturbation.conemin0_integral(n, rtol=rtol)
    b_val = _bessel_side_integral(n, 0.0, rtol=rtol)
    rel = abs(t_val - b_val) / max(abs(t_val), abs(b_val))
    return IdentityReport(
        n=n, t_side=t_val, bessel_side=b_val, relative_difference=rel, divergent=False,
    )


@dataclass
class PartitionCertificate:
    """Bracketing data deciding ``first integral < 4 < weighted integral``.

    ``lower_sum`` is a lower Riemann-Stieltjes sum of the weighted
    integral (the weight decreases, the antiderivative increases), so
    ``verdict`` is sound whenever it is true.  ``status`` distinguishes
    a certified verdict from refutation (first integral at or above the
    threshold is decisive, the antiderivative being exact) and from an
    inconclusive run that hit the refinement cap.
    """

    n: int
    alpha: float
    j: float
    partition: np.ndarray
    first_integral: float
    lower_sum: float
    verdict: bool
    status: str
    cross_checks: dict = field(default_factory=dict)
    level_sums: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "j": self.j,
            "partition": [float(v) for v in self.partition],
            "first_integral": self.first_integral,
            "lower_sum": self.lower_sum,
            "verdict": self.verdict,
            "status": self.status,
            "cross_checks": self.cross_checks,
        }


def lower_stieltjes_sum(alpha: float, partition) -> float:
    """Sum of (f(p_i) - f(p_{i-1})) * g(p_i) over the partition cells.

    f is the Lommel antiderivative and g the decreasing weight, so this
    never exceeds the integral of g df.
    """
    pts = np.asarray(partition, dtype=float)
    if pts.ndim != 1 or pts.size < 2 or np.any(np.diff(pts) <= 0.0):
        raise PreconditionError("partition must be strictly increasing")
    f_vals = bessel.lommel_f(alpha, pts)
    g_vals = certificate_weight(alpha, pts[1:])
    return float(np.sum(np.diff(f_vals) * g_vals))


def _initial_partition(j: float) -> np.ndarray:
    inner = np.geomspace(j * 2.0 ** (-4), j, _CERT_START_CELLS)
    return np.concatenate([[0.0], inner])


def _refine_partition(partition: np.ndarray) -> np.ndarray:
    """Nested refinement: halve the smallest positive point and insert
    geometric midpoints, so lower sums increase monotonically."""
    pts = partition
    mids = np.sqrt(pts[1:-1] * pts[2:])
    out = np.sort(np.concatenate([pts, mids, [0.5 * pts[1]]]))
    return out


def certify(n: int, mode: str = "assert") -> PartitionCertificate:
    """Decide ``first integral < 4`` and ``lower sum > 4`` for dimension n.

    The first integral is the Lommel antiderivative at the root (exact;
    adaptive quadrature of the integrand is recorded as a cross-check).
    The lower sum refines geometrically toward zero, where the weight
    blows up, until it crosses the threshold or the partition cap is
    reached.  In ``assert`` mode (allowed for 2 <= n <= 5) an
    inconclusive run raises; ``report`` mode returns it with the status
    marked.
    """
    if mode not in ("assert", "report"):
        raise PreconditionError("certify mode must be 'assert' or 'report'")
    if n < 2:
        raise PreconditionError("certify requires n >= 2")
    if mode == "assert" and n > 5:
        raise PreconditionError("assert mode is reserved for 2 <= n <= 5; use report mode")
    alpha = n - 1.5
    j = bessel.cached_first_root(alpha)
    first = bessel.lommel_f(alpha, j)

    def integrand(t):
        return t * (bessel.bessel_j(alpha + 1.0, t) ** 2 + bessel.bessel_j(alpha, t) ** 2)

    quad_first, _ = adaptive_quad(integrand, 0.0, j, rtol=1e-11)
    partition = _initial_partition(j)
    level_sums = [lower_stieltjes_sum(alpha, partition)]
    while level_sums[-1] <= CERT_THRESHOLD and partition.size - 1 < _CERT_MAX_CELLS:
        partition = _refine_partition(partition)
        level_sums.append(lower_stieltjes_sum(alpha, partition))
    lower = level_sums[-1]
    verdict = bool(first < CERT_THRESHOLD and lower > CERT_THRESHOLD)
    if verdict:
        status = "certified"
    elif first >= CERT_THRESHOLD:
        status = "refuted"  # exact first integral at/above threshold is decisive
    else:
        status = "inconclusive"
    cert = PartitionCertificate(
        n=n,
        alpha=alpha,
        j=j,
        partition=partition,
        first_integral=first,
        lower_sum=lower,
        verdict=verdict,
        status=status,
        cross_checks={
            "first_integral_quadrature": quad_first,
            "first_integral_gap": abs(quad_first - first),
            "root_residual": abs(bessel.bessel_j(alpha, j)),
            "cells": int(partition.size - 1),
            "refinement_levels": len(level_sums),
        },
        level_sums=level_sums,
    )
    if mode == "assert" and status == "inconclusive":
        raise InconclusiveCertificateError(
            f"certificate for n={n} inconclusive after {partition.size - 1} cells "
            f"(lower sum {lower:.6f} <= {CERT_THRESHOLD})"
        )
    return cert
