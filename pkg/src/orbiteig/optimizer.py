"""Search for eigenvalue-maximizing profile curves in the canonical class.

Candidates are monotone knot vectors in (u, r) polar form on the (u, v)
half-plane: u non-decreasing from the orbit's value, radius non-
increasing, with the last knot pinned to the boundary (v = 0).  A
candidate decodes to a near-constant-speed profile curve; Nelder-Mead
with clamp-to-monotone projection runs from a spread of baseline starts
(cone, cylinder, rounded-off tilted segments) plus seeded perturbations,
and the best restart is polished with an extrapolated solve.  The best
value found is by construction a certified lower bound for the supremum
over the class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import perturbation
from .eigensolver import assemble, refine_and_extrapolate, solve_general_p, solve_p2
from .errors import PreconditionError
from .geometry import (
    BoundaryOrbit,
    ProfileCurve,
    cone_curve,
    cylinder_curve,
    length_g,
    resample_uniform_arclength,
    to_uv,
    uv_from_xy,
    xy_from_uv,
)


@dataclass
class OptimizerConfig:
    knots: int = 12
    nodes: int = 512
    restarts: int = 8
    nm_max_iter: int = 3000
    seed: int = 0
    levels: int = 3
    perturb_scale: float = 0.15
    widen_search: bool = False  # skip the monotone clamps (experiments only)


@dataclass
class CandidateParametrization:
    """Monotone (u, r) knots decoding to a profile curve."""

    orbit: BoundaryOrbit
    u: np.ndarray
    r: np.ndarray

    @property
    def k(self) -> int:
        return self.u.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.u[1:], self.r[1:-1]])

    @classmethod
    def from_vector(cls, orbit: BoundaryOrbit, k: int, vec, widen: bool = False):
        vec = np.asarray(vec, dtype=float)
        if vec.size != 2 * k - 3:
            raise PreconditionError(f"expected {2 * k - 3} parameters for k={k} knots")
        start = to_uv(orbit.point)
        u = np.concatenate([[start.u], vec[: k - 1]])
        r = np.concatenate([[start.r], vec[k - 1 :], [u[-1]]])
        cand = cls(orbit=orbit, u=u, r=r)
        return cand if widen else cand.project()

    def project(self) -> "CandidateParametrization":
        """Clamp to the feasible monotone cone (u up, r down, r >= |u|)."""
        u = np.maximum.accumulate(np.maximum(self.u, self.u[0]))
        r = np.minimum.accumulate(np.minimum(self.r, self.r[0]))
        tiny = 1e-9 * max(1.0, self.r[0])
        r = np.maximum(r, np.abs(u) + tiny)
        r = np.minimum.accumulate(r)
        u = np.minimum(u, r - tiny)
        u = np.maximum.accumulate(u)
        # terminal knot sits on the boundary: v = 0 means r = u there
        u[-1] = max(u[-1], tiny)
        r[-1] = u[-1]
        return CandidateParametrization(orbit=self.orbit, u=u, r=r)

    def decode(self, n_nodes: int) -> ProfileCurve:
        """Knot polyline in (u, v), densified, mapped back, resampled."""
        v_sq = np.maximum(self.r**2 - self.u**2, 0.0)
        v = np.sqrt(v_sq)
        v[-1] = 0.0
        dense = 8 * n_nodes
        frac = np.linspace(0.0, 1.0, dense + 1)
        knot_frac = np.linspace(0.0, 1.0, self.k)
        u_dense = np.interp(frac, knot_frac, self.u)
        v_dense = np.interp(frac, knot_frac, v)
        x, y = xy_from_uv(u_dense, v_dense)
        pts = resample_uniform_arclength(np.column_stack([x, y]), n_nodes)
        pts[0] = self.orbit.point
        if pts[-1, 0] * pts[-1, 1] != 0.0:
            pts[-1, int(np.argmin(pts[-1]))] = 0.0
        return ProfileCurve(self.orbit, np.linspace(0.0, 1.0, n_nodes + 1), pts)


def encode_curve(curve: ProfileCurve, k: int) -> CandidateParametrization:
    """Fit a candidate to a curve by sampling (u, r) at k parameters."""
    u, v = curve.uv()
    r = np.hypot(u, v)
    idx = np.linspace(0, curve.n_elements, k).round().astype(int)
    cand = CandidateParametrization(
        orbit=curve.orbit, u=u[idx].copy(), r=r[idx].copy()
    )
    return cand.project()


def _lambda_of(curve: ProfileCurve, p: float, rng_seed: int) -> float:
    problem = assemble(curve, p)
    if p == 2.0:
        return solve_p2(problem).lam
    return solve_general_p(problem, restarts=1, rng_seed=rng_seed, rel_tol=1e-10).lam


@dataclass
class OptimizeResult:
    curve: ProfileCurve
    solution: object
    trace: list
    restarts: list
    warnings: list = field(default_factory=list)

    @property
    def lam(self) -> float:
        return self.solution.lam


def _baseline_candidates(orbit: BoundaryOrbit, config: OptimizerConfig):
    """Starting candidates: cone (if admissible), cylinder, rounded tilts."""
    k = config.knots
    starts = []
    if orbit.x0 == orbit.y0:
        starts.append(("cone", encode_curve(cone_curve(orbit, 4 * k), k)))
    starts.append(("cylinder", encode_curve(cylinder_curve(orbit, 4 * k), k)))
    if orbit.x0 == orbit.y0 == 1.0:
        for s, delta in ((0.2, 0.02), (0.4, 0.04)):
            curve = perturbation.roundoff_curve(orbit.n, s, delta, 4 * k)
            starts.append((f"roundoff(s={s})", encode_curve(curve, k)))
    return starts


def maximize(
    orbit: BoundaryOrbit,
    p: float,
    config: OptimizerConfig | None = None,
    initial_candidates=None,
) -> OptimizeResult:
    """Nelder-Mead eigenvalue maximization over the candidate class.

    Multistart from the baselines plus seeded perturbations of them;
    feasibility is maintained by projection inside the objective, never
    by penalties.  Ties between restarts go to the shorter curve.  The
    returned solution is extrapolated for an error bar; the trace lists
    every accepted improvement of the incumbent.  ``initial_candidates``
    (pairs of name and CandidateParametrization) replace the default
    baseline starts when given.
    """
    config = config or OptimizerConfig()
    warnings = []
    if p < 2.0:
        raise PreconditionError("maximize requires p >= 2")
    if p < 2 * orbit.n - 1:
        warnings.append(
            f"p={p} is below the critical exponent {2 * orbit.n - 1}: the monotone "
            "search class is a heuristic there, not a guaranteed reduction"
        )
    rng = np.random.default_rng(config.seed)
    starts = list(initial_candidates) if initial_candidates else _baseline_candidates(orbit, config)
    while len(starts) < config.restarts:
        base_name, base = starts[rng.integers(0, len(starts))]
        jitter = 1.0 + config.perturb_scale * rng.uniform(-1.0, 1.0, size=2 * base.k - 3)
        vec = base.to_vector() * jitter
        starts.append((f"perturbed[{base_name}]", CandidateParametrization.from_vector(
            orbit, base.k, vec, widen=config.widen_search)))
    starts = starts[: max(config.restarts, 1)]

    trace = []
    restart_rows = []
    evaluations = 0

    def run_restart(index, name, cand):
        nonlocal evaluations
        best_here = {"lam": -math.inf, "vec": cand.to_vector()}

        def objective(vec):
            nonlocal evaluations
            evaluations += 1
            candidate = CandidateParametrization.from_vector(
                orbit, config.knots, vec, widen=config.widen_search
            )
            try:
                curve = candidate.decode(config.nodes)
                lam = _lambda_of(curve, p, rng_seed=config.seed)
            except Exception:
                return 1e6
            if lam > best_here["lam"]:
                best_here["lam"] = lam
                best_here["vec"] = candidate.to_vector()
                trace.append(
                    {"restart": index, "start": name, "evaluation": evaluations,
                     "lambda": lam}
                )
            return -lam

        res = minimize(
            objective,
            cand.to_vector(),
            method="Nelder-Mead",
            options={"maxiter": config.nm_max_iter, "xatol": 1e-6, "fatol": 1e-10,
                     "adaptive": True},
        )
        final = CandidateParametrization.from_vector(
            orbit, config.knots, best_here["vec"], widen=config.widen_search
        )
        curve = final.decode(config.nodes)
        row = {
            "restart": index,
            "start": name,
            "lambda": best_here["lam"],
            "length_g": length_g(curve),
            "nm_iterations": int(res.nit),
        }
        return row, final

    finals = []
    for index, (name, cand) in enumerate(starts):
        row, final = run_restart(index, name, cand)
        restart_rows.append(row)
        finals.append(final)
    order = sorted(
        range(len(restart_rows)),
        key=lambda i: (-restart_rows[i]["lambda"], restart_rows[i]["length_g"]),
    )
    best_index = order[0]
    best = finals[best_index]
    solution = refine_and_extrapolate(
        lambda N: best.decode(N), p, levels=config.levels, base_nodes=config.nodes,
        rng_seed=config.seed,
    )
    curve = best.decode(config.nodes)
    return OptimizeResult(
        curve=curve,
        solution=solution,
        trace=trace,
        restarts=restart_rows,
        warnings=warnings,
    )


def compare_baselines(
    orbit: BoundaryOrbit,
    p: float,
    config: OptimizerConfig | None = None,
    include_optimizer: bool = True,
    levels: int = 3,
) -> list[dict]:
    """Eigenvalue table: cone, cylinder, tilted family, round-offs, optimizer.

    Rows that need a symmetric (or unit) orbit are skipped when the
    orbit does not qualify.
    """
    config = config or OptimizerConfig()
    rows = []

    def add_row(name, source, base_nodes=256):
        sol = refine_and_extrapolate(source, p, levels=levels, base_nodes=base_nodes,
                                     rng_seed=config.seed)
        rows.append({"name": name, "lambda": sol.lam, "error_bar": sol.error_bar})

    if orbit.x0 == orbit.y0:
        add_row("cone", lambda N: cone_curve(orbit, N))
    add_row("cylinder", lambda N: cylinder_curve(orbit, N))
    if orbit.x0 == orbit.y0 == 1.0:
        from .geometry import sigma_s_curve

        for s in (0.1, 0.2, 0.4):
            add_row(f"sigma_s(s={s})", lambda N, s=s: sigma_s_curve(orbit.n, s, N))
        for s, delta in ((0.2, 0.02), (0.4, 0.04)):
            add_row(
                f"roundoff(s={s},delta={delta})",
                lambda N, s=s, d=delta: perturbation.roundoff_curve(orbit.n, s, d, N),
            )
    if include_optimizer:
        result = maximize(orbit, p, config)
        rows.append(
            {"name": "optimizer", "lambda": result.lam,
             "error_bar": result.solution.error_bar}
        )
    return rows
