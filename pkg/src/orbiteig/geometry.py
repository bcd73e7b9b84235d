"""Orbit-space geometry: coordinates, weights, metrics, canonical curves.

The orbit space of the doubly rotation-invariant action on R^{2n} is the
closed quarter plane {x >= 0, y >= 0}.  A point (x, y) stands for the
product of two spheres of radii x and y; its (2n-2)-volume is the weight
F(x, y) = c_n x^{n-1} y^{n-1}.  Curves from a fixed interior point to the
boundary encode invariant hypersurfaces; their lengths in the flat metric
g = dx^2 + dy^2 and in the conformal metric h = F^2 g are the quantities
every solver in this package consumes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError, ValidationError

UV_ROUNDTRIP_RTOL = 1e-12
_SNAP_RTOL = 1e-12


def sphere_area(n: int) -> float:
    """Surface measure of the unit (n-1)-sphere in R^n."""
    return 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)


def volume_constant(n: int) -> float:
    """c_n = (area of S^{n-1})^2.

    With this normalization the h-length of a profile curve equals the
    (2n-1)-volume of the hypersurface it encodes.  Every eigenvalue in
    the package is invariant under rescaling c_n (the constant cancels
    in each Rayleigh quotient); pass unit_constant=True to the weight
    and length functions for cross-checks against c_n-free formulas.
    """
    a = sphere_area(n)
    return a * a


def weight_F(point, n: int, unit_constant: bool = False):
    """Orbital volume weight F(x, y) = c_n x^{n-1} y^{n-1}.

    Vanishes exactly on the boundary of the quarter plane.  Accepts a
    pair of scalars or a pair of arrays.
    """
    x, y = point
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if np.any(xs < 0.0) or np.any(ys < 0.0):
        raise DomainError("weight_F requires x >= 0 and y >= 0")
    if n < 2:
        raise DomainError(f"weight_F requires n >= 2, got {n}")
    c = 1.0 if unit_constant else volume_constant(n)
    val = c * (xs * ys) ** (n - 1)
    return float(val) if np.ndim(x) == 0 and np.ndim(y) == 0 else val


@dataclass(frozen=True)
class UVPoint:
    """Point in the parabolic coordinates u = (x^2 - y^2)/2, v = xy."""

    u: float
    v: float
    r: float

    def __post_init__(self):
        if self.v < 0.0:
            raise ValidationError(f"UVPoint requires v >= 0, got v={self.v}")
        rr = math.hypot(self.u, self.v)
        if abs(self.r - rr) > UV_ROUNDTRIP_RTOL * max(1.0, rr):
            raise ValidationError("UVPoint radius is inconsistent with (u, v)")


def to_uv(point) -> UVPoint:
    x, y = float(point[0]), float(point[1])
    if x < 0.0 or y < 0.0:
        raise DomainError("to_uv requires x >= 0 and y >= 0")
    u = 0.5 * (x - y) * (x + y)
    v = x * y
    return UVPoint(u=u, v=v, r=math.hypot(u, v))


def from_uv(point) -> tuple[float, float]:
    """Inverse of to_uv.  Accepts a UVPoint or a (u, v) pair.

    Uses the cancellation-free branch x = sqrt(r+u), y = v/x for u >= 0
    (and symmetrically for u < 0) so boundary points map exactly.
    """
    if isinstance(point, UVPoint):
        u, v = point.u, point.v
    else:
        u, v = float(point[0]), float(point[1])
    if v < 0.0:
        raise DomainError("from_uv requires v >= 0")
    r = math.hypot(u, v)
    if r == 0.0:
        return (0.0, 0.0)
    if u >= 0.0:
        x = math.sqrt(r + u)
        return (x, v / x)
    y = math.sqrt(r - u)
    return (v / y, y)


def uv_from_xy(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return 0.5 * (xs - ys) * (xs + ys), xs * ys


def xy_from_uv(us, vs):
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if np.any(vs < 0.0):
        raise DomainError("xy_from_uv requires v >= 0")
    rs = np.hypot(us, vs)
    pos = us >= 0.0
    x = np.empty_like(rs)
    y = np.empty_like(rs)
    sq_pos = np.sqrt(rs + us, where=pos, out=np.zeros_like(rs))
    sq_neg = np.sqrt(rs - us, where=~pos, out=np.zeros_like(rs))
    with np.errstate(invalid="ignore", divide="ignore"):
        x[pos] = sq_pos[pos]
        y[pos] = np.where(sq_pos[pos] > 0.0, vs[pos] / sq_pos[pos], 0.0)
        y[~pos] = sq_neg[~pos]
        x[~pos] = np.where(sq_neg[~pos] > 0.0, vs[~pos] / sq_neg[~pos], 0.0)
    return x, y


@dataclass(frozen=True)
class BoundaryOrbit:
    """Problem instance: dimension parameter n and the fixed boundary orbit.

    Canonical form keeps x0 >= y0; instances given the other way round
    are reflected on construction (the reflection is an isometry that
    preserves the weight, so nothing observable changes).
    """

    n: int
    x0: float
    y0: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"BoundaryOrbit requires integer n >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not (self.x0 > 0.0 and self.y0 > 0.0):
            raise ValidationError("BoundaryOrbit requires x0 > 0 and y0 > 0")
        if self.x0 < self.y0:
            x0, y0 = self.y0, self.x0
            object.__setattr__(self, "x0", x0)
            object.__setattr__(self, "y0", y0)

    @property
    def point(self) -> tuple[float, float]:
        return (self.x0, self.y0)

    @property
    def rho0(self) -> float:
        """Radius of the invariant disk used by the inversion surgery."""
        return math.hypot(self.x0, self.y0)


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Sampled curve t -> (x(t), y(t)) in the closed quarter plane.

    Nodes are strictly increasing parameters 0 = t_0 < ... < t_N = 1.
    The curve starts at the boundary orbit, stays in the open quadrant
    at interior nodes, and its terminal node lies on the boundary
    (x_N * y_N = 0).  Between nodes the curve is piecewise linear in
    (x, y); per-element quantities use chord speeds and midpoint weights.
    """

    orbit: BoundaryOrbit
    nodes: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        points = np.array(self.points, dtype=float)
        if nodes.ndim != 1 or points.shape != (nodes.size, 2):
            raise ValidationError("curve needs nodes (N+1,) and points (N+1, 2)")
        if nodes.size < 2:
            raise ValidationError("curve needs at least one element")
        scale = max(1.0, float(np.max(np.abs(points))))
        # snap parameter endpoints and the boundary contact before validating
        if abs(nodes[0]) <= _SNAP_RTOL:
            nodes[0] = 0.0
        if abs(nodes[-1] - 1.0) <= _SNAP_RTOL:
            nodes[-1] = 1.0
        start = np.array(self.orbit.point)
        if np.max(np.abs(points[0] - start)) <= _SNAP_RTOL * scale:
            points[0] = start
        tail = points[-1]
        m = min(tail[0], tail[1])
        if 0.0 <= m <= _SNAP_RTOL * scale:
            points[-1, int(np.argmin(tail))] = 0.0
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValidationError("curve parameters must run from exactly 0 to 1")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValidationError("curve parameters must be strictly increasing")
        if not np.all(np.isfinite(points)):
            raise ValidationError("curve points must be finite")
        if np.any(points < 0.0):
            raise ValidationError("curve points must stay in the closed quarter plane")
        if not np.array_equal(points[0], start):
            raise ValidationError("curve must start at the boundary orbit point")
        interior = points[1:-1]
        if interior.size and not np.all(interior > 0.0):
            raise ValidationError("interior nodes must lie in the open quadrant")
        if points[-1, 0] * points[-1, 1] != 0.0:
            raise ValidationError("terminal node must lie on the quarter-plane boundary")
        nodes.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "points", points)

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def uv(self):
        return uv_from_xy(self.x, self.y)


def element_chords(curve: ProfileCurve) -> np.ndarray:
    d = np.diff(curve.points, axis=0)
    return np.hypot(d[:, 0], d[:, 1])


def element_speeds_g(curve: ProfileCurve) -> np.ndarray:
    return element_chords(curve) / np.diff(curve.nodes)


def element_midpoints(curve: ProfileCurve) -> np.ndarray:
    return 0.5 * (curve.points[:-1] + curve.points[1:])


def element_speeds_h(curve: ProfileCurve, unit_constant: bool = False) -> np.ndarray:
    mids = element_midpoints(curve)
    f = weight_F((mids[:, 0], mids[:, 1]), curve.orbit.n, unit_constant=unit_constant)
    return f * element_speeds_g(curve)


def speed_g(curve: ProfileCurve, element: int) -> float:
    return float(element_speeds_g(curve)[element])


def speed_h(curve: ProfileCurve, element: int, unit_constant: bool = False) -> float:
    return float(element_speeds_h(curve, unit_constant=unit_constant)[element])


def speed_g_uv(curve: ProfileCurve, element: int) -> float:
    """Chord speed computed in (u, v) coordinates via g = (du^2+dv^2)/(2r).

    Agrees with speed_g up to the discretization of the chord; the two
    converge to each other under grid refinement.
    """
    u, v = curve.uv()
    du = u[element + 1] - u[element]
    dv = v[element + 1] - v[element]
    um = 0.5 * (u[element] + u[element + 1])
    vm = 0.5 * (v[element] + v[element + 1])
    rm = math.hypot(um, vm)
    dt = curve.nodes[element + 1] - curve.nodes[element]
    return math.hypot(du, dv) / dt / math.sqrt(2.0 * rm)


def length_g(curve: ProfileCurve) -> float:
    return float(np.sum(element_chords(curve)))


def length_h(curve: ProfileCurve, unit_constant: bool = False) -> float:
    """h-length = integral of F along the curve (midpoint rule per element)."""
    return float(np.sum(element_speeds_h(curve, unit_constant=unit_constant) * np.diff(curve.nodes)))


def cone_curve(orbit: BoundaryOrbit, N: int) -> ProfileCurve:
    """Straight profile (1-t)*(R, R) of the singular minimal cone."""
    if orbit.x0 != orbit.y0:
        raise PreconditionError("cone_curve requires an orbit with x0 == y0")
    if N < 2:
        raise PreconditionError("cone_curve requires N >= 2")
    t = np.linspace(0.0, 1.0, N + 1)
    pts = np.outer(1.0 - t, [orbit.x0, orbit.y0])
    return ProfileCurve(orbit, t, pts)


def cylinder_curve(orbit: BoundaryOrbit, N: int) -> ProfileCurve:
    """Vertical drop (x0, y0*(1-t)); the hypersurface is a product cylinder."""
    if N < 2:
        raise PreconditionError("cylinder_curve requires N >= 2")
    t = np.linspace(0.0, 1.0, N + 1)
    pts = np.column_stack([np.full(N + 1, orbit.x0), orbit.y0 * (1.0 - t)])
    return ProfileCurve(orbit, t, pts)


def sigma_s_curve(n: int, s: float, N: int) -> ProfileCurve:
    """Tilted straight segment (u, v) = (s t, 1 - t) through the unit orbit."""
    if s < 0.0:
        raise PreconditionError("sigma_s_curve requires s >= 0")
    if N < 2:
        raise PreconditionError("sigma_s_curve requires N >= 2")
    orbit = BoundaryOrbit(n, 1.0, 1.0)
    t = np.linspace(0.0, 1.0, N + 1)
    x, y = xy_from_uv(s * t, 1.0 - t)
    return ProfileCurve(orbit, t, np.column_stack([x, y]))


def sigma0_curve(n: int, N: int) -> ProfileCurve:
    """(1-t)^(1/2)*(1, 1): the cone profile in its natural slow parametrization."""
    return sigma_s_curve(n, 0.0, N)


def reflect_curve(curve: ProfileCurve) -> ProfileCurve:
    """Swap the two sphere radii; valid when the orbit is symmetric."""
    if curve.orbit.x0 != curve.orbit.y0:
        raise PreconditionError("reflection changes the start point unless x0 == y0")
    return ProfileCurve(curve.orbit, curve.nodes.copy(), curve.points[:, ::-1].copy())


def scale_curve(curve: ProfileCurve, factor: float) -> ProfileCurve:
    if factor <= 0.0:
        raise PreconditionError("scale factor must be positive")
    orbit = BoundaryOrbit(curve.orbit.n, factor * curve.orbit.x0, factor * curve.orbit.y0)
    return ProfileCurve(orbit, curve.nodes.copy(), factor * curve.points)


def subdivide_curve(curve: ProfileCurve, times: int = 1) -> ProfileCurve:
    """Insert element midpoints (parameter and chord midpoints) `times` times."""
    nodes, points = curve.nodes, curve.points
    for _ in range(times):
        mid_t = 0.5 * (nodes[:-1] + nodes[1:])
        mid_p = 0.5 * (points[:-1] + points[1:])
        new_nodes = np.empty(2 * nodes.size - 1)
        new_points = np.empty((2 * nodes.size - 1, 2))
        new_nodes[0::2] = nodes
        new_nodes[1::2] = mid_t
        new_points[0::2] = points
        new_points[1::2] = mid_p
        nodes, points = new_nodes, new_points
    return ProfileCurve(curve.orbit, nodes, points)


def resample_uniform_arclength(points: np.ndarray, N: int) -> np.ndarray:
    """N+1 points at equal increments of cumulative chord length.

    One-shot interpolation (no equidistribution iteration); used where a
    near-constant-speed sampling suffices, e.g. decoding optimizer
    candidates.  The strict constant-speed contract lives in transforms.
    """
    pts = np.asarray(points, dtype=float)
    seg = np.diff(pts, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    keep = seglen > 0.0
    if not np.all(keep):
        pts = np.concatenate([pts[:1], pts[1:][keep]])
        seg = np.diff(pts, axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
    if seglen.sum() == 0.0:
        raise PreconditionError("polyline has zero length")
    S = np.concatenate([[0.0], np.cumsum(seglen)])
    targets = np.linspace(0.0, S[-1], N + 1)
    out = np.column_stack([np.interp(targets, S, pts[:, 0]), np.interp(targets, S, pts[:, 1])])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


CURVE_CSV_HEADER = ["t", "x", "y"]


def write_curve_csv(curve: ProfileCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_CSV_HEADER)
        for t, (x, y) in zip(curve.nodes, curve.points):
            writer.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


def read_curve_csv(path, n: int) -> ProfileCurve:
    """Load a curve written by write_curve_csv.

    The dimension parameter is not part of the file format, so it must
    be supplied.  A curve whose start has x < y is reflected on read to
    match the canonical orbit orientation.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CURVE_CSV_HEADER:
            raise ValidationError(f"curve CSV must start with header {','.join(CURVE_CSV_HEADER)}")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(f"malformed curve CSV row: {row!r}")
            rows.append([float(v) for v in row])
    if len(rows) < 2:
        raise ValidationError("curve CSV must contain at least two nodes")
    data = np.asarray(rows, dtype=float)
    nodes = data[:, 0]
    points = data[:, 1:]
    if points[0, 0] < points[0, 1]:
        points = points[:, ::-1]
    orbit = BoundaryOrbit(n, points[0, 0], points[0, 1])
    return ProfileCurve(orbit, nodes, points)
