"""Ray tracing in the slowness geometries of an isotropic elastic medium.

Each wavespeed c of an admissible medium turns the spatial domain into a
Riemannian manifold with the conformally Euclidean metric c^-2 ds^2.  Rays
are unit-speed geodesics of that metric, so the natural parameter s along a
ray is travel time, and a ray launched at time t0 sits at parameter s at
clock time t = t0 + s.

Rays are integrated in Hamiltonian (position/momentum) form,

    dx/ds = c^2 p,        dp/ds = -1/2 grad(c^2) |p|^2,

which keeps the unit-speed constraint |p| = 1/c a conserved quantity; the
momentum is additionally renormalized between integration chunks so drift
cannot accumulate over long paths.  On top of a traced ray the module builds
parallel-transported orthonormal frames, tubular (Fermi) coordinates with
the rotated pair tau = (t - t0 + s)/sqrt(2), r = (-t + t0 + s)/sqrt(2), and
a sampled lower bound for the metric diameter of a convex domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .domain import ConvexDomain, ball, check_convexity, ellipsoid  # noqa: F401 - re-exported
from .errors import ChartInversionError, TrappingSuspectedError
from .medium import IsotropicMedium, WaveMode

__all__ = [
    "ConvexDomain",
    "ball",
    "ellipsoid",
    "check_convexity",
    "BoundaryEvent",
    "GeodesicPath",
    "ParallelFrame",
    "FermiChart",
    "trace_geodesic",
    "parallel_transport",
    "default_e_init",
    "build_fermi_chart",
    "fermi_forward",
    "fermi_inverse",
    "estimate_diameter",
]


def _hamiltonian_rhs(m: IsotropicMedium, mode: WaveMode):
    def rhs(s, state):
        x = state[:3]
        p = state[3:]
        q = float(m.speed_squared(x, mode))
        dq = m.speed_squared_gradient(x, mode)
        return np.concatenate([q * p, -0.5 * float(p @ p) * dq])

    return rhs


class _PiecewiseDense:
    """Ordered collection of dense ODE solutions covering [lo, hi]."""

    def __init__(self):
        self.segments = []  # (lo, hi, dense_sol), sorted by lo

    def add(self, lo, hi, sol):
        self.segments.append((min(lo, hi), max(lo, hi), sol))
        self.segments.sort(key=lambda seg: seg[0])

    @property
    def lo(self):
        return self.segments[0][0]

    @property
    def hi(self):
        return self.segments[-1][1]

    def __call__(self, s):
        s = float(s)
        for lo, hi, sol in self.segments:
            if lo - 1e-12 <= s <= hi + 1e-12:
                return sol(np.clip(s, lo, hi))
        raise ValueError(f"parameter {s} outside covered range [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class BoundaryEvent:
    """A ray/boundary crossing: parameter, clock time, point and velocity."""

    s: float
    time: float
    point: np.ndarray
    direction: np.ndarray


class GeodesicPath:
    """A traced ray with dense samples and its two boundary crossings.

    Samples cover [s_minus - eps, s_plus + eps] where s_minus/s_plus are the
    backward/forward boundary crossings and eps is the extension margin, so
    downstream consumers (frames, beam phases) can evaluate slightly past the
    domain.  Immutable once built.
    """

    def __init__(self, mode, t0, s_grid, x_samples, v_samples, entry, exit, extension):
        self.mode = mode
        self.t0 = float(t0)
        self.s = np.asarray(s_grid, dtype=float)
        self.x = np.asarray(x_samples, dtype=float)
        self.v = np.asarray(v_samples, dtype=float)
        self.entry = entry
        self.exit = exit
        self.extension = float(extension)
        self._x_spline = CubicSpline(self.s, self.x, axis=0)
        self._v_spline = CubicSpline(self.s, self.v, axis=0)

    @property
    def t(self):
        return self.t0 + self.s

    @property
    def s_minus(self) -> float:
        return self.entry.s

    @property
    def s_plus(self) -> float:
        return self.exit.s

    def time(self, s):
        return self.t0 + np.asarray(s, dtype=float)

    def position(self, s):
        return self._x_spline(s)

    def velocity(self, s):
        return self._v_spline(s)

    def acceleration(self, s):
        return self._v_spline(s, 1)

    def unit_speed_defect(self, m: IsotropicMedium):
        """max over samples of |g(v,v) - 1| = | |v|^2 / c^2 - 1 |."""
        q = np.asarray(m.speed_squared(self.x, self.mode))
        return float(np.max(np.abs(np.sum(self.v * self.v, axis=-1) / q - 1.0)))


def _first_boundary_crossing(dom, dense, s_from, s_to, n_probe=33):
    """Smallest |s| crossing of b along the dense solution, or None."""
    grid = np.linspace(s_from, s_to, n_probe)
    b_vals = np.array([dom.b(dense(s)[:3]) for s in grid])
    for k in range(1, n_probe):
        if b_vals[k] >= 0.0 > b_vals[k - 1]:
            root = brentq(
                lambda s: float(dom.b(dense(s)[:3])),
                grid[k - 1],
                grid[k],
                xtol=1e-12,
                rtol=8.9e-16,
            )
            return float(root)
    return None


def _advance(rhs, m, mode, state, s_from, s_to, rtol, atol):
    sol = solve_ivp(
        rhs,
        (s_from, s_to),
        state,
        method="DOP853",
        dense_output=True,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise TrappingSuspectedError(
            f"step control failed between s={s_from:.6g} and s={s_to:.6g}: {sol.message}"
        )
    end = sol.y[:, -1].copy()
    # pin |p| = 1/c before the next chunk starts
    c_end = float(m.wavespeed(end[:3], mode))
    end[3:] /= c_end * float(np.linalg.norm(end[3:]))
    return sol.sol, end


def trace_geodesic(
    m: IsotropicMedium,
    mode: WaveMode,
    x0,
    dir0,
    dom: ConvexDomain,
    t0: float = 0.0,
    *,
    rtol: float = 1e-11,
    atol: float = 1e-13,
    n_samples: int = 1201,
    max_length: float | None = None,
    extension_fraction: float = 0.05,
) -> GeodesicPath:
    """Trace the ray through x0 with initial direction dir0 across dom.

    The ray is integrated in both directions until it crosses the boundary
    (crossing parameter located by root-finding to 1e-10), then extended past
    each crossing by ``extension_fraction`` of the total length.  Raises
    :class:`TrappingSuspectedError` if either leg exceeds ``max_length``
    before reaching the boundary.
    """
    x0 = np.asarray(x0, dtype=float).reshape(3)
    dir0 = np.asarray(dir0, dtype=float).reshape(3)
    if not dom.contains(x0):
        raise ValueError(f"start point {x0.tolist()} is not inside the domain")
    nd = float(np.linalg.norm(dir0))
    if nd == 0.0:
        raise ValueError("initial direction must be nonzero")
    c0 = float(m.wavespeed(x0, mode))
    p0 = dir0 / (nd * c0)
    state0 = np.concatenate([x0, p0])

    if max_length is None:
        max_length = 60.0 * dom.bounding_radius / c0
    chunk = max(0.25 * dom.bounding_radius / c0, 1e-3)
    rhs = _hamiltonian_rhs(m, mode)

    def march(sign):
        """Integrate one leg; returns (s_cross, dense, end_state, s_covered)."""
        dense = _PiecewiseDense()
        state = state0.copy()
        s_cur = 0.0
        while True:
            if abs(s_cur) > max_length:
                raise TrappingSuspectedError(
                    "trapping suspected: ray exceeded max length "
                    f"{max_length:.6g} without reaching the boundary"
                )
            s_next = s_cur + sign * chunk
            seg, end = _advance(rhs, m, mode, state, s_cur, s_next, rtol, atol)
            dense.add(s_cur, s_next, seg)
            crossing = _first_boundary_crossing(dom, dense, s_cur, s_next)
            if crossing is not None:
                return crossing, dense, end, s_next
            state = end
            s_cur = s_next

    s_plus, dense_fwd, end_fwd, cov_plus = march(+1.0)
    s_minus, dense_bwd, end_bwd, cov_minus = march(-1.0)

    eps = extension_fraction * (s_plus - s_minus)

    while cov_plus < s_plus + eps:
        seg, end_fwd = _advance(rhs, m, mode, end_fwd, cov_plus, cov_plus + chunk, rtol, atol)
        dense_fwd.add(cov_plus, cov_plus + chunk, seg)
        cov_plus += chunk
    while cov_minus > s_minus - eps:
        seg, end_bwd = _advance(rhs, m, mode, end_bwd, cov_minus, cov_minus - chunk, rtol, atol)
        dense_bwd.add(cov_minus, cov_minus - chunk, seg)
        cov_minus -= chunk

    def state_at(s):
        return dense_fwd(s) if s >= 0.0 else dense_bwd(s)

    s_grid = np.linspace(s_minus - eps, s_plus + eps, n_samples)
    states = np.array([state_at(s) for s in s_grid])
    xs = states[:, :3]
    ps = states[:, 3:]
    q = np.asarray(m.speed_squared(xs, mode))
    vs = q[:, None] * ps

    def event_at(s):
        st = state_at(s)
        x = st[:3]
        v = float(m.speed_squared(x, mode)) * st[3:]
        return BoundaryEvent(s=float(s), time=float(t0 + s), point=x, direction=v)

    return GeodesicPath(
        mode=mode,
        t0=t0,
        s_grid=s_grid,
        x_samples=xs,
        v_samples=vs,
        entry=event_at(s_minus),
        exit=event_at(s_plus),
        extension=eps,
    )


# -- parallel frames ------------------------------------------------------


class ParallelFrame:
    """Two parallel-transported vectors completing the tangent to a frame.

    Together with the normalized tangent the fields e2, e3 form a triple that
    is orthonormal for c^-2 ds^2 at every parameter value (so e2 and e3 have
    Euclidean length c and are Euclidean-orthogonal to the ray).
    """

    def __init__(self, path: GeodesicPath, e2_samples, e3_samples):
        self.path = path
        self.s = path.s
        self.e2_samples = np.asarray(e2_samples, dtype=float)
        self.e3_samples = np.asarray(e3_samples, dtype=float)
        self._e2_spline = CubicSpline(self.s, self.e2_samples, axis=0)
        self._e3_spline = CubicSpline(self.s, self.e3_samples, axis=0)

    def e2(self, s):
        return self._e2_spline(s)

    def e3(self, s):
        return self._e3_spline(s)

    def tangent(self, s):
        return self.path.velocity(s)

    def gram(self, s, m: IsotropicMedium):
        """3x3 Gram matrix of (tangent, e2, e3) in the slowness metric."""
        x = self.path.position(s)
        q = float(m.speed_squared(x, self.path.mode))
        E = np.stack([self.tangent(s), self.e2(s), self.e3(s)])
        return E @ E.T / q

    def orthonormality_defect(self, m: IsotropicMedium):
        ident = np.eye(3)
        return max(
            float(np.max(np.abs(self.gram(s, m) - ident)))
            for s in self.s[:: max(1, len(self.s) // 101)]
        )


def default_e_init(m: IsotropicMedium, path: GeodesicPath):
    """A canonical orthonormal completion of the initial tangent."""
    v0 = path.velocity(0.0)
    c0 = float(np.linalg.norm(v0))
    that = v0 / c0
    seed = np.array([1.0, 0.0, 0.0]) if abs(that[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u1 = np.cross(that, seed)
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(that, u1)
    return c0 * u1, c0 * u2


def parallel_transport(
    path: GeodesicPath,
    m: IsotropicMedium,
    e_init=None,
    *,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> ParallelFrame:
    """Transport two orthonormal normal vectors along the whole path.

    For the conformal metric the transport equation in Euclidean terms reads

        de/ds = v (e . grad log c) + e (v . grad log c) - (v . e) grad log c

    with v the ray velocity; it preserves the metric Gram matrix exactly.
    """
    mode = path.mode
    if e_init is None:
        e_init = default_e_init(m, path)
    e2_0 = np.asarray(e_init[0], dtype=float).reshape(3)
    e3_0 = np.asarray(e_init[1], dtype=float).reshape(3)

    v0 = path.velocity(0.0)
    q0 = float(v0 @ v0)
    gram0 = np.stack([v0, e2_0, e3_0]) @ np.stack([v0, e2_0, e3_0]).T / q0
    if np.max(np.abs(gram0 - np.eye(3))) > 1e-6:
        raise ValueError(
            "e_init must be orthonormal with the tangent in the slowness metric "
            f"(Gram defect {np.max(np.abs(gram0 - np.eye(3))):.3e})"
        )

    def rhs(s, E):
        x = path.position(s)
        v = path.velocity(s)
        c = float(m.wavespeed(x, mode))
        gl = m.wavespeed_gradient(x, mode) / c
        out = np.empty(6)
        for k in (0, 1):
            e = E[3 * k : 3 * k + 3]
            out[3 * k : 3 * k + 3] = v * (e @ gl) + e * (v @ gl) - (v @ e) * gl
        return out

    E0 = np.concatenate([e2_0, e3_0])
    s_lo, s_hi = path.s[0], path.s[-1]
    sols = {}
    for a, b in ((0.0, s_hi), (0.0, s_lo)):
        sols[np.sign(b - a)] = solve_ivp(
            rhs, (a, b), E0, method="DOP853", dense_output=True, rtol=rtol, atol=atol
        ).sol

    samples = np.array([sols[1.0 if s >= 0 else -1.0](s) for s in path.s])
    return ParallelFrame(path, samples[:, :3], samples[:, 3:])


# -- Fermi (tubular) coordinates ------------------------------------------


class FermiChart:
    """Tubular coordinates around a ray, plus the rotated (tau, r) pair.

    Coordinates (t, s, y2, y3) map to the spacetime point whose spatial part
    is the metric exponential of y2 e2(s) + y3 e3(s) based at the axis point
    with parameter s.  The rotation

        tau = (t - t0 + s)/sqrt(2),      r = (-t + t0 + s)/sqrt(2)

    turns the clock/parameter pair into the along-phase coordinate tau and
    the phase-level coordinate r; on the axis r = y2 = y3 = 0.
    """

    def __init__(self, path: GeodesicPath, frame: ParallelFrame, m: IsotropicMedium, delta: float):
        self.path = path
        self.frame = frame
        self.m = m
        self.t0 = path.t0
        self.delta = float(delta)
        self._rhs = _hamiltonian_rhs(m, path.mode)
        # constant media have straight-line exponentials; skip the integrator
        self._const_speed = None
        if m.constant_values() is not None:
            self._const_speed = float(m.wavespeed(path.x[0], path.mode))

    # axis helpers

    def axis_point(self, s):
        return self.path.position(s)

    def rotate(self, t, s):
        root2 = math.sqrt(2.0)
        return (t - self.t0 + s) / root2, (-t + self.t0 + s) / root2

    def unrotate(self, tau, r):
        root2 = math.sqrt(2.0)
        return self.t0 + (tau - r) / root2, (tau + r) / root2

    # exponential map and its inverse

    def _exp(self, s, y2, y3):
        sigma = math.hypot(y2, y3)
        base = self.axis_point(s)
        if sigma < 1e-14:
            return np.asarray(base, dtype=float)
        w = y2 * self.frame.e2(s) + y3 * self.frame.e3(s)
        d = w / np.linalg.norm(w)
        if self._const_speed is not None:
            return np.asarray(base, dtype=float) + sigma * self._const_speed * d
        c = float(self.m.wavespeed(base, self.path.mode))
        state0 = np.concatenate([base, d / c])
        sol = solve_ivp(
            self._rhs,
            (0.0, sigma),
            state0,
            method="DOP853",
            rtol=1e-11,
            atol=1e-13,
        )
        if not sol.success:
            raise ChartInversionError(f"exponential-map integration failed at s={s}: {sol.message}")
        return sol.y[:3, -1]

    def forward(self, coords):
        t, s, y2, y3 = (float(c) for c in coords)
        return t, self._exp(s, y2, y3)

    def inverse(self, t, x, *, tol: float = 1e-11, max_iter: int = 30):
        """Coordinates (t, s, y2, y3) of a spacetime point, or None.

        Returns None when the point converges to transverse offset outside the
        tube radius; raises :class:`ChartInversionError` if the Newton
        iteration fails to converge at all.
        """
        x = np.asarray(x, dtype=float).reshape(3)
        # initial guess from the nearest path sample
        dists = np.linalg.norm(self.path.x - x, axis=1)
        k = int(np.argmin(dists))
        s = float(self.path.s[k])
        base = self.axis_point(s)
        q = float(self.m.speed_squared(base, self.path.mode))
        w = x - base
        u = np.array([s, float(w @ self.frame.e2(s)) / q, float(w @ self.frame.e3(s)) / q])

        scale = 1.0 + float(np.linalg.norm(x))
        h = 1e-6

        def residual(u):
            return self._exp(u[0], u[1], u[2]) - x

        for _ in range(max_iter):
            F = residual(u)
            if np.linalg.norm(F) < tol * scale:
                break
            J = np.empty((3, 3))
            for j in range(3):
                up = u.copy()
                um = u.copy()
                up[j] += h
                um[j] -= h
                J[:, j] = (residual(up) - residual(um)) / (2.0 * h)
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError as exc:
                raise ChartInversionError(
                    f"singular Jacobian inverting chart at t={t}, x={x.tolist()}"
                ) from exc
            # damp wild steps; the chart is only meant for a thin tube
            limit = 4.0 * max(self.delta, 1e-3)
            norm = float(np.linalg.norm(step))
            if norm > limit:
                step *= limit / norm
            u = u + step
        else:
            raise ChartInversionError(
                f"chart inversion did not converge at t={t}, x={x.tolist()}: "
                f"residual {np.linalg.norm(residual(u)):.3e}"
            )
        s, y2, y3 = (float(c) for c in u)
        if math.hypot(y2, y3) > self.delta:
            return None
        return float(t), s, y2, y3

    def beam_coords(self, t, x):
        """(tau, r, y2, y3) of a spacetime point, or None outside the tube."""
        inv = self.inverse(t, x)
        if inv is None:
            return None
        t, s, y2, y3 = inv
        tau, r = self.rotate(t, s)
        return tau, r, y2, y3


def fermi_forward(chart: FermiChart, coords):
    return chart.forward(coords)


def fermi_inverse(chart: FermiChart, point):
    t, x = point
    return chart.inverse(t, x)


def _min_curvature_radius(path: GeodesicPath) -> float:
    radius = np.inf
    for s in path.s[:: max(1, len(path.s) // 201)]:
        v = path.velocity(s)
        a = path.acceleration(s)
        speed2 = float(v @ v)
        a_perp = a - (a @ v) / speed2 * v
        kappa = float(np.linalg.norm(a_perp)) / speed2
        if kappa > 1e-12:
            radius = min(radius, 1.0 / kappa)
    return radius


def build_fermi_chart(
    path: GeodesicPath,
    frame: ParallelFrame,
    m: IsotropicMedium,
    delta: float | None = None,
) -> FermiChart:
    """Erect Fermi coordinates on a tube around the path.

    The default tube radius is 10% of the smallest curvature radius along
    the ray, capped at a quarter of the path's Euclidean extent.
    """
    if delta is None:
        extent = float(np.max(np.linalg.norm(path.x - path.x[0], axis=1)))
        delta = min(0.1 * _min_curvature_radius(path), 0.25 * extent)
        if not np.isfinite(delta) or delta <= 0:
            delta = 0.25 * extent
    return FermiChart(path, frame, m, delta)


# -- diameter estimation --------------------------------------------------


def estimate_diameter(
    m: IsotropicMedium,
    mode: WaveMode,
    dom: ConvexDomain,
    n_samples: int,
    seed: int = 0,
) -> float:
    """Lower bound for the metric diameter from swept boundary chords.

    Rays are launched inward from a quasi-uniform family of boundary points —
    alternating exact inward normals with seeded random tilts — and the
    longest traced chord (in metric length, i.e. travel time) is returned.
    This is a sampled supremum, hence always a lower bound.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    pts = dom.boundary_points(n_samples)
    nudge = 1e-9 * dom.bounding_radius
    best = 0.0
    for i, xb in enumerate(pts):
        nu = dom.outward_normal(xb)
        d = -nu
        if i % 2 == 1:
            tilt = rng.normal(scale=0.25, size=3)
            d = d + tilt - (tilt @ nu) * nu * 0.5
            d /= np.linalg.norm(d)
            if d @ nu > -0.1:  # keep the launch pointing inward
                d = -nu
        path = trace_geodesic(
            m,
            mode,
            xb - nudge * nu,
            d,
            dom,
            rtol=1e-9,
            atol=1e-11,
            n_samples=33,
        )
        best = max(best, path.s_plus - path.s_minus)
    return best
