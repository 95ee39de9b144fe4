"""Mode-converting reflection at a traction-free flat boundary.

Local model: the boundary is the plane {x3 = 0} with the solid occupying
{x3 < 0}; an incident wave travels upward (slowness xi with xi3 > 0) and
reflects into one compressional and one shear branch whose tangential
slownesses are copied from the incident one.  The vertical slowness of each
reflected branch is the root of c^-2 - |xi_t|^2 with the branch Im sqrt > 0,
so a post-critical shear incidence produces an evanescent compressional
branch (flagged, never traced as a ray).

The reflected amplitudes solve a 4x4 linear system: three rows cancel the
leading-order boundary traction of the superposed waves, the fourth enforces
transversality of the reflected shear polarization.  The same matrix serves
both incidence modes — shear incidence evaluates it at the compressional
vertical slowness — and it is provably invertible for admissible media,
which the tests probe at random and against a closed-form reduced
determinant.

Curved boundaries are handled by rotating into the local boundary frame at
each bounce; ``iterate_reflections`` grows the resulting branch tree across
a convex domain up to a configured depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import ConvexDomain
from .errors import NonPropagatingError, NonTransversalError, RankDeficientError
from .geodesics import GeodesicPath, trace_geodesic
from .medium import IsotropicMedium, WaveMode


def vertical_root(c: float, tangential_sq: float):
    """The root of c^-2 - tangential_sq on the branch Im sqrt > 0.

    Real positive while the radicand is positive, i*sqrt(|radicand|) once it
    flips sign (the evanescent regime).
    """
    rad = 1.0 / (c * c) - tangential_sq
    if rad >= 0.0:
        return math.sqrt(rad)
    return 1j * math.sqrt(-rad)


@dataclass(frozen=True)
class SnellResult:
    """Reflected slownesses for both branches plus the evanescent flag."""

    xi_inc: np.ndarray
    mode_in: WaveMode
    xi_P_minus: np.ndarray
    xi_S_minus: np.ndarray
    evanescent: bool


def snell_reflect(xi_inc, mode_in: WaveMode, cP: float, cS: float) -> SnellResult:
    """Reflect an incident slowness at {x3 = 0}, preserving tangential parts.

    The shear branch is always propagating (cS < cP); the compressional
    branch turns evanescent past the critical angle arcsin(cS/cP) of shear
    incidence, in which case its third component is returned as the positive
    imaginary root.
    """
    xi = np.asarray(xi_inc, dtype=float).reshape(3)
    c_in = cP if mode_in is WaveMode.P else cS
    if xi[2] <= 0.0:
        raise NonPropagatingError(
            f"incident slowness must point toward the boundary (xi3 > 0), got {xi[2]}"
        )
    if abs(np.linalg.norm(xi) - 1.0 / c_in) > 1e-8 / c_in:
        raise NonPropagatingError(
            f"incident slowness has |xi| = {np.linalg.norm(xi):.9g}, "
            f"expected 1/c = {1.0 / c_in:.9g} for mode {mode_in.value}"
        )
    tang_sq = float(xi[0] ** 2 + xi[1] ** 2)
    root_p = vertical_root(cP, tang_sq)
    evanescent = isinstance(root_p, complex)
    if evanescent:
        xi_p = np.array([xi[0], xi[1], root_p], dtype=complex)
    else:
        xi_p = np.array([xi[0], xi[1], -root_p])
    root_s = vertical_root(cS, tang_sq)
    if isinstance(root_s, complex):
        raise NonPropagatingError("tangential slowness exceeds 1/cS; input was not propagating")
    xi_s = np.array([xi[0], xi[1], -root_s])
    return SnellResult(xi, mode_in, xi_p, xi_s, evanescent)


def traction_matrix(xi, lam: float, mu: float):
    """N(xi): maps a vector amplitude to its leading boundary traction.

    For a wave a*exp(i varrho phi) with grad phi = xi at the boundary, the
    traction rows (sigma_13, sigma_23, sigma_33) divided by i*varrho*exp(...)
    are N(xi) a.
    """
    xi = np.asarray(xi)
    dt = np.result_type(xi.dtype, float)
    x1, x2, x3 = xi
    return np.array(
        [
            [mu * x3, 0.0, mu * x1],
            [0.0, mu * x3, mu * x2],
            [lam * x1, lam * x2, (lam + 2.0 * mu) * x3],
        ],
        dtype=dt,
    )


def assemble_MP(xi, lam: float, mu: float, rho: float):
    """The 4x4 reflection matrix for unknowns (A_P-, a1-, a2-, a3-).

    ``xi`` carries the tangential slowness in its first two slots and the
    compressional vertical slowness (possibly imaginary) in the third.  The
    shear vertical slowness is derived from cS = sqrt(mu/rho).  Column one is
    the boundary traction of a unit reflected compressional wave, columns two
    to four the traction of the reflected shear amplitude components; the
    last row is shear transversality.
    """
    xi = np.asarray(xi)
    x1, x2, x3 = xi
    tang_sq = float((x1 * x1 + x2 * x2).real)
    cs = math.sqrt(mu / rho)
    rad = 1.0 / (cs * cs) - tang_sq
    if rad < 0.0:
        raise NonPropagatingError("tangential slowness exceeds 1/cS at the boundary point")
    xs3 = math.sqrt(rad)
    dt = np.result_type(xi.dtype, float)
    return np.array(
        [
            [-2.0 * mu * x1 * x3, -mu * xs3, 0.0, mu * x1],
            [-2.0 * mu * x2 * x3, 0.0, -mu * xs3, mu * x2],
            [rho - 2.0 * mu * tang_sq, lam * x1, lam * x2, -(lam + 2.0 * mu) * xs3],
            [0.0, x1, x2, -xs3],
        ],
        dtype=dt,
    )


@dataclass(frozen=True)
class ReflectionCoefficients:
    """Solved reflected amplitudes for one incidence."""

    mode_in: WaveMode
    xi_inc: np.ndarray
    incident_amplitude: object
    A_P_minus: complex
    a_S_minus: np.ndarray
    xi_P_minus: np.ndarray
    xi_S_minus: np.ndarray
    evanescent: bool


def _solve(M, rhs):
    det = np.linalg.det(M)
    if abs(det) < 1e-14 * max(1.0, float(np.max(np.abs(M))) ** 4):
        raise RankDeficientError(f"reflection system is numerically singular (det = {det!r})")
    return np.linalg.solve(M, rhs)


def solve_p_incidence(A_P_plus, xi, lam: float, mu: float, rho: float) -> ReflectionCoefficients:
    """Reflected amplitudes for an incident compressional wave A_P+ * xi."""
    cp = math.sqrt((lam + 2.0 * mu) / rho)
    cs = math.sqrt(mu / rho)
    xi = np.asarray(xi, dtype=float).reshape(3)
    snell = snell_reflect(xi, WaveMode.P, cp, cs)
    M = assemble_MP(xi, lam, mu, rho)
    incident_traction = traction_matrix(xi, lam, mu) @ (xi * complex(A_P_plus))
    rhs = np.concatenate([-incident_traction, [0.0]])
    sol = _solve(M, rhs)
    return ReflectionCoefficients(
        mode_in=WaveMode.P,
        xi_inc=xi,
        incident_amplitude=complex(A_P_plus),
        A_P_minus=complex(sol[0]),
        a_S_minus=sol[1:],
        xi_P_minus=snell.xi_P_minus,
        xi_S_minus=snell.xi_S_minus,
        evanescent=snell.evanescent,
    )


def solve_s_incidence(a_S_plus, xi, lam: float, mu: float, rho: float) -> ReflectionCoefficients:
    """Reflected amplitudes for an incident shear wave with polarization a_S+.

    Past the critical angle the same system is solved with the imaginary
    compressional vertical slowness; the compressional branch is then
    evanescent and decays into the solid.
    """
    cp = math.sqrt((lam + 2.0 * mu) / rho)
    cs = math.sqrt(mu / rho)
    xi = np.asarray(xi, dtype=float).reshape(3)
    a_plus = np.asarray(a_S_plus, dtype=complex).reshape(3)
    if abs(a_plus @ xi) > 1e-8 * max(np.linalg.norm(a_plus) * np.linalg.norm(xi), 1e-300):
        raise NonTransversalError(
            f"incident shear polarization must be orthogonal to its slowness "
            f"(inner product {a_plus @ xi!r})"
        )
    snell = snell_reflect(xi, WaveMode.S, cp, cs)
    root_p = vertical_root(cp, float(xi[0] ** 2 + xi[1] ** 2))
    M = assemble_MP(np.array([xi[0], xi[1], root_p]), lam, mu, rho)
    incident_traction = traction_matrix(xi, lam, mu) @ a_plus
    rhs = np.concatenate([-incident_traction, [0.0]])
    sol = _solve(M, rhs)
    return ReflectionCoefficients(
        mode_in=WaveMode.S,
        xi_inc=xi,
        incident_amplitude=a_plus,
        A_P_minus=complex(sol[0]),
        a_S_minus=sol[1:],
        xi_P_minus=snell.xi_P_minus,
        xi_S_minus=snell.xi_S_minus,
        evanescent=snell.evanescent,
    )


# -- reflection trees across a convex domain ------------------------------


@dataclass
class ReflectionNode:
    """One leg of a broken ray with the reflection data at its far end."""

    mode: WaveMode
    amplitude: object  # complex for P legs, complex 3-vector for S legs
    path: GeodesicPath
    coefficients: ReflectionCoefficients | None = None
    children: list = field(default_factory=list)

    def count(self) -> int:
        return 1 + sum(child.count() for child in self.children)


def _local_frame(normal):
    """Rotation matrix with rows (t1, t2, n) mapping world to boundary frame."""
    n = normal / np.linalg.norm(normal)
    seed = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, seed)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return np.stack([t1, t2, n])


def iterate_reflections(
    m: IsotropicMedium,
    dom: ConvexDomain,
    mode: WaveMode,
    x0,
    dir0,
    amplitude=1.0,
    depth: int = 3,
    t0: float = 0.0,
) -> ReflectionNode:
    """Grow the tree of reflected legs from an initial ray, depth levels deep.

    Each boundary hit is solved in the local boundary frame (outward normal
    mapped to the third axis, so the solid sits at x3 < 0); every solve
    spawns a shear child and, when propagating, a compressional child.
    Amplitudes are the frozen leading constants, updated by each reflection
    solve; evanescent compressional branches are recorded on the node's
    coefficients but not traced.
    """
    path = trace_geodesic(m, mode, x0, dir0, dom, t0)
    node = ReflectionNode(mode=mode, amplitude=amplitude, path=path)
    if depth <= 0:
        return node

    hit = path.exit
    x_b = hit.point
    lam = float(m.lam.value(x_b))
    mu = float(m.mu.value(x_b))
    rho = float(m.rho.value(x_b))
    R = _local_frame(dom.outward_normal(x_b))

    v = hit.direction
    xi_world = v / float(v @ v)
    xi_local = R @ xi_world

    if mode is WaveMode.P:
        coeffs = solve_p_incidence(amplitude, xi_local, lam, mu, rho)
    else:
        a_local = R @ np.asarray(amplitude, dtype=complex)
        coeffs = solve_s_incidence(a_local, xi_local, lam, mu, rho)
    node.coefficients = coeffs

    nudge = 1e-9 * dom.bounding_radius
    start = x_b - nudge * dom.outward_normal(x_b)

    def spawn(child_mode, slowness_local, child_amplitude):
        d_local = np.real(slowness_local)
        d_world = R.T @ d_local
        return iterate_reflections(
            m, dom, child_mode, start, d_world, child_amplitude, depth - 1, hit.time
        )

    if not coeffs.evanescent:
        node.children.append(spawn(WaveMode.P, coeffs.xi_P_minus, coeffs.A_P_minus))
    node.children.append(
        spawn(WaveMode.S, coeffs.xi_S_minus, R.T @ coeffs.a_S_minus)
    )
    return node
