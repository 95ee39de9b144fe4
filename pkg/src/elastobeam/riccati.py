"""Quadratic beam phase along a ray via the linearized Riccati flow.

The complex symmetric matrix H that shapes a Gaussian beam's quadratic
phase solves a matrix Riccati equation along the ray.  Instead of
integrating H directly — which blows up at caustics — the module evolves the
linear system

    Y' = C Z,        Z' = -D Y,        Z(tau0) = H0 Y0,

with the constant matrix C = diag(0, 2, 2) and a curvature-coefficient
matrix D(tau), and recovers H = Z Y^-1.  Three structural facts are enforced
on every evolution: H stays symmetric, Im H stays positive definite, and

    det(Im H(tau)) |det Y(tau)|^2 = const,

which is the exactly conserved quantity of the flow.  A continuous branch of
det(Y)^-1/2 is tracked along the grid for the amplitude factors downstream.

D itself comes from second derivatives of the wavespeed around the axis: in
Fermi coordinates the inverse-metric coefficient that drives the transverse
spreading is c^2, and on the axis its relevant second derivatives reduce to

    K_ab = c * (c_TT delta_ab + c_ab) - |grad c|^2 delta_ab,

with c_TT the Hessian of c along the unit tangent and c_ab the Hessian along
the unit normal pair; then D = (1/4) K on the transverse block and zero on
the first row and column.  The transverse block of Y consequently satisfies
the Jacobi equation Y_ss + K Y = 0 in the arclength parameter s = tau/sqrt(2),
which is how the formula is validated in the tests (flat media give D = 0,
linear wavespeeds give K = -I, one-dimensional profiles give
K = (c c'' - c'^2) I).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import BranchTrackingError, RiccatiPositivityError
from .geodesics import GeodesicPath, ParallelFrame
from .medium import IsotropicMedium

_C = np.diag([0.0, 2.0, 2.0])


def _pack(Y, Z):
    return np.concatenate([Y.real.ravel(), Y.imag.ravel(), Z.real.ravel(), Z.imag.ravel()])

def _unpack(state):
    parts = state.reshape(4, 3, 3)
    return parts[0] + 1j * parts[1], parts[2] + 1j * parts[3]


class RiccatiEvolution:
    """Sampled Y/Z solution with derived H and its invariants.

    Attributes
    ----------
    tau : (n,) grid covering the requested interval
    Y, Z : (n, 3, 3) complex samples
    H : (n, 3, 3) complex, H = Z Y^-1 per sample
    C : the constant matrix diag(0, 2, 2)
    D : the coefficient callable the evolution was built from
    """

    def __init__(self, tau, Y, Z, D, tau0):
        self.tau = np.asarray(tau, dtype=float)
        self.Y = np.asarray(Y, dtype=complex)
        self.Z = np.asarray(Z, dtype=complex)
        self.C = _C.copy()
        self.D = D
        self.tau0 = float(tau0)

        self.condition_numbers = np.array([np.linalg.cond(y) for y in self.Y])
        if not np.all(np.isfinite(self.condition_numbers)):
            raise RiccatiPositivityError("Y became singular along the evolution")
        self.H = np.array([z @ np.linalg.inv(y) for y, z in zip(self.Y, self.Z)])

        im_eigs = np.array([np.linalg.eigvalsh(0.5j * (h.conj().T - h)) for h in self.H])
        self.min_im_eigenvalue = float(np.min(im_eigs))
        if self.min_im_eigenvalue <= 1e-12:
            raise RiccatiPositivityError(
                "positivity of Im H lost along the evolution "
                f"(smallest eigenvalue {self.min_im_eigenvalue:.3e}); "
                "this indicates an invalid coefficient matrix or integration failure"
            )

        self._Y_spline = CubicSpline(self.tau, self.Y, axis=0)
        self._Z_spline = CubicSpline(self.tau, self.Z, axis=0)

        # continuous branch of det Y: unwrap the argument along the grid,
        # anchored to the principal value at the sample nearest tau0
        dets = np.linalg.det(self.Y)
        angles = np.angle(dets)
        unwrapped = np.unwrap(angles)
        jumps = np.abs(np.diff(unwrapped))
        if jumps.size and np.max(jumps) > 0.9 * np.pi:
            raise BranchTrackingError(
                "det Y rotates too fast for branch tracking on this grid "
                f"(largest step {np.max(jumps):.3f} rad); refine the grid"
            )
        k0 = int(np.argmin(np.abs(self.tau - self.tau0)))
        unwrapped -= unwrapped[k0] - angles[k0]
        self._det_angle = CubicSpline(self.tau, unwrapped)
        self._det_logabs = CubicSpline(self.tau, np.log(np.abs(dets)))

    # sampled-invariant diagnostics --------------------------------------

    def conservation_values(self):
        im_h = (self.H - np.swapaxes(self.H, -1, -2).conj()) / 2j
        det_im = np.linalg.det(im_h).real
        return det_im * np.abs(np.linalg.det(self.Y)) ** 2

    def conservation_defect(self) -> float:
        vals = self.conservation_values()
        c0 = vals[int(np.argmin(np.abs(self.tau - self.tau0)))]
        return float(np.max(np.abs(vals - c0)) / abs(c0))

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.H - np.swapaxes(self.H, -1, -2))))

    # interpolated accessors ---------------------------------------------

    def Y_at(self, tau):
        return self._Y_spline(tau)

    def Z_at(self, tau):
        return self._Z_spline(tau)

    def H_at(self, tau):
        return self.Z_at(tau) @ np.linalg.inv(self.Y_at(tau))

    def det_sqrt_inv(self, tau):
        """det(Y(tau))^-1/2 on the branch continuous along the evolution."""
        log_det = self._det_logabs(tau) + 1j * self._det_angle(tau)
        return np.exp(-0.5 * log_det)


def evolve_yz(
    D,
    Y0,
    H0,
    interval,
    tau0: float = 0.0,
    *,
    rtol: float = 1e-11,
    atol: float = 1e-13,
    n_grid: int = 2001,
) -> RiccatiEvolution:
    """Evolve Y' = CZ, Z' = -DY from Y(tau0) = Y0, Z(tau0) = H0 Y0.

    ``interval`` is the (lo, hi) range to cover; tau0 may sit anywhere inside
    it.  The result carries dense samples on an n_grid-point grid and the
    derived H, with all structural invariants checked at construction time.
    """
    lo, hi = (float(interval[0]), float(interval[1]))
    if not lo <= tau0 <= hi:
        raise ValueError(f"tau0 = {tau0} must lie inside the interval [{lo}, {hi}]")
    Y0 = np.asarray(Y0, dtype=complex).reshape(3, 3)
    H0 = np.asarray(H0, dtype=complex).reshape(3, 3)
    if abs(np.linalg.det(Y0)) < 1e-300:
        raise ValueError("Y0 must be nonsingular")
    if np.max(np.abs(H0 - H0.T)) > 1e-8:
        raise ValueError("H0 must be symmetric")
    im0 = (H0 - H0.conj().T) / 2j
    if np.min(np.linalg.eigvalsh(im0)) <= 0:
        raise ValueError("Im H0 must be positive definite")

    Z0 = H0 @ Y0
    state0 = _pack(Y0, Z0)

    def rhs(tau, state):
        Y, Z = _unpack(state)
        Dt = np.asarray(D(tau), dtype=complex)
        return _pack(_C @ Z, -Dt @ Y)

    solutions = []
    for end in (hi, lo):
        if math.isclose(end, tau0, abs_tol=1e-15):
            continue
        sol = solve_ivp(
            rhs,
            (tau0, end),
            state0,
            method="DOP853",
            dense_output=True,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise RiccatiPositivityError(f"integration failed toward tau={end}: {sol.message}")
        solutions.append((min(tau0, end), max(tau0, end), sol.sol))

    tau_grid = np.linspace(lo, hi, n_grid)

    def state_at(tau):
        if math.isclose(tau, tau0, abs_tol=1e-15):
            return state0
        for seg_lo, seg_hi, dense in solutions:
            if seg_lo - 1e-12 <= tau <= seg_hi + 1e-12:
                return dense(np.clip(tau, seg_lo, seg_hi))
        raise ValueError(f"tau={tau} not covered")

    Ys = np.empty((n_grid, 3, 3), dtype=complex)
    Zs = np.empty((n_grid, 3, 3), dtype=complex)
    for i, tau in enumerate(tau_grid):
        Ys[i], Zs[i] = _unpack(state_at(tau))
    return RiccatiEvolution(tau_grid, Ys, Zs, D, tau0)


class DCoefficient:
    """The curvature coefficient D(tau) of a traced ray.

    Callable on scalar tau; ``tau_range`` is the full parameter range covered
    by the underlying path (tau = sqrt(2) s on the axis).
    """

    def __init__(self, path: GeodesicPath, frame: ParallelFrame, m: IsotropicMedium):
        self.path = path
        self.frame = frame
        self.m = m
        root2 = math.sqrt(2.0)
        self.tau_range = (root2 * path.s[0], root2 * path.s[-1])

    def curvature(self, tau):
        """The 2x2 transverse curvature block K at parameter tau."""
        s = float(tau) / math.sqrt(2.0)
        x = self.path.position(s)
        v = self.path.velocity(s)
        c = float(self.m.wavespeed(x, self.path.mode))
        grad = self.m.wavespeed_gradient(x, self.path.mode)
        hess = self.m.wavespeed_hessian(x, self.path.mode)
        that = v / np.linalg.norm(v)
        n2 = self.frame.e2(s) / c
        n3 = self.frame.e3(s) / c
        c_tt = float(that @ hess @ that)
        N = np.stack([n2, n3], axis=1)
        c_ab = N.T @ hess @ N
        return c * (c_tt * np.eye(2) + c_ab) - float(grad @ grad) * np.eye(2)

    def __call__(self, tau):
        D = np.zeros((3, 3))
        D[1:, 1:] = 0.25 * self.curvature(tau)
        return D


def build_D_along_ray(path: GeodesicPath, frame: ParallelFrame, m: IsotropicMedium) -> DCoefficient:
    return DCoefficient(path, frame, m)
