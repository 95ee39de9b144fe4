"""Convex computational domains (balls and axis-aligned ellipsoids)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .medium import IsotropicMedium, WaveMode


@dataclass(frozen=True)
class ConvexDomain:
    """An ellipsoid {x : |A^-1 (x - center)|^2 < 1} with A = diag(semi_axes).

    The defining function b(x) = |A^-1 (x - center)|^2 - 1 is negative inside,
    zero on the boundary, and has nonvanishing gradient near the boundary.
    """

    center: np.ndarray
    semi_axes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "semi_axes", np.asarray(self.semi_axes, dtype=float).reshape(3))
        if np.any(self.semi_axes <= 0):
            raise ValueError("semi-axes must be positive")

    # defining function and its derivatives -------------------------------

    def b(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.semi_axes
        return np.sum(u * u, axis=-1) - 1.0

    def grad_b(self, x):
        return 2.0 * (np.asarray(x, dtype=float) - self.center) / self.semi_axes**2

    def hess_b(self):
        return np.diag(2.0 / self.semi_axes**2)

    def contains(self, x):
        return self.b(x) < 0

    def outward_normal(self, x):
        g = self.grad_b(x)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    @property
    def bounding_radius(self) -> float:
        return float(np.max(self.semi_axes))

    # samplers and quadratures --------------------------------------------

    def boundary_points(self, n: int):
        """n quasi-uniform boundary points (Fibonacci lattice on the sphere)."""
        i = np.arange(n) + 0.5
        cos_th = 1.0 - 2.0 * i / n
        sin_th = np.sqrt(np.clip(1.0 - cos_th**2, 0.0, None))
        phi = np.pi * (1.0 + np.sqrt(5.0)) * i
        u = np.stack([sin_th * np.cos(phi), sin_th * np.sin(phi), cos_th], axis=-1)
        return self.center + self.semi_axes * u

    def volume_quadrature(self, order: int):
        """Product Gauss rule over the ellipsoid; returns (points, weights)."""
        xr, wr = np.polynomial.legendre.leggauss(order)
        r = 0.5 * (xr + 1.0)          # radial nodes on (0, 1)
        wr = 0.5 * wr * r**2          # r^2 from the spherical volume element
        mu, wmu = np.polynomial.legendre.leggauss(order)   # mu = cos(theta)
        nphi = 2 * order
        phi = 2.0 * np.pi * np.arange(nphi) / nphi
        wphi = np.full(nphi, 2.0 * np.pi / nphi)

        R, MU, PHI = np.meshgrid(r, mu, phi, indexing="ij")
        SIN = np.sqrt(np.clip(1.0 - MU**2, 0.0, None))
        u = np.stack([SIN * np.cos(PHI), SIN * np.sin(PHI), MU], axis=-1)
        pts = self.center + self.semi_axes * (R[..., None] * u)
        w = (
            wr[:, None, None] * wmu[None, :, None] * wphi[None, None, :]
        ) * float(np.prod(self.semi_axes))
        return pts.reshape(-1, 3), w.reshape(-1)

    def surface_quadrature(self, order: int):
        """Quadrature on the boundary; returns (points, weights, normals)."""
        mu, wmu = np.polynomial.legendre.leggauss(order)
        nphi = 2 * order
        phi = 2.0 * np.pi * np.arange(nphi) / nphi
        wphi = np.full(nphi, 2.0 * np.pi / nphi)
        MU, PHI = np.meshgrid(mu, phi, indexing="ij")
        SIN = np.sqrt(np.clip(1.0 - MU**2, 0.0, None))
        u = np.stack([SIN * np.cos(PHI), SIN * np.sin(PHI), MU], axis=-1)
        pts = self.center + self.semi_axes * u
        # surface element of x = c + A*u(sphere): det(A) |A^-1 u| d(sphere)
        ainv_u = u / self.semi_axes
        stretch = np.linalg.norm(ainv_u, axis=-1)
        w = (wmu[:, None] * wphi[None, :]) * float(np.prod(self.semi_axes)) * stretch
        normals = ainv_u / stretch[..., None]
        return pts.reshape(-1, 3), w.reshape(-1), normals.reshape(-1, 3)


def ball(center, radius: float) -> ConvexDomain:
    return ConvexDomain(center, (radius, radius, radius))


def ellipsoid(semi_axes, center=(0.0, 0.0, 0.0)) -> ConvexDomain:
    return ConvexDomain(center, semi_axes)


def check_convexity(dom: ConvexDomain, m: IsotropicMedium, mode: WaveMode, n_samples: int = 256) -> bool:
    """Sample a necessary condition for strict boundary convexity in c^-2 ds^2.

    At each sampled boundary point the Euclidean shape operator plus the
    conformal correction (grad c . nu)/c must be positive definite on the
    tangent plane.  A failed sample only warns — the condition is an input
    assumption, not something this toolkit enforces.
    """
    pts = dom.boundary_points(n_samples)
    hess = dom.hess_b()
    worst = np.inf
    for x in pts:
        g = dom.grad_b(x)
        nu = g / np.linalg.norm(g)
        # orthonormal tangent pair at x
        a = np.array([1.0, 0.0, 0.0]) if abs(nu[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        t1 = np.cross(nu, a)
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(nu, t1)
        T = np.stack([t1, t2], axis=1)
        shape_op = T.T @ hess @ T / np.linalg.norm(g)
        c = float(m.wavespeed(x, mode))
        corr = float(m.wavespeed_gradient(x, mode) @ nu) / c
        margin = float(np.min(np.linalg.eigvalsh(shape_op + corr * np.eye(2))))
        worst = min(worst, margin)
    if worst <= 0:
        warnings.warn(
            f"boundary may not be strictly convex for mode {mode.value}: "
            f"worst sampled margin {worst:.3e}",
            stacklevel=2,
        )
        return False
    return True
