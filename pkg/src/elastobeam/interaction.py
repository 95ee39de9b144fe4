"""Quadratic elastic interaction: source tensor, density, and S-S-P setups.

The quadratic part of the isotropic stress with third-order moduli A, B, C
(Landau convention) turns a pair of displacement gradients into a 3x3 source
tensor G; contracting a third gradient against G gives the scalar
interaction density.  Gradients are stored as g[m, n] = d u_m / d x_n and
every operation broadcasts over leading batch axes.

On top of the algebra the module builds the collinear-in-law geometry of two
shear waves merging into one compressional wave: given unit propagation
directions for the first shear wave and the compressional wave, the second
shear direction is fixed by frequency matching, and two canonical
polarization choices (both shear polarizations normal to the interaction
plane, or both rotated in plane) produce interaction amplitudes with short
closed forms.  Those closed forms are what the recovery module fits; the
density route here is the independent way to compute the same numbers.

Finally, the module carries a direct numerical check of the whole pipeline:
three explicit Gaussian beams in a constant medium, phase-matched so their
oscillations cancel along a common spacetime line, integrated against the
interaction density over a 4-d box.  The integral's large-frequency limit is
proportional to the closed-form amplitude, which makes ratios across moduli
sets a self-contained consistency probe.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .domain import ConvexDomain
from .errors import DegenerateConfigError, InconsistentDataError
from .medium import IsotropicMedium, Moduli

_EYE = np.eye(3)


def _mT(g):
    return np.swapaxes(g, -1, -2)


def _frob(a, b):
    return np.sum(a * b, axis=(-1, -2))


def _frob_t(a, b):
    # sum_mn a[m,n] b[n,m] = tr(a @ b)
    return np.einsum("...mn,...nm->...", a, b)


def quadratic_source_G(grad_u1, grad_u2, mod) -> np.ndarray:
    """The symmetric-in-inputs quadratic source tensor G(grad_u1, grad_u2).

    Conventions: gradients are g[m, n] = d u_m / d x_n; ``mod`` supplies lam,
    mu and the third-order moduli modA, modB, modC (scalars or arrays
    broadcasting over the batch axes of the gradients).
    """
    g1 = np.asarray(grad_u1)
    g2 = np.asarray(grad_u2)
    lam, mu = mod.lam, mod.mu
    a, b, c = mod.modA, mod.modB, mod.modC

    tr1 = np.trace(g1, axis1=-2, axis2=-1)[..., None, None]
    tr2 = np.trace(g2, axis1=-2, axis2=-1)[..., None, None]
    lam_b = np.asarray(lam + b)[..., None, None]
    b_ = np.asarray(b)[..., None, None]
    a4 = np.asarray(a / 4.0)[..., None, None]
    mu_a4 = np.asarray(mu + a / 4.0)[..., None, None]
    c2 = np.asarray(2.0 * c)[..., None, None]

    iso = (
        lam_b * _frob(g1, g2)[..., None, None]
        + c2 * (tr1 * tr2)
        + b_ * _frob_t(g1, g2)[..., None, None]
    ) * _EYE
    mixed_traces = b_ * (tr1 * _mT(g2) + tr2 * _mT(g1))
    products_t = a4 * (_mT(g1 @ g2) + _mT(g2 @ g1))
    scaled_sum = lam_b * (tr1 * g2 + tr2 * g1)
    pairings = mu_a4 * (
        _mT(g1) @ g2
        + _mT(g2) @ g1
        + g1 @ _mT(g2)
        + g2 @ _mT(g1)
        + g1 @ g2
        + g2 @ g1
    )
    return iso + mixed_traces + products_t + scaled_sum + pairings


def interaction_density(grad_u1, grad_u2, grad_u0, mod):
    """Scalar density: the contraction of G(grad_u1, grad_u2) with grad_u0.

    Computed directly from its seven-term expansion rather than by building
    G, so it can serve as an independent cross-check of the tensor route;
    the identity density = sum_ij G_ij * grad_u0[i, j] holds exactly.
    """
    g1 = np.asarray(grad_u1)
    g2 = np.asarray(grad_u2)
    g0 = np.asarray(grad_u0)
    lam, mu = mod.lam, mod.mu
    a, b, c = mod.modA, mod.modB, mod.modC

    div0 = np.trace(g0, axis1=-2, axis2=-1)
    div1 = np.trace(g1, axis1=-2, axis2=-1)
    div2 = np.trace(g2, axis1=-2, axis2=-1)

    out = (lam + b) * _frob(g1, g2) * div0
    out = out + 2.0 * c * div1 * div2 * div0
    out = out + b * _frob_t(g1, g2) * div0
    out = out + b * (div1 * _frob_t(g2, g0) + div2 * _frob_t(g1, g0))
    out = out + (a / 4.0) * (
        np.einsum("...jm,...mi,...ij->...", g1, g2, g0)
        + np.einsum("...jm,...mi,...ij->...", g2, g1, g0)
    )
    out = out + (lam + b) * (div1 * _frob(g2, g0) + div2 * _frob(g1, g0))
    out = out + (mu + a / 4.0) * (
        np.einsum("...mi,...mj,...ij->...", g1, g2, g0)
        + np.einsum("...mi,...mj,...ij->...", g2, g1, g0)
        + np.einsum("...im,...jm,...ij->...", g1, g2, g0)
        + np.einsum("...im,...jm,...ij->...", g2, g1, g0)
        + np.einsum("...im,...mj,...ij->...", g1, g2, g0)
        + np.einsum("...im,...mj,...ij->...", g2, g1, g0)
    )
    return out


def normal_dot_G(G, nu):
    """(nu . G)_i = G_ij nu_j."""
    return np.einsum("...ij,...j->...i", G, nu)


def divergence_identity_check(v1, v2, v0, m: IsotropicMedium, dom: ConvexDomain,
                              order: int = 8, fd_step: float = 1e-2) -> float:
    """Residual of the integration-by-parts identity tying G to its density.

    Each field is a pair (value, jacobian) of vectorized callables with
    value(x) -> (..., 3) and jacobian(x) -> (..., 3, 3), jac[m, n] = d v_m /
    d x_n.  The volume integral of the density must equal the boundary flux
    of G against v0 minus the volume integral of (div G) . v0; the returned
    residual is the defect relative to the largest of the three terms.  The
    row divergence of G is taken by fourth-order finite differencing, which
    is effectively exact for polynomial data.
    """
    val1, jac1 = v1
    val2, jac2 = v2
    val0, jac0 = v0

    def moduli_at(pts):
        return Moduli(
            lam=np.asarray(m.lam.value(pts)),
            mu=np.asarray(m.mu.value(pts)),
            rho=np.asarray(m.rho.value(pts)),
            modA=np.asarray(m.modA.value(pts)),
            modB=np.asarray(m.modB.value(pts)),
            modC=np.asarray(m.modC.value(pts)),
        )

    def G_at(pts):
        return quadratic_source_G(jac1(pts), jac2(pts), moduli_at(pts))

    vol_pts, vol_w = dom.volume_quadrature(order)
    density = interaction_density(jac1(vol_pts), jac2(vol_pts), jac0(vol_pts), moduli_at(vol_pts))
    bulk = float(np.sum(vol_w * density))

    # row divergence of G by the 4th-order central stencil
    h = fd_step
    div_G = np.zeros(vol_pts.shape[:-1] + (3,))
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        acc = (
            G_at(vol_pts - 2 * step)
            - 8.0 * G_at(vol_pts - step)
            + 8.0 * G_at(vol_pts + step)
            - G_at(vol_pts + 2 * step)
        ) / (12.0 * h)
        div_G += acc[..., :, j]
    drain = float(np.sum(vol_w * np.sum(div_G * val0(vol_pts), axis=-1)))

    surf_pts, surf_w, surf_nu = dom.surface_quadrature(order)
    flux_density = np.sum(normal_dot_G(G_at(surf_pts), surf_nu) * val0(surf_pts), axis=-1)
    flux = float(np.sum(surf_w * flux_density))

    scale = max(abs(bulk), abs(drain), abs(flux), 1e-300)
    return abs(bulk + drain - flux) / scale


# -- S-S-P direction geometry ---------------------------------------------


def _unit(v, what):
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if n < 1e-300:
        raise ValueError(f"{what} must be a nonzero vector")
    return v / n


def _any_perp(v):
    seed = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    p = np.cross(v, seed)
    return p / np.linalg.norm(p)


@dataclass(frozen=True)
class InteractionConfig:
    """A frequency-matched two-shear/one-compressional direction setup.

    ``xi2_raw`` is the exact matched combination ratio * xi1 + xi0 (length
    (cP - ratio cS)/cS); ``xi2`` is its unit rescaling.  ``alpha1``/``alpha2``
    are the shear polarizations of the chosen kind, ``psi`` the angle between
    xi1 and xi0, ``alpha`` the angle between xi2 and xi1.
    """

    kind: str
    xi1: np.ndarray
    xi0: np.ndarray
    xi2_raw: np.ndarray
    xi2: np.ndarray
    ratio: float
    psi: float
    alpha: float
    alpha1: np.ndarray
    alpha2: np.ndarray
    cP: float
    cS: float


def combination_ratio(psi: float, cP: float, cS: float) -> float:
    """The frequency-matching ratio a(psi) of the first shear wave."""
    return (cP * cP - cS * cS) / (2.0 * (cS * cS * math.cos(psi) + cS * cP))


def build_ssp_directions(xi1, xi0, cP: float, cS: float, kind: str = "PERP") -> InteractionConfig:
    """Complete (xi1, xi0) into a full S-S-P interaction configuration.

    The second shear direction is ratio * xi1 + xi0 with the ratio fixed by
    frequency matching; the construction verifies the resulting null
    condition to 1e-12.  ``kind`` selects the polarization pair: "PERP" puts
    both shear polarizations along the normal of the interaction plane,
    "INPLANE" rotates each propagation direction by a quarter turn inside
    the plane (undefined for collinear inputs).
    """
    if not 0.0 < cS < cP:
        raise ValueError(f"wavespeeds must satisfy 0 < cS < cP, got cS={cS}, cP={cP}")
    if kind not in ("PERP", "INPLANE"):
        raise ValueError(f"kind must be 'PERP' or 'INPLANE', got {kind!r}")
    xi1 = _unit(xi1, "xi1")
    xi0 = _unit(xi0, "xi0")
    cos_psi = float(np.clip(xi1 @ xi0, -1.0, 1.0))
    psi = math.acos(cos_psi)
    ratio = combination_ratio(psi, cP, cS)
    xi2_raw = ratio * xi1 + xi0

    lhs = (ratio * cS - cP) ** 2
    rhs = cS * cS * float(xi2_raw @ xi2_raw)
    if abs(lhs - rhs) > 1e-12 * max(lhs, 1.0):
        raise InconsistentDataError(
            f"frequency-matching null condition violated: {lhs} vs {rhs}"
        )
    xi2 = xi2_raw / np.linalg.norm(xi2_raw)
    alpha = math.acos(float(np.clip(xi2 @ xi1, -1.0, 1.0)))

    plane_normal = np.cross(xi0, xi1)
    norm_n = np.linalg.norm(plane_normal)
    if kind == "PERP":
        pol = plane_normal / norm_n if norm_n > 1e-12 else _any_perp(xi1)
        alpha1 = pol
        alpha2 = pol
    else:
        if norm_n < 1e-10:
            raise DegenerateConfigError(
                "in-plane polarizations are undefined for collinear directions"
            )
        n = plane_normal / norm_n
        alpha1 = np.cross(n, xi1)
        alpha2 = np.cross(n, xi2)
    return InteractionConfig(
        kind=kind,
        xi1=xi1,
        xi0=xi0,
        xi2_raw=xi2_raw,
        xi2=xi2,
        ratio=ratio,
        psi=psi,
        alpha=alpha,
        alpha1=alpha1,
        alpha2=alpha2,
        cP=cP,
        cS=cS,
    )


def amplitude_A(config: InteractionConfig, mod, normalizers=(1.0, 1.0, 1.0)):
    """The interaction amplitude of a configuration at a point.

    Returns (value, scaled): ``scaled`` is the pure direction/moduli part —
    the interaction density of the three rank-one gradients — and ``value``
    divides out the beam normalizers (the det-Y factors of the three beams)
    together with the speed and density powers cP^(5/2) cS^5 rho^(3/2).
    """
    xi2 = config.xi2_raw if config.kind == "PERP" else config.xi2
    g1 = np.outer(config.alpha1, config.xi1)
    g2 = np.outer(config.alpha2, xi2)
    g0 = np.outer(config.xi0, config.xi0)
    scaled = complex(interaction_density(g1, g2, g0, mod))
    closed = (
        perp_closed_form(config, mod)
        if config.kind == "PERP"
        else inplane_closed_form(config, mod)
    )
    gap = abs(scaled - closed)
    if gap > 1e-9 * max(1.0, abs(closed)):
        raise InconsistentDataError(
            "density route and closed form disagree: "
            f"{scaled!r} vs {closed!r} (gap {gap:.3e})"
        )
    n1, n2, n0 = normalizers
    denom = (
        complex(n1) * complex(n2) * complex(n0)
        * config.cP ** 2.5 * config.cS ** 5 * mod.rho ** 1.5
    )
    return scaled / denom, scaled


def perp_closed_form(config: InteractionConfig, mod) -> float:
    """Closed form of ``scaled`` for the PERP polarization choice."""
    dot12 = config.ratio + math.cos(config.psi)
    dot10 = math.cos(config.psi)
    dot20 = 1.0 + config.ratio * math.cos(config.psi)
    return (mod.lam + mod.modB) * dot12 + (2.0 * mod.mu + mod.modA / 2.0) * dot10 * dot20


def inplane_closed_form(config: InteractionConfig, mod) -> float:
    """Closed form of ``scaled`` for the INPLANE polarization choice."""
    ca2 = math.cos(config.alpha) ** 2
    sa2 = math.sin(config.alpha) ** 2
    return (mod.lam + 2.0 * mod.mu + mod.modB + mod.modA / 2.0) * ca2 - (
        mod.mu + mod.modB + mod.modA / 2.0
    ) * sa2


# -- direct oscillatory-integral verification -----------------------------


@dataclass(frozen=True)
class _SyntheticBeam:
    """Closed-form constant-medium beam data for the direct integral."""

    tangent: np.ndarray        # unit propagation direction
    n2: np.ndarray             # unit transverse frame
    n3: np.ndarray
    speed: float
    beta: float                # frequency multiplier
    conjugate: bool
    polarization: np.ndarray   # Cartesian amplitude direction

    def gradients(self, dt, dx, rho, varrho):
        """Field value and spatial gradient arrays at offsets (dt, dx)."""
        c = self.speed
        root2 = math.sqrt(2.0)
        s = (dx @ self.tangent) / c
        tau = (dt + s) / root2
        r = (-dt + s) / root2
        y2 = (dx @ self.n2) / c
        y3 = (dx @ self.n3) / c

        one = 1.0 + 2.0j * tau
        phi = r + 1.0j * (r * r + (y2 * y2 + y3 * y3) / one)
        amp_scale = (c * rho) ** -0.5
        a = amp_scale / one
        a_prime = -2.0j * amp_scale / (one * one)

        grad_tau = self.tangent / (root2 * c)
        grad_r = grad_tau
        grad_y2 = self.n2 / c
        grad_y3 = self.n3 / c

        grad_phi = (
            (1.0 + 2.0j * r)[..., None] * grad_r
            + (2.0j * (y2[..., None] * grad_y2 + y3[..., None] * grad_y3)) / one[..., None]
            - (2.0j * (y2 * y2 + y3 * y3) / (one * one))[..., None] * grad_tau
        )
        osc = np.exp(1j * self.beta * varrho * phi)
        value = (a * osc)[..., None] * self.polarization
        d_amp = (a_prime[..., None] * grad_tau + (a * 1j * self.beta * varrho)[..., None] * grad_phi) * osc[..., None]
        grad = self.polarization[:, None] * d_amp[..., None, :]
        if self.conjugate:
            return value.conj(), grad.conj()
        return value, grad

    def phase_rows(self):
        """Rows of the linearized (r, y2, y3) map on spacetime offsets."""
        c = self.speed
        root2 = math.sqrt(2.0)
        return np.array(
            [
                [-1.0 / root2, *(self.tangent / (root2 * c))],
                [0.0, *(self.n2 / c)],
                [0.0, *(self.n3 / c)],
            ]
        )


@dataclass(frozen=True)
class SSPBeamTriple:
    """Three phase-matched beams through a common point in a constant medium."""

    config: InteractionConfig
    point: np.ndarray
    rho: float
    beams: tuple
    delta: float


def build_ssp_beam_triple(m: IsotropicMedium, config: InteractionConfig, point,
                          delta: float = 4.0) -> SSPBeamTriple:
    """Assemble the three explicit beams whose linear phases cancel.

    Both shear beams enter conjugated; the first runs against xi1 with
    frequency multiplier sqrt(2) ratio cS, the second along xi2 with
    multiplier sqrt(2) (cP - ratio cS), the compressional beam along xi0
    with multiplier sqrt(2) cP.  The multipliers make the three linear
    spacetime phases sum to zero identically, so the common axis point is a
    stationary set of the product and the integral localizes there.
    """
    const = m.constant_values()
    if const is None:
        raise InconsistentDataError("the direct integral check needs a constant medium")
    cP = math.sqrt((const.lam + 2.0 * const.mu) / const.rho)
    cS = math.sqrt(const.mu / const.rho)
    if abs(cP - config.cP) > 1e-9 * cP or abs(cS - config.cS) > 1e-9 * cS:
        raise InconsistentDataError(
            "configuration wavespeeds do not match the medium "
            f"(config {config.cP}, {config.cS}; medium {cP}, {cS})"
        )

    root2 = math.sqrt(2.0)

    def frame_for(tangent):
        n2 = _any_perp(tangent)
        n3 = np.cross(tangent, n2)
        return n2, n3

    specs = (
        (-config.xi1, cS, root2 * config.ratio * cS, True, config.alpha1),
        (config.xi2, cS, root2 * (cP - config.ratio * cS), True, config.alpha2),
        (config.xi0, cP, root2 * cP, False, config.xi0),
    )
    beams = []
    for tangent, speed, beta, conj, pol in specs:
        tangent = _unit(tangent, "beam tangent")
        n2, n3 = frame_for(tangent)
        beams.append(
            _SyntheticBeam(
                tangent=tangent,
                n2=n2,
                n3=n3,
                speed=speed,
                beta=beta,
                conjugate=conj,
                polarization=np.asarray(pol, dtype=float),
            )
        )
    return SSPBeamTriple(
        config=config,
        point=np.asarray(point, dtype=float).reshape(3),
        rho=const.rho,
        beams=tuple(beams),
        delta=delta,
    )


def _simpson_weights(n: int, half_width: float):
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of points >= 3")
    h = 2.0 * half_width / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return np.linspace(-half_width, half_width, n), w * (h / 3.0)


def oscillatory_interaction_integral(
    triple: SSPBeamTriple,
    m: IsotropicMedium,
    dom: ConvexDomain,
    varrhos,
    moduli_sets=None,
    n_points: int = 57,
    half_width: float = 6.5,
):
    """Direct 4-d quadrature of the interaction density of the three beams.

    For each frequency the integration box is aligned with the eigenvectors
    of the Gaussian-decay quadratic form and scaled to ``half_width`` decay
    widths, then swept by a tensor Simpson rule.  Returns an array of shape
    (len(moduli_sets), len(varrhos)) — or (len(varrhos),) when no moduli
    sets are given — of the normalized values (total / (i * varrho)).

    The main cost is evaluating the three gradient fields; they are shared
    across moduli sets, so probing many third-order-moduli combinations is
    nearly free.
    """
    single = moduli_sets is None
    if single:
        moduli_sets = [m.constant_values()]
    varrhos = list(varrhos)

    # decay form of the integrand: sum_j beta_j (r_j^2 + y2_j^2 + y3_j^2)
    Q = np.zeros((4, 4))
    for beam in triple.beams:
        L = beam.phase_rows()
        Q += beam.beta * (L.T @ L)
    eigvals, eigvecs = np.linalg.eigh(Q)
    if np.min(eigvals) <= 0:
        raise DegenerateConfigError(
            "the decay form of the beam triple is not positive definite; "
            "the integral would not localize"
        )

    out = np.zeros((len(moduli_sets), len(varrhos)), dtype=complex)
    for iv, varrho in enumerate(varrhos):
        widths = half_width / np.sqrt(varrho * eigvals)
        axes = [_simpson_weights(n_points, w) for w in widths]

        # make sure the box sits inside the cutoff plateau and the domain
        corner_signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * 4)).reshape(4, -1).T
        corner_uv = corner_signs * np.array([a[0][-1] for a in axes])
        corner_st = corner_uv @ eigvecs.T  # (16, 4) spacetime offsets
        for beam in triple.beams:
            y2 = corner_st[:, 1:] @ beam.n2 / beam.speed
            y3 = corner_st[:, 1:] @ beam.n3 / beam.speed
            if np.max(np.hypot(y2, y3)) > 0.25 * triple.delta:
                raise ValueError(
                    "integration box exceeds the cutoff plateau; increase the "
                    "cutoff radius or the frequency"
                )
        if not bool(np.all(dom.contains(triple.point + corner_st[:, 1:]))):
            warnings.warn("integration box extends outside the domain", stacklevel=2)

        totals = np.zeros(len(moduli_sets), dtype=complex)
        nodes1, w1 = axes[0]
        grid234 = np.meshgrid(axes[1][0], axes[2][0], axes[3][0], indexing="ij")
        inner = np.stack([g.ravel() for g in grid234], axis=-1)  # (n^3, 3)
        w_inner = (
            axes[1][1][:, None, None] * axes[2][1][None, :, None] * axes[3][1][None, None, :]
        ).ravel()
        for k, u1 in enumerate(nodes1):
            uv = np.concatenate(
                [np.full((inner.shape[0], 1), u1), inner], axis=1
            )  # eigen-frame coords
            st = uv @ eigvecs.T
            dt = st[:, 0]
            dx = st[:, 1:]
            grads = []
            for beam in triple.beams:
                _, g = beam.gradients(dt, dx, triple.rho, varrho)
                grads.append(g)
            for im, mod in enumerate(moduli_sets):
                dens = interaction_density(grads[0], grads[1], grads[2], mod)
                totals[im] += w1[k] * np.sum(w_inner * dens)
        out[:, iv] = totals / (1j * varrho)
    if single:
        return out[0]
    return out
