"""Least-squares recovery of moduli from shear-shear-compressional amplitudes.

The normalized interaction amplitudes depend on the moduli at the meeting
point only through three density-weighted combinations

    k1 = rho^(-3/2) (lam + B),
    k2 = rho^(-3/2) (4 mu + A),
    k3 = rho^(-3/2) (2 mu + 2 B + A),

and on the geometry through simple angle functions.  Sweeping the opening
angle with plane-normal polarizations is a two-parameter linear fit for
(k1, k2); sweeping the in-plane polarization angle with the first sum
pinned is a one-parameter fit for k3.  Knowing both wavespeeds then turns
the combination k1 + (k2 - k3)/2 = rho^(-3/2) (lam + mu) into the density
itself, after which the individual moduli unwind one by one.  The
third-order modulus C never enters any of these amplitudes and is left
undetermined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateConfigError, InconsistentDataError, RankDeficientError
from .interaction import amplitude_A, build_ssp_directions, combination_ratio
from .medium import IsotropicMedium, WaveMode


@dataclass(frozen=True)
class SweepSample:
    """One normalized amplitude measurement at a sweep angle."""

    angle: float
    value: float
    kind: str  # "PERP" or "INPLANE"

    def __post_init__(self):
        if not 0.0 < self.angle < math.pi:
            raise ValueError(f"sweep angle must lie in (0, pi), got {self.angle}")
        if self.kind not in ("PERP", "INPLANE"):
            raise ValueError(f"kind must be 'PERP' or 'INPLANE', got {self.kind!r}")


@dataclass(frozen=True)
class RecoveredModuli:
    """Recovered combinations and moduli; C is not determined by this data."""

    k1: float
    k2: float
    k3: float
    lam: float
    mu: float
    rho: float
    modA: float
    modB: float
    modC: None = None
    psi_residual: Optional[float] = None
    alpha_residual: Optional[float] = None
    psi_condition: Optional[float] = None

    def summary(self) -> str:
        lines = [
            f"k1 = {self.k1:.12g}",
            f"k2 = {self.k2:.12g}",
            f"k3 = {self.k3:.12g}",
            f"lam = {self.lam:.12g}",
            f"mu = {self.mu:.12g}",
            f"rho = {self.rho:.12g}",
            f"modA = {self.modA:.12g}",
            f"modB = {self.modB:.12g}",
            "modC = not determined by this pipeline",
        ]
        return "\n".join(lines)


class PsiFit(NamedTuple):
    k1: float
    k2: float
    residual: float
    condition: float


class AlphaFit(NamedTuple):
    k3: float
    residual: float


def angle_basis(psi: float, cP: float, cS: float):
    """The two basis functions (f1, f2) of the opening-angle sweep."""
    a = combination_ratio(psi, cP, cS)
    f1 = a + math.cos(psi)
    f2 = (1.0 + a * math.cos(psi)) * math.cos(psi)
    return f1, f2


def fit_psi_sweep(samples: Sequence[SweepSample], cP: float, cS: float) -> PsiFit:
    """Linear least squares for (k1, k2) from plane-normal-polarization data.

    Each sample value is modeled as k1 * f1(psi) + (k2/2) * f2(psi).  Needs
    at least two distinct angles; the design-matrix condition number is
    returned alongside the max-abs residual.
    """
    samples = list(samples)
    if any(s.kind != "PERP" for s in samples):
        raise ValueError("fit_psi_sweep expects PERP samples")
    angles = np.array([s.angle for s in samples])
    if len(np.unique(np.round(angles, 14))) < 2:
        raise RankDeficientError(
            "need at least two distinct opening angles; spread the sweep"
        )
    values = np.array([s.value for s in samples])
    design = np.array([angle_basis(p, cP, cS) for p in angles])
    design[:, 1] *= 0.5  # second unknown is k2 itself
    coef, _, rank, sv = np.linalg.lstsq(design, values, rcond=None)
    if rank < 2:
        raise RankDeficientError(
            "opening-angle design matrix is rank deficient; choose angles "
            "with more spread"
        )
    residual = float(np.max(np.abs(design @ coef - values)))
    condition = float(sv[0] / sv[-1])
    return PsiFit(k1=float(coef[0]), k2=float(coef[1]), residual=residual, condition=condition)


def fit_alpha_sweep(samples: Sequence[SweepSample], k_sum: float) -> AlphaFit:
    """Least squares for k3 from in-plane-polarization data.

    With k_sum = k1 + k2/2 pinned from the opening-angle fit, each value is
    modeled as k_sum * cos^2(alpha) - (k3/2) * sin^2(alpha); at least one
    sample needs sin^2(alpha) > 0 to identify k3.
    """
    samples = list(samples)
    if not samples:
        raise RankDeficientError("no in-plane samples given")
    if any(s.kind != "INPLANE" for s in samples):
        raise ValueError("fit_alpha_sweep expects INPLANE samples")
    angles = np.array([s.angle for s in samples])
    values = np.array([s.value for s in samples])
    sin2 = np.sin(angles) ** 2
    if np.max(sin2) < 1e-14:
        raise RankDeficientError(
            "all in-plane samples sit at zero polarization angle; k3 is "
            "unidentifiable there"
        )
    target = k_sum * np.cos(angles) ** 2 - values
    half_k3 = float(np.dot(target, sin2) / np.dot(sin2, sin2))
    residual = float(np.max(np.abs(half_k3 * sin2 - target)))
    return AlphaFit(k3=2.0 * half_k3, residual=residual)


def assemble_parameters(k1: float, k2: float, k3: float, cP: float, cS: float) -> RecoveredModuli:
    """Unwind (k1, k2, k3) plus both wavespeeds into the five moduli.

    k1 + (k2 - k3)/2 equals rho^(-3/2) (lam + mu), and (lam + mu)/rho is
    cP^2 - cS^2, which pins rho; the rest follows by substitution.
    """
    if not 0.0 < cS < cP:
        raise InconsistentDataError(f"need 0 < cS < cP, got cS={cS}, cP={cP}")
    combo = k1 + (k2 - k3) / 2.0
    if combo <= 0.0:
        raise InconsistentDataError(
            f"k1 + (k2 - k3)/2 = {combo} must be positive for an admissible medium"
        )
    speed_gap = cP * cP - cS * cS
    rho = (speed_gap / combo) ** 2
    mu = rho * cS * cS
    lam = rho * (cP * cP - 2.0 * cS * cS)
    rho32 = rho ** 1.5
    modB = k1 * rho32 - lam
    modA = k2 * rho32 - 4.0 * mu
    check = (lam + mu) / rho32
    if abs(check - combo) > 1e-9 * max(abs(combo), 1.0):
        raise InconsistentDataError("internal identity check failed during assembly")
    return RecoveredModuli(k1=k1, k2=k2, k3=k3, lam=lam, mu=mu, rho=rho, modA=modA, modB=modB)


def inplane_angle_of_opening(psi: float, cP: float, cS: float) -> float:
    """Polarization rotation angle produced by opening angle psi."""
    a = combination_ratio(psi, cP, cS)
    denom = math.sqrt(a * a + 2.0 * a * math.cos(psi) + 1.0)
    return math.acos(max(-1.0, min(1.0, (a + math.cos(psi)) / denom)))


def inplane_psi_for_alpha(alpha: float, cP: float, cS: float) -> float:
    """Invert the opening-angle -> rotation-angle map on its rising branch.

    The rotation angle vanishes at both ends of (0, pi) and has a single
    interior maximum; requests beyond that maximum are rejected.
    """
    if alpha <= 0.0:
        raise ValueError("target rotation angle must be positive")
    peak = minimize_scalar(
        lambda p: -inplane_angle_of_opening(p, cP, cS),
        bounds=(1e-6, math.pi - 1e-6),
        method="bounded",
    )
    psi_peak = float(peak.x)
    alpha_max = -float(peak.fun)
    if alpha >= alpha_max:
        raise DegenerateConfigError(
            f"rotation angle {alpha} is unreachable; the maximum for these "
            f"wavespeeds is {alpha_max:.6f}"
        )
    return float(
        brentq(
            lambda p: inplane_angle_of_opening(p, cP, cS) - alpha,
            1e-9,
            psi_peak,
            xtol=1e-14,
        )
    )


def _synthesize_samples(mod, cP, cS, psi_grid, alpha_grid):
    """Noiseless normalized amplitudes for both sweeps at a single point."""
    rho32 = mod.rho ** 1.5
    e_out = np.array([0.0, 0.0, 1.0])
    psi_samples = []
    for psi in psi_grid:
        e_in = np.array([math.sin(psi), 0.0, math.cos(psi)])
        cfg = build_ssp_directions(e_in, e_out, cP, cS, "PERP")
        _, scaled = amplitude_A(cfg, mod)
        psi_samples.append(SweepSample(angle=psi, value=scaled.real / rho32, kind="PERP"))
    alpha_samples = []
    for alpha in alpha_grid:
        psi = inplane_psi_for_alpha(alpha, cP, cS)
        e_in = np.array([math.sin(psi), 0.0, math.cos(psi)])
        cfg = build_ssp_directions(e_in, e_out, cP, cS, "INPLANE")
        _, scaled = amplitude_A(cfg, mod)
        alpha_samples.append(
            SweepSample(angle=cfg.alpha, value=scaled.real / rho32, kind="INPLANE")
        )
    return psi_samples, alpha_samples


def end_to_end_recover(m_true: IsotropicMedium, x0, psi_grid, alpha_grid):
    """Synthesize sweep data from a medium at a point, fit, and compare.

    Returns (RecoveredModuli, report); the report carries the recovered
    values, the absolute errors against the true moduli at x0, the fit
    diagnostics, and an explicit marker that C is not determined.
    """
    x0 = np.asarray(x0, dtype=float).reshape(3)
    mod = m_true.moduli_at(x0)
    cP = m_true.wavespeed(x0, WaveMode.P)
    cS = m_true.wavespeed(x0, WaveMode.S)

    psi_samples, alpha_samples = _synthesize_samples(mod, cP, cS, psi_grid, alpha_grid)
    psi_fit = fit_psi_sweep(psi_samples, cP, cS)
    alpha_fit = fit_alpha_sweep(alpha_samples, psi_fit.k1 + psi_fit.k2 / 2.0)
    recovered = assemble_parameters(psi_fit.k1, psi_fit.k2, alpha_fit.k3, cP, cS)
    recovered = replace(
        recovered,
        psi_residual=psi_fit.residual,
        alpha_residual=alpha_fit.residual,
        psi_condition=psi_fit.condition,
    )

    report = {
        "point": x0.tolist(),
        "cP": float(cP),
        "cS": float(cS),
        "k1": float(recovered.k1),
        "k2": float(recovered.k2),
        "k3": float(recovered.k3),
        "recovered": {
            "lam": float(recovered.lam),
            "mu": float(recovered.mu),
            "rho": float(recovered.rho),
            "modA": float(recovered.modA),
            "modB": float(recovered.modB),
            "modC": "not determined by this pipeline",
        },
        "errors": {
            "lam": float(abs(recovered.lam - mod.lam)),
            "mu": float(abs(recovered.mu - mod.mu)),
            "rho": float(abs(recovered.rho - mod.rho)),
            "modA": float(abs(recovered.modA - mod.modA)),
            "modB": float(abs(recovered.modB - mod.modB)),
        },
        "residuals": {
            "psi_sweep": psi_fit.residual,
            "alpha_sweep": alpha_fit.residual,
        },
        "conditioning": {"psi_design": psi_fit.condition},
        "samples": {
            "psi": [(s.angle, s.value) for s in psi_samples],
            "alpha": [(s.angle, s.value) for s in alpha_samples],
        },
    }
    return recovered, report
