"""Command-line front end: deterministic runs, JSON/CSV artifacts."""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from .beams import make_beam
from .domain import ball, ellipsoid
from .errors import ElastobeamError
from .fields import ConstantField, ExpressionField
from .geodesics import trace_geodesic
from .interaction import (
    amplitude_A,
    build_ssp_directions,
    divergence_identity_check,
    interaction_density,
    quadratic_source_G,
)
from .medium import IsotropicMedium, WaveMode, load_medium, validate_medium
from .recovery import end_to_end_recover, inplane_psi_for_alpha
from .reflection import (
    assemble_MP,
    solve_p_incidence,
    solve_s_incidence,
    traction_matrix,
    vertical_root,
)
from .riccati import evolve_yz


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _parse_triple(text: str, name: str) -> np.ndarray:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise click.UsageError(f"{name}: expected three comma-separated numbers, got {text!r}") from exc
    if len(parts) != 3:
        raise click.UsageError(f"{name}: expected three components, got {len(parts)}")
    return np.array(parts)


def _parse_domain(spec: str):
    kind, _, rest = spec.partition(":")
    try:
        if kind == "ball":
            vals = [float(p) for p in rest.split(",")]
            if len(vals) != 4:
                raise ValueError
            return ball(vals[:3], vals[3])
        if kind == "ellipsoid":
            axes_part, _, center_part = rest.partition("@")
            axes = [float(p) for p in axes_part.split(",")]
            if len(axes) != 3:
                raise ValueError
            center = [float(p) for p in center_part.split(",")] if center_part else (0.0, 0.0, 0.0)
            return ellipsoid(axes, center)
    except ValueError:
        pass
    raise click.UsageError(
        f"bad domain spec {spec!r}; use ball:cx,cy,cz,r or ellipsoid:a1,a2,a3[@cx,cy,cz]"
    )


def _parse_angles(text: str, name: str) -> np.ndarray:
    """Either a:b:n (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return np.linspace(float(lo), float(hi), int(n))
        return np.array([float(p) for p in text.split(",")])
    except ValueError as exc:
        raise click.UsageError(f"{name}: expected a:b:n or a comma list, got {text!r}") from exc


def _load_medium(path: str) -> IsotropicMedium:
    try:
        return load_medium(path)
    except ElastobeamError as exc:
        raise click.UsageError(f"cannot load medium {path}: {exc}") from exc


def _mode(text: str) -> WaveMode:
    return WaveMode.P if text == "P" else WaveMode.S


def _write_json(directory: Path, name: str, payload) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / name
    target.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return target


def _write_csv(directory: Path, name: str, header, rows) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / name
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    target.write_text("\n".join(lines) + "\n")
    return target


@click.group()
def main():
    """Gaussian-beam and nonlinear-interaction toolkit for isotropic elastodynamics."""


@main.command()
@click.option("--medium", "medium_path", required=True, type=click.Path(exists=True))
@click.option("--domain", "domain_spec", default="ball:0,0,0,1", show_default=True)
@click.option("--samples", default=512, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", default=".", show_default=True, metavar="DIR",
              help="Directory the artifact files are written into.")
def validate(medium_path, domain_spec, samples, seed, out_dir):
    """Check admissibility of a medium on random points of a domain."""
    m = _load_medium(medium_path)
    dom = _parse_domain(domain_spec)
    rng = np.random.default_rng(seed)
    lo = dom.center - dom.semi_axes
    hi = dom.center + dom.semi_axes
    pts = []
    while len(pts) < samples:
        cand = rng.uniform(lo, hi, size=(4 * samples, 3))
        pts.extend(cand[dom.contains(cand)][: samples - len(pts)])
    report = validate_medium(m, np.array(pts))
    payload = {
        "medium": Path(medium_path).name,
        "samples": int(samples),
        "passed": report.passed,
        "violations": [
            {"point": list(map(float, v.point)), "condition": v.condition, "value": float(v.value)}
            for v in report.violations
        ],
    }
    _write_json(Path(out_dir), "validate.json", payload)
    if report.passed:
        click.echo(f"all invariants hold on {samples} sample points")
    else:
        click.echo(report.summary())
        sys.exit(1)


@main.command()
@click.option("--medium", "medium_path", required=True, type=click.Path(exists=True))
@click.option("--domain", "domain_spec", default="ball:0,0,0,1", show_default=True)
@click.option("--mode", "mode_text", type=click.Choice(["P", "S"]), default="S", show_default=True)
@click.option("--x0", "x0_text", default="0,0,0", show_default=True)
@click.option("--direction", "dir_text", default="1,0,0", show_default=True)
@click.option("--t0", default=0.0, show_default=True)
@click.option("--tol", default=1e-11, show_default=True, help="ODE relative tolerance.")
@click.option("--out", "out_dir", default=".", show_default=True, metavar="DIR",
              help="Directory the artifact files are written into.")
def trace(medium_path, domain_spec, mode_text, x0_text, dir_text, t0, tol, out_dir):
    """Trace one unit-speed ray across the domain; emit samples and events."""
    m = _load_medium(medium_path)
    dom = _parse_domain(domain_spec)
    x0 = _parse_triple(x0_text, "--x0")
    direction = _parse_triple(dir_text, "--direction")
    if not dom.contains(x0):
        raise click.UsageError("--x0 must lie inside the domain")
    path = trace_geodesic(m, _mode(mode_text), x0, direction, dom, t0=t0, rtol=tol, atol=tol * 1e-2)

    s_grid = np.linspace(path.s_minus, path.s_plus, 301)
    rows = []
    for s in s_grid:
        x = path.position(s)
        v = path.velocity(s)
        rows.append([_fmt(s), _fmt(path.time(s))] + [_fmt(c) for c in x] + [_fmt(c) for c in v])
    _write_csv(Path(out_dir), "trace.csv", ["s", "t", "x1", "x2", "x3", "v1", "v2", "v3"], rows)

    def event_payload(ev):
        if ev is None:
            return None
        return {
            "s": float(ev.s),
            "t": float(ev.time),
            "point": list(map(float, ev.point)),
            "direction": list(map(float, ev.direction)),
        }

    payload = {
        "mode": mode_text,
        "s_range": [float(path.s_minus), float(path.s_plus)],
        "entry": event_payload(path.entry),
        "exit": event_payload(path.exit),
        "unit_speed_defect": float(path.unit_speed_defect(m)),
    }
    _write_json(Path(out_dir), "trace_events.json", payload)
    click.echo(
        f"{mode_text} ray: s in [{_fmt(path.s_minus)}, {_fmt(path.s_plus)}], "
        f"unit-speed defect {payload['unit_speed_defect']:.3e}"
    )


@main.command()
@click.option("--medium", "medium_path", required=True, type=click.Path(exists=True))
@click.option("--domain", "domain_spec", default="ball:0,0,0,1", show_default=True)
@click.option("--mode", "mode_text", type=click.Choice(["P", "S"]), default="S", show_default=True)
@click.option("--x0", "x0_text", default="0,0,0", show_default=True)
@click.option("--direction", "dir_text", default="1,0,0", show_default=True)
@click.option("--t0", default=0.0, show_default=True)
@click.option("--delta", default=None, type=float, help="Cutoff radius (default: auto).")
@click.option("--tol", default=1e-11, show_default=True, help="ODE relative tolerance.")
@click.option("--out", "out_dir", default=".", show_default=True, metavar="DIR",
              help="Directory the artifact files are written into.")
def beam(medium_path, domain_spec, mode_text, x0_text, dir_text, t0, delta, tol, out_dir):
    """Build a Gaussian beam along a ray; dump axis amplitudes and Y/Z/H."""
    m = _load_medium(medium_path)
    dom = _parse_domain(domain_spec)
    x0 = _parse_triple(x0_text, "--x0")
    direction = _parse_triple(dir_text, "--direction")
    if not dom.contains(x0):
        raise click.UsageError("--x0 must lie inside the domain")
    gb = make_beam(m, _mode(mode_text), x0, direction, dom, t0=t0, delta=delta, rtol=tol)

    taus = np.linspace(math.sqrt(2.0) * gb.path.s_minus, math.sqrt(2.0) * gb.path.s_plus, 101)
    header = ["tau", "s"]
    for label in ("Y", "Z", "H"):
        for i in range(3):
            for j in range(3):
                header += [f"{label}{i+1}{j+1}_re", f"{label}{i+1}{j+1}_im"]
    if gb.mode is WaveMode.S:
        header += ["amp2_re", "amp2_im", "amp3_re", "amp3_im"]
    else:
        header += ["amp_re", "amp_im"]

    rows = []
    for tau in taus:
        row = [_fmt(tau), _fmt(tau / math.sqrt(2.0))]
        for matrix in (gb.ric.Y_at(tau), gb.ric.Z_at(tau), gb.ric.H_at(tau)):
            for entry in np.asarray(matrix).reshape(-1):
                row += [_fmt(entry.real), _fmt(entry.imag)]
        for amp in gb.amplitudes:
            val = complex(amp(tau))
            row += [_fmt(val.real), _fmt(val.imag)]
        rows.append(row)
    _write_csv(Path(out_dir), "beam_axis.csv", header, rows)
    click.echo(
        f"{mode_text} beam: delta {_fmt(gb.delta)}, tau range "
        f"[{_fmt(taus[0])}, {_fmt(taus[-1])}]"
    )


@main.command()
@click.option("--medium", "medium_path", required=True, type=click.Path(exists=True))
@click.option("--mode", "mode_text", type=click.Choice(["P", "S"]), default="S", show_default=True)
@click.option("--angles", "angles_text", default="2:88:44", show_default=True, help="Incidence angles in degrees.")
@click.option("--out", "out_dir", default=".", show_default=True, metavar="DIR",
              help="Directory the artifact files are written into.")
def reflect(medium_path, mode_text, angles_text, out_dir):
    """Sweep incidence angles at a flat traction-free boundary."""
    m = _load_medium(medium_path)
    mod = m.constant_values()
    if mod is None:
        mod = m.moduli_at(np.zeros(3))
    lam, mu, rho = mod.lam, mod.mu, mod.rho
    cP = math.sqrt((lam + 2 * mu) / rho)
    cS = math.sqrt(mu / rho)
    angles = _parse_angles(angles_text, "--angles")

    rows = []
    for deg in angles:
        theta = math.radians(deg)
        direction = np.array([math.sin(theta), 0.0, math.cos(theta)])
        if mode_text == "P":
            xi = direction / cP
            coeffs = solve_p_incidence(1.0, xi, lam, mu, rho)
        else:
            xi = direction / cS
            pol = np.array([math.cos(theta), 0.0, -math.sin(theta)])
            coeffs = solve_s_incidence(pol, xi, lam, mu, rho)
        ap = complex(coeffs.A_P_minus)
        rows.append(
            [
                _fmt(deg),
                _fmt(ap.real),
                _fmt(ap.imag),
                _fmt(np.linalg.norm(coeffs.a_S_minus)),
                "1" if coeffs.evanescent else "0",
            ]
        )
    _write_csv(
        Path(out_dir),
        "reflect.csv",
        ["angle_deg", "AP_minus_re", "AP_minus_im", "aS_minus_norm", "evanescent"],
        rows,
    )
    if mode_text == "S":
        click.echo(f"critical angle: {math.degrees(math.asin(cS / cP)):.6f} deg")
    click.echo(f"wrote {len(rows)} incidence rows (cP={_fmt(cP)}, cS={_fmt(cS)})")


@main.command()
@click.option("--medium", "medium_path", required=True, type=click.Path(exists=True))
@click.option("--x0", "x0_text", default="0,0,0", show_default=True)
@click.option("--kind", type=click.Choice(["PERP", "INPLANE"]), default="PERP", show_default=True)
@click.option("--angles", "angles_text", default="", help="Sweep angles in radians (default depends on kind).")
@click.option("--out", "out_dir", default=".", show_default=True, metavar="DIR",
              help="Directory the artifact files are written into.")
def interact(medium_path, x0_text, kind, angles_text, out_dir):
    """Tabulate interaction amplitudes over an angle sweep at a point."""
    m = _load_medium(medium_path)
    x0 = _parse_triple(x0_text, "--x0")
    mod = m.moduli_at(x0)
    cP = m.wavespeed(x0, WaveMode.P)
    cS = m.wavespeed(x0, WaveMode.S)
    if not angles_text:
        angles_text = "0.2:2.4:12" if kind == "PERP" else "0.1:1.0:10"
    angles = _parse_angles(angles_text, "--angles")

    e_out = np.array([0.0, 0.0, 1.0])
    rows = []
    for angle in angles:
        if kind == "PERP":
            psi = float(angle)
        else:
            try:
                psi = inplane_psi_for_alpha(float(angle), cP, cS)
            except ElastobeamError as exc:
                raise click.UsageError(f"angle {angle}: {exc}") from exc
        e_in = np.array([math.sin(psi), 0.0, math.cos(psi)])
        cfg = build_ssp_directions(e_in, e_out, cP, cS, kind)
        value, scaled = amplitude_A(cfg, mod)
        rows.append([_fmt(angle), _fmt(scaled.real), _fmt(scaled.imag), _fmt(value.real), _fmt(value.imag)])
    _write_csv(
        Path(out_dir),
        "interact.csv",
        ["angle", "scaled_re", "scaled_im", "value_re", "value_im"],
        rows,
    )
    click.echo(f"wrote {len(rows)} {kind} interaction rows at x0={x0_text} (cP={_fmt(cP)}, cS={_fmt(cS)})")


@main.command()
@click.option("--medium", "medium_path", required=True, type=click.Path(exists=True))
@click.option("--x0", "x0_text", default="0,0,0", show_default=True)
@click.option("--psi-grid", "psi_text", default="0.3,0.9,1.5,2.1", show_default=True)
@click.option("--alpha-grid", "alpha_text", default="0.5,1.0", show_default=True)
@click.option("--out", "out_dir", default=".", show_default=True, metavar="DIR",
              help="Directory the artifact files are written into.")
def recover(medium_path, x0_text, psi_text, alpha_text, out_dir):
    """Synthesize sweep data at a point, fit the moduli, report errors."""
    m = _load_medium(medium_path)
    x0 = _parse_triple(x0_text, "--x0")
    psi_grid = _parse_angles(psi_text, "--psi-grid")
    alpha_grid = _parse_angles(alpha_text, "--alpha-grid")
    try:
        recovered, report = end_to_end_recover(m, x0, psi_grid, alpha_grid)
    except ElastobeamError as exc:
        raise click.UsageError(str(exc)) from exc

    _write_json(Path(out_dir), "recover.json", report)
    rows = [
        ["PERP", _fmt(angle), _fmt(value)] for angle, value in report["samples"]["psi"]
    ] + [
        ["INPLANE", _fmt(angle), _fmt(value)] for angle, value in report["samples"]["alpha"]
    ]
    _write_csv(Path(out_dir), "recover_sweeps.csv", ["kind", "angle", "value"], rows)
    click.echo(recovered.summary())
    click.echo("max recovery error: " + _fmt(max(report["errors"].values())))


# -- the seeded mini check suite ------------------------------------------


def _check_riccati(seed: int) -> float:
    worst = 0.0
    ev = evolve_yz(
        lambda tau: np.zeros((3, 3)),
        np.eye(3, dtype=complex),
        1j * np.eye(3),
        (0.0, 3.0),
        n_grid=601,
    )
    for tau in np.linspace(0.0, 3.0, 31):
        one = 1.0 + 2.0j * tau
        worst = max(worst, float(np.max(np.abs(ev.Y_at(tau) - np.diag([1.0, one, one])))))
        worst = max(worst, float(np.max(np.abs(ev.H_at(tau) - np.diag([1j, 1j / one, 1j / one])))))
    worst = max(worst, ev.conservation_defect())

    def curved(tau):
        d = np.zeros((3, 3))
        d[1, 1] = 0.3 * math.sin(tau)
        d[2, 2] = 0.2 + 0.1 * math.cos(tau)
        d[1, 2] = d[2, 1] = 0.05 * math.cos(2.0 * tau)
        return d

    ev2 = evolve_yz(curved, np.eye(3, dtype=complex), 1j * np.eye(3), (0.0, 4.0), n_grid=801)
    return max(worst, ev2.conservation_defect())


def _draw_admissible(rng):
    mu = rng.uniform(0.2, 3.0)
    cS = rng.uniform(0.4, 2.0)
    rho = mu / cS**2
    cP = cS * rng.uniform(1.25, 3.0)
    lam = rho * cP**2 - 2.0 * mu
    return lam, mu, rho, cP, cS


def _check_boundary_solvability(seed: int) -> float:
    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    for _ in range(2000):
        lam, mu, rho, cP, cS = _draw_admissible(rng)
        xit = rng.uniform(0.05, 0.95) / cP
        xi3 = math.sqrt(cP**-2 - xit**2)
        xiS3 = math.sqrt(cS**-2 - xit**2)
        M = assemble_MP(np.array([xit, 0.0, xi3]), lam, mu, rho)
        if not np.isfinite(np.linalg.cond(M)):
            return math.inf
        B = np.array(
            [
                [M[0, 0], M[0, 1] * xiS3 + M[0, 3] * xit],
                [M[2, 0], M[2, 1] * xiS3 + M[2, 3] * xit],
            ]
        )
        closed = mu * mu * (4.0 * xit**2 * xi3 * xiS3 + xit**4 - 2.0 * xit**2 * xiS3**2 + xiS3**4)
        worst = max(worst, abs(np.linalg.det(B) - closed) / abs(closed))
    return worst


def _boundary_traction_residual(coeffs, lam, mu, rho) -> float:
    """Recompute the three-wave traction sum directly from wave vectors."""
    cP = math.sqrt((lam + 2.0 * mu) / rho)
    xi = coeffs.xi_inc
    tang_sq = float(xi[0] ** 2 + xi[1] ** 2)
    if coeffs.mode_in is WaveMode.P:
        incident = traction_matrix(xi, lam, mu) @ (xi * coeffs.incident_amplitude)
    else:
        incident = traction_matrix(xi, lam, mu) @ coeffs.incident_amplitude
    xi_p = np.array([xi[0], xi[1], -vertical_root(cP, tang_sq)])
    reflected_p = coeffs.A_P_minus * (traction_matrix(xi_p, lam, mu) @ xi_p)
    reflected_s = traction_matrix(coeffs.xi_S_minus, lam, mu) @ coeffs.a_S_minus
    total = incident + reflected_p + reflected_s
    return float(np.max(np.abs(total)) / max(np.max(np.abs(incident)), 1e-300))


def _check_traction(seed: int) -> float:
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for _ in range(200):
        lam, mu, rho, cP, cS = _draw_admissible(rng)
        theta = rng.uniform(0.02, 1.55)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        direction = np.array(
            [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
        )
        if rng.random() < 0.5:
            coeffs = solve_p_incidence(1.0, direction / cP, lam, mu, rho)
        else:
            xi = direction / cS
            sv = np.array(
                [math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)]
            )
            sh = np.array([-math.sin(phi), math.cos(phi), 0.0])
            gamma = rng.uniform(0.0, 2.0 * math.pi)
            coeffs = solve_s_incidence(math.cos(gamma) * sv + math.sin(gamma) * sh, xi, lam, mu, rho)
        worst = max(worst, _boundary_traction_residual(coeffs, lam, mu, rho))
    return worst


def _check_normal_incidence(seed: int) -> float:
    rng = np.random.default_rng([seed, 4])
    worst = 0.0
    for _ in range(20):
        lam, mu, rho, cP, cS = _draw_admissible(rng)
        cp = solve_p_incidence(1.0, np.array([0.0, 0.0, 1.0 / cP]), lam, mu, rho)
        worst = max(worst, abs(cp.A_P_minus + 1.0), float(np.max(np.abs(cp.a_S_minus))))
        pol = np.array([0.3, 0.4, 0.0])
        cs = solve_s_incidence(pol, np.array([0.0, 0.0, 1.0 / cS]), lam, mu, rho)
        worst = max(
            worst,
            abs(cs.A_P_minus),
            float(np.max(np.abs(cs.a_S_minus - pol))),
        )
    return worst


def _check_contraction(seed: int) -> float:
    from .medium import Moduli

    rng = np.random.default_rng([seed, 5])
    worst = 0.0
    for _ in range(500):
        g1, g2, g0 = rng.normal(size=(3, 3, 3))
        mod = Moduli(*rng.uniform(0.2, 3.0, size=6))
        dens = interaction_density(g1, g2, g0, mod)
        contracted = float(np.sum(quadratic_source_G(g1, g2, mod) * g0))
        worst = max(worst, abs(dens - contracted) / max(abs(dens), 1.0))
    return worst


def _poly_fields():
    def field(coefs):
        def val(x):
            x = np.asarray(x)
            out = np.zeros(x.shape[:-1] + (3,))
            for comp, (c, i, j, k) in coefs:
                out[..., comp] += c * x[..., 0] ** i * x[..., 1] ** j * x[..., 2] ** k
            return out

        def jac(x):
            x = np.asarray(x)
            out = np.zeros(x.shape[:-1] + (3, 3))
            for comp, (c, i, j, k) in coefs:
                if i:
                    out[..., comp, 0] += c * i * x[..., 0] ** (i - 1) * x[..., 1] ** j * x[..., 2] ** k
                if j:
                    out[..., comp, 1] += c * j * x[..., 0] ** i * x[..., 1] ** (j - 1) * x[..., 2] ** k
                if k:
                    out[..., comp, 2] += c * k * x[..., 0] ** i * x[..., 1] ** j * x[..., 2] ** (k - 1)
            return out

        return val, jac

    v1 = field([(0, (0.7, 1, 1, 0)), (1, (-0.4, 0, 2, 0)), (2, (0.9, 1, 0, 1)), (0, (0.3, 0, 0, 0))])
    v2 = field([(1, (0.5, 2, 0, 0)), (2, (0.8, 0, 1, 1)), (0, (-0.6, 0, 0, 2)), (1, (0.2, 0, 0, 0))])
    v0 = field([(2, (0.4, 1, 1, 0)), (0, (0.55, 0, 1, 1)), (1, (-0.35, 2, 0, 0))])
    return v1, v2, v0


def _check_divergence(seed: int) -> float:
    v1, v2, v0 = _poly_fields()
    m = IsotropicMedium(
        lam=ExpressionField("2.0 + 0.3*x1"),
        mu=ConstantField(1.0),
        rho=ConstantField(1.0),
        modA=ExpressionField("0.3 + 0.1*x2"),
        modB=ConstantField(0.2),
        modC=ExpressionField("0.1 - 0.05*x3"),
    )
    return divergence_identity_check(v1, v2, v0, m, ball((0.1, -0.2, 0.05), 0.9), order=8)


def _check_recovery(seed: int) -> float:
    worst = 0.0
    m_const = IsotropicMedium(
        lam=ConstantField(2.0),
        mu=ConstantField(1.0),
        rho=ConstantField(1.0),
        modA=ConstantField(0.3),
        modB=ConstantField(0.2),
        modC=ConstantField(0.1),
    )
    m_vary = IsotropicMedium(
        lam=ExpressionField("0.5 + 0.3*cos(x2)"),
        mu=ExpressionField("0.8 + 0.3*sin(x1)"),
        rho=ExpressionField("1.0 + 0.25*sin(x3)"),
        modA=ExpressionField("0.3 + 0.1*x1"),
        modB=ExpressionField("0.2 - 0.05*x2"),
        modC=ConstantField(0.1),
    )
    cases = [(m_const, (0.0, 0.0, 0.0)), (m_vary, (0.2, -0.3, 0.1)), (m_vary, (-0.4, 0.2, 0.3))]
    for medium, point in cases:
        _, report = end_to_end_recover(medium, point, [0.3, 0.9, 1.5, 2.1], [0.5, 1.0])
        worst = max(worst, max(report["errors"].values()))
    return worst


_CHECKS = (
    ("riccati-conservation", _check_riccati, 1e-8),
    ("boundary-solvability", _check_boundary_solvability, 1e-10),
    ("traction-cancellation", _check_traction, 1e-10),
    ("normal-incidence", _check_normal_incidence, 1e-12),
    ("contraction-identity", _check_contraction, 1e-12),
    ("divergence-identity", _check_divergence, 1e-6),
    ("recovery-roundtrip", _check_recovery, 1e-9),
)


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--jobs", default=1, show_default=True)
@click.option("--tol", default=1.0, show_default=True, help="Threshold multiplier.")
@click.option("--out", "out_dir", default=None, metavar="DIR",
              help="Also write check.json into DIR.")
def check(seed, jobs, tol, out_dir):
    """Run the seeded invariant mini-suite and print a pass/fail table."""
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        worsts = list(pool.map(lambda c: c[1](seed), _CHECKS))
    results = []
    for (name, _, threshold), worst in zip(_CHECKS, worsts):
        limit = threshold * tol
        results.append({"check": name, "worst": float(worst), "threshold": limit, "passed": bool(worst < limit)})

    width = max(len(r["check"]) for r in results)
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        click.echo(f"{r['check']:<{width}}  {status}  worst {r['worst']:.3e}  limit {r['threshold']:.1e}")
    failed = [r for r in results if not r["passed"]]
    if out_dir is not None:
        _write_json(Path(out_dir), "check.json", {"seed": seed, "results": results})
    if failed:
        click.echo(f"{len(failed)} of {len(results)} checks failed")
        sys.exit(1)
    click.echo(f"all {len(results)} checks passed")
