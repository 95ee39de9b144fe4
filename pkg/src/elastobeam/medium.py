"""Isotropic elastic media: linear and third-order moduli as smooth fields.

A medium bundles six scalar fields — the two linear moduli ``lambda`` and
``mu``, the density ``rho`` and the three third-order moduli ``modA``,
``modB``, ``modC`` — and derives the compressional and shear wavespeeds

    c_P = sqrt((lambda + 2 mu) / rho),      c_S = sqrt(mu / rho)

together with their spatial gradients and Hessians by the chain rule.
Admissibility means mu > 0, 3 lambda + 2 mu > 0 and rho > 0 at every point
of interest, which forces c_P > c_S > 0.
"""

from __future__ import annotations

import enum
import numbers
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import MediumError, MediumFormatError
from .fields import ConstantField, ExpressionField, GridField, ScalarField


class WaveMode(enum.Enum):
    """Compressional (P) or shear (S) propagation."""

    P = "P"
    S = "S"


@dataclass(frozen=True)
class Moduli:
    """Point values of all six coefficients."""

    lam: float
    mu: float
    rho: float
    modA: float
    modB: float
    modC: float


@dataclass(frozen=True)
class Violation:
    point: tuple
    condition: str
    value: float


@dataclass(frozen=True)
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.passed:
            return "all admissibility conditions hold at every sampled point"
        lines = [f"{len(self.violations)} violation(s):"]
        for v in self.violations:
            lines.append(f"  at {tuple(round(c, 6) for c in v.point)}: {v.condition} (value {v.value:.6g})")
        return "\n".join(lines)


@dataclass(frozen=True)
class IsotropicMedium:
    """Immutable container of the six coefficient fields.

    Fields are shared, read-only evaluators; media are therefore safe to use
    concurrently from parallel sweeps.
    """

    lam: ScalarField
    mu: ScalarField
    rho: ScalarField
    modA: ScalarField
    modB: ScalarField
    modC: ScalarField

    # -- point queries ----------------------------------------------------

    def moduli_at(self, x) -> Moduli:
        return Moduli(
            lam=float(self.lam.value(x)),
            mu=float(self.mu.value(x)),
            rho=float(self.rho.value(x)),
            modA=float(self.modA.value(x)),
            modB=float(self.modB.value(x)),
            modC=float(self.modC.value(x)),
        )

    def constant_values(self):
        """The shared :class:`Moduli` if every field is constant, else None."""
        fields = (self.lam, self.mu, self.rho, self.modA, self.modB, self.modC)
        if all(isinstance(f, ConstantField) for f in fields):
            return Moduli(*(f.constant for f in fields))
        return None

    def _modulus(self, mode: WaveMode):
        """Value/gradient/Hessian triple of mu (S) or lambda + 2 mu (P)."""
        if mode is WaveMode.S:
            return self.mu.value, self.mu.gradient, self.mu.hessian
        if mode is WaveMode.P:
            def val(x):
                return self.lam.value(x) + 2.0 * self.mu.value(x)

            def grad(x):
                return self.lam.gradient(x) + 2.0 * self.mu.gradient(x)

            def hess(x):
                return self.lam.hessian(x) + 2.0 * self.mu.hessian(x)

            return val, grad, hess
        raise ValueError(f"unknown mode {mode!r}")

    def speed_squared(self, x, mode: WaveMode):
        val, _, _ = self._modulus(mode)
        m = val(x)
        r = self.rho.value(x)
        q = m / r
        if np.any(np.asarray(q) <= 0) or np.any(np.asarray(r) <= 0):
            raise MediumError(
                f"medium is not admissible at {np.asarray(x).tolist()}: "
                f"modulus/density ratio is {q!r} with density {r!r}"
            )
        return q

    def wavespeed(self, x, mode: WaveMode):
        return np.sqrt(self.speed_squared(x, mode))

    def wavespeed_gradient(self, x, mode: WaveMode):
        val, grad, _ = self._modulus(mode)
        m = np.asarray(val(x))
        r = np.asarray(self.rho.value(x))
        q = m / r
        dq = (grad(x) - q[..., None] * self.rho.gradient(x)) / r[..., None]
        c = np.sqrt(q)
        return dq / (2.0 * c[..., None])

    def wavespeed_hessian(self, x, mode: WaveMode):
        val, grad, hess = self._modulus(mode)
        m = np.asarray(val(x))
        r = np.asarray(self.rho.value(x))
        dm = grad(x)
        dr = self.rho.gradient(x)
        q = m / r
        dq = (dm - q[..., None] * dr) / r[..., None]
        outer = dq[..., :, None] * dr[..., None, :]
        d2q = (
            hess(x)
            - q[..., None, None] * self.rho.hessian(x)
            - outer
            - np.swapaxes(outer, -1, -2)
        ) / r[..., None, None]
        c = np.sqrt(q)
        dc = dq / (2.0 * c[..., None])
        return d2q / (2.0 * c[..., None, None]) - (
            dc[..., :, None] * dc[..., None, :]
        ) / c[..., None, None]

    def speed_squared_gradient(self, x, mode: WaveMode):
        c = self.wavespeed(x, mode)
        return 2.0 * np.asarray(c)[..., None] * self.wavespeed_gradient(x, mode)


def validate_medium(m: IsotropicMedium, samples) -> ValidationReport:
    """Check admissibility inequalities at each sample point.

    The report lists every violated inequality with its location; field
    evaluation failures are recorded per point rather than raised, so one bad
    sample does not mask the rest.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.size == 0:
        raise ValueError("validate_medium needs at least one sample point")
    violations = []
    for p in pts:
        point = tuple(float(c) for c in p)
        try:
            lam = float(m.lam.value(p))
            mu = float(m.mu.value(p))
            rho = float(m.rho.value(p))
        except Exception as exc:  # noqa: BLE001 - reported, not raised
            violations.append(Violation(point, f"fields evaluable ({exc})", float("nan")))
            continue
        if not mu > 0:
            violations.append(Violation(point, "mu > 0", mu))
        if not 3 * lam + 2 * mu > 0:
            violations.append(Violation(point, "3*lambda + 2*mu > 0", 3 * lam + 2 * mu))
        if not rho > 0:
            violations.append(Violation(point, "rho > 0", rho))
    return ValidationReport(violations)


def wavespeed(m: IsotropicMedium, x, mode: WaveMode):
    """Convenience alias for :meth:`IsotropicMedium.wavespeed`."""
    return m.wavespeed(x, mode)


# -- medium definition files ---------------------------------------------

_COEFFICIENT_KEYS = ("lambda", "mu", "rho", "modA", "modB", "modC")


def _grid_from_mapping(key, g) -> GridField:
    try:
        origin = g["origin"]
        spacing = g["spacing"]
        values = np.asarray(g["values"], dtype=float)
        shape = tuple(int(n) for n in g["shape"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MediumFormatError(
            f"coefficient {key!r}: grid data needs origin, spacing, shape, values ({exc})"
        ) from exc
    if values.size != int(np.prod(shape)):
        raise MediumFormatError(
            f"coefficient {key!r}: grid has {values.size} values, shape {shape} wants {int(np.prod(shape))}"
        )
    return GridField(origin, spacing, values.reshape(shape))


def _field_from_entry(key, entry, base_dir) -> ScalarField:
    if isinstance(entry, numbers.Number) and not isinstance(entry, bool):
        return ConstantField(float(entry))
    if isinstance(entry, str):
        return ExpressionField(entry)
    if isinstance(entry, dict) and set(entry) == {"grid"}:
        g = entry["grid"]
        if isinstance(g, str):
            # reference to a separate grid file (row-major values), relative
            # to the medium file
            path = os.path.join(base_dir, g) if base_dir else g
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    g = yaml.safe_load(fh)
            except (OSError, yaml.YAMLError) as exc:
                raise MediumFormatError(
                    f"coefficient {key!r}: cannot read grid file {path}: {exc}"
                ) from exc
        if not isinstance(g, dict):
            raise MediumFormatError(
                f"coefficient {key!r}: grid must be a mapping or a file reference"
            )
        return _grid_from_mapping(key, g)
    raise MediumFormatError(
        f"coefficient {key!r} must be a number, an expression string, or a grid mapping"
    )


def medium_from_dict(data: dict, base_dir=None) -> IsotropicMedium:
    if not isinstance(data, dict):
        raise MediumFormatError("medium definition must be a mapping")
    missing = [k for k in _COEFFICIENT_KEYS if k not in data]
    if missing:
        raise MediumFormatError(f"medium definition is missing coefficients: {', '.join(missing)}")
    extra = [k for k in data if k not in _COEFFICIENT_KEYS]
    if extra:
        raise MediumFormatError(f"unknown keys in medium definition: {', '.join(sorted(extra))}")
    fields = {}
    for key in _COEFFICIENT_KEYS:
        attr = "lam" if key == "lambda" else key
        fields[attr] = _field_from_entry(key, data[key], base_dir)
    return IsotropicMedium(**fields)


def load_medium(path) -> IsotropicMedium:
    """Read a medium definition from a YAML file.

    Each coefficient is either a number, an expression string in x1, x2, x3,
    or a mapping ``{grid: {origin, spacing, shape, values}}`` with row-major
    values.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise MediumFormatError(f"cannot parse {path}: {exc}") from exc
    except OSError as exc:
        raise MediumFormatError(f"cannot read {path}: {exc}") from exc
    return medium_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
