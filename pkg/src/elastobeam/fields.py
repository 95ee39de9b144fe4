"""Scalar coefficient fields over R^3.

Three interchangeable backends:

* :class:`ConstantField` — a number.
* :class:`ExpressionField` — a closed-form expression in ``x1, x2, x3``
  compiled with sympy; gradients and Hessians are exact.
* :class:`GridField` — cubic interpolation on a regular grid; derivatives
  are finite differences of the interpolant.

Every backend evaluates values, gradients and Hessians at a single point
(shape ``(3,)``) or at an array of points (shape ``(..., 3)``).
"""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np
import sympy as sp
from scipy.interpolate import RegularGridInterpolator

from .errors import FieldExpressionError

_X1, _X2, _X3 = sp.symbols("x1 x2 x3")

#: Function heads admitted in coefficient expressions.  Square roots enter
#: as rational powers, so only the transcendental heads are listed.
_ALLOWED_FUNCTIONS = (sp.sin, sp.cos, sp.exp)

_ALLOWED_ATOM_TYPES = (
    sp.Add,
    sp.Mul,
    sp.Pow,
    sp.Symbol,
    sp.Integer,
    sp.Float,
    sp.Rational,
)


@runtime_checkable
class ScalarField(Protocol):
    """Anything that can be queried for value, gradient and Hessian."""

    def value(self, x): ...

    def gradient(self, x): ...

    def hessian(self, x): ...


def _points(x):
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 3:
        raise ValueError(f"expected points with last axis 3, got shape {pts.shape}")
    return pts


class ConstantField:
    """A spatially uniform coefficient."""

    def __init__(self, value: float):
        self.constant = float(value)

    def value(self, x):
        pts = _points(x)
        if pts.ndim == 1:
            return self.constant
        return np.full(pts.shape[:-1], self.constant)

    def gradient(self, x):
        pts = _points(x)
        return np.zeros(pts.shape[:-1] + (3,))

    def hessian(self, x):
        pts = _points(x)
        return np.zeros(pts.shape[:-1] + (3, 3))

    def __repr__(self):
        return f"ConstantField({self.constant!r})"


def _check_grammar(expr: sp.Expr, source: str) -> None:
    for node in sp.preorder_traversal(expr):
        if isinstance(node, sp.Symbol):
            if node not in (_X1, _X2, _X3):
                raise FieldExpressionError(
                    f"unknown symbol {node!r} in expression {source!r}; "
                    "only x1, x2, x3 are available"
                )
        elif isinstance(node, sp.Function):
            if node.func not in _ALLOWED_FUNCTIONS:
                raise FieldExpressionError(
                    f"function {node.func.__name__!r} is not part of the "
                    f"expression grammar (allowed: sin, cos, exp, sqrt) in {source!r}"
                )
        elif isinstance(node, _ALLOWED_ATOM_TYPES):
            continue
        elif node in (sp.pi, sp.E):
            continue
        else:
            raise FieldExpressionError(
                f"construct {type(node).__name__!r} is not part of the "
                f"expression grammar in {source!r}"
            )


class ExpressionField:
    """A coefficient given in closed form, e.g. ``"1 + 0.2*sin(x1)*cos(x3)"``.

    The grammar is deliberately small: +, -, *, /, powers, exp, sin, cos and
    sqrt over the coordinates ``x1, x2, x3`` and numeric literals.  Gradients
    and Hessians are obtained by symbolic differentiation and compiled to
    vectorized numpy callables once, at construction.
    """

    def __init__(self, text: str):
        self.text = str(text)
        try:
            expr = sp.sympify(
                self.text,
                locals={
                    "x1": _X1,
                    "x2": _X2,
                    "x3": _X3,
                    "sin": sp.sin,
                    "cos": sp.cos,
                    "exp": sp.exp,
                    "sqrt": sp.sqrt,
                    "pi": sp.pi,
                },
            )
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise FieldExpressionError(f"cannot parse expression {self.text!r}: {exc}") from exc
        _check_grammar(expr, self.text)
        self.expr = expr
        syms = (_X1, _X2, _X3)
        grads = [sp.diff(expr, s) for s in syms]
        hesses = [[sp.diff(g, s) for s in syms] for g in grads]
        self._value_fn = sp.lambdify(syms, expr, modules="numpy")
        self._grad_fns = [sp.lambdify(syms, g, modules="numpy") for g in grads]
        self._hess_fns = [[sp.lambdify(syms, h, modules="numpy") for h in row] for row in hesses]

    @staticmethod
    def _broadcast(raw, batch_shape):
        out = np.asarray(raw, dtype=float)
        if out.shape != batch_shape:
            out = np.broadcast_to(out, batch_shape)
        return out

    def value(self, x):
        pts = _points(x)
        batch = pts.shape[:-1]
        raw = self._value_fn(pts[..., 0], pts[..., 1], pts[..., 2])
        if pts.ndim == 1:
            return float(raw)
        return np.array(self._broadcast(raw, batch))

    def gradient(self, x):
        pts = _points(x)
        batch = pts.shape[:-1]
        cols = [self._broadcast(f(pts[..., 0], pts[..., 1], pts[..., 2]), batch) for f in self._grad_fns]
        return np.stack(cols, axis=-1)

    def hessian(self, x):
        pts = _points(x)
        batch = pts.shape[:-1]
        rows = []
        for row in self._hess_fns:
            rows.append(
                np.stack(
                    [self._broadcast(f(pts[..., 0], pts[..., 1], pts[..., 2]), batch) for f in row],
                    axis=-1,
                )
            )
        return np.stack(rows, axis=-2)

    def __repr__(self):
        return f"ExpressionField({self.text!r})"


class GridField:
    """A coefficient tabulated on a regular grid with cubic interpolation.

    Parameters
    ----------
    origin, spacing : length-3 sequences
        Location of the first grid node and the per-axis grid step.
    values : ndarray, shape (n1, n2, n3)
        Node values, axis order matching (x1, x2, x3).  At least four nodes
        per axis are required by the cubic interpolant.
    """

    def __init__(self, origin, spacing, values):
        self.origin = np.asarray(origin, dtype=float).reshape(3)
        self.spacing = np.asarray(spacing, dtype=float).reshape(3)
        if np.any(self.spacing <= 0):
            raise ValueError("grid spacing must be positive")
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 3:
            raise ValueError("grid values must be a 3-D array")
        if min(vals.shape) < 4:
            raise ValueError("cubic interpolation needs at least 4 nodes per axis")
        axes = [self.origin[k] + self.spacing[k] * np.arange(vals.shape[k]) for k in range(3)]
        self._interp = RegularGridInterpolator(
            axes, vals, method="cubic", bounds_error=False, fill_value=None
        )
        # Derivative step: well inside the mesh, large enough to not lose
        # digits to interpolation roughness.
        self._h = float(min(self.spacing)) / 8.0

    def value(self, x):
        pts = _points(x)
        out = self._interp(pts.reshape(-1, 3)).reshape(pts.shape[:-1])
        if pts.ndim == 1:
            return float(out)
        return out

    def gradient(self, x):
        pts = _points(x)
        flat = pts.reshape(-1, 3)
        h = self._h
        cols = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            cols.append((self._interp(flat + e) - self._interp(flat - e)) / (2 * h))
        return np.stack(cols, axis=-1).reshape(pts.shape[:-1] + (3,))

    def hessian(self, x):
        pts = _points(x)
        flat = pts.reshape(-1, 3)
        h = self._h
        f0 = self._interp(flat)
        out = np.empty(flat.shape[:-1] + (3, 3))
        for i in range(3):
            ei = np.zeros(3)
            ei[i] = h
            out[..., i, i] = (self._interp(flat + ei) - 2 * f0 + self._interp(flat - ei)) / h**2
        for i in range(3):
            for j in range(i + 1, 3):
                ei = np.zeros(3)
                ei[i] = h
                ej = np.zeros(3)
                ej[j] = h
                mixed = (
                    self._interp(flat + ei + ej)
                    - self._interp(flat + ei - ej)
                    - self._interp(flat - ei + ej)
                    + self._interp(flat - ei - ej)
                ) / (4 * h**2)
                out[..., i, j] = mixed
                out[..., j, i] = mixed
        return out.reshape(pts.shape[:-1] + (3, 3))

    def __repr__(self):
        return f"GridField(origin={self.origin.tolist()}, spacing={self.spacing.tolist()})"
