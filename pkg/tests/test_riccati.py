"""Spreading-matrix evolution: closed forms, invariants, curvature input."""

import math

import numpy as np
import pytest

import oracles as orc
from elastobeam import (
    BranchTrackingError,
    ConstantField,
    ExpressionField,
    IsotropicMedium,
    RiccatiPositivityError,
    WaveMode,
    ball,
    build_D_along_ray,
    evolve_yz,
    parallel_transport,
    trace_geodesic,
)

ZERO_D = lambda tau: np.zeros((3, 3))
EYE = np.eye(3)


def closed_form_H(tau):
    w = 1.0 + 2.0j * tau
    return np.diag([1j, 1j / w, 1j / w])


@pytest.fixture(scope="module")
def ric():
    return evolve_yz(ZERO_D, EYE, 1j * EYE, (-3.0, 3.0), tau0=0.0)


class TestClosedFormEvolution:
    """Zero curvature from the standard initial height matrix iI."""

    def test_Y(self, ric):
        for tau in (-2.5, -0.4, 0.0, 1.3, 2.9):
            w = 1.0 + 2.0j * tau
            np.testing.assert_allclose(
                ric.Y_at(tau), np.diag([1.0, w, w]), atol=1e-8
            )

    def test_Z_is_constant(self, ric):
        for tau in (-2.0, 0.7, 2.2):
            np.testing.assert_allclose(ric.Z_at(tau), 1j * EYE, atol=1e-8)

    def test_H(self, ric):
        for tau in (-1.8, 0.0, 0.9, 2.5):
            np.testing.assert_allclose(ric.H_at(tau), closed_form_H(tau), atol=1e-8)

    def test_conserved_quantity_is_one(self, ric):
        vals = ric.conservation_values()
        np.testing.assert_allclose(vals, 1.0, atol=1e-9)

    def test_det_branch(self, ric):
        # det Y = (1 + 2i tau)^2; the continuous inverse square root is
        # 1/(1 + 2i tau), which crosses no branch cut on the real tau line
        for tau in (-2.9, -1.0, 0.0, 0.5, 2.8):
            assert ric.det_sqrt_inv(tau) == pytest.approx(
                1.0 / (1.0 + 2.0j * tau), abs=1e-8
            )

    def test_symmetry_defect(self, ric):
        assert ric.symmetry_defect() < 1e-9


def bump_D(tau):
    """A smooth symmetric coefficient with zero first row and column."""
    return np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, 0.12 * math.sin(tau), 0.05 * math.cos(tau)],
            [0.0, 0.05 * math.cos(tau), 0.08 * math.cos(2.0 * tau)],
        ]
    )


class TestGeneralEvolution:
    def test_initial_condition_is_honored_away_from_zero(self):
        H0 = np.array(
            [
                [0.3 + 1.0j, 0.1, 0.0],
                [0.1, 1.2j, -0.05],
                [0.0, -0.05, 0.2 + 0.8j],
            ]
        )
        ric = evolve_yz(bump_D, EYE, H0, (0.0, 2.0), tau0=0.7)
        np.testing.assert_allclose(ric.H_at(0.7), H0, atol=1e-9)

    def test_riccati_equation_residual(self):
        ric = evolve_yz(bump_D, EYE, 1j * EYE, (-1.5, 1.5), tau0=0.0)
        for tau in (-1.0, -0.3, 0.4, 1.1):
            assert orc.riccati_residual(ric.H_at, bump_D, tau) < 1e-6

    def test_conservation_under_random_coefficients(self, rng):
        for _ in range(5):
            S = rng.normal(scale=0.2, size=(2, 2))
            S = S + S.T

            def D(tau, S=S):
                out = np.zeros((3, 3))
                out[1:, 1:] = S * math.cos(tau)
                return out

            ric = evolve_yz(D, EYE, 1j * EYE, (-2.0, 2.0), tau0=0.0)
            assert ric.conservation_defect() < 1e-9
            assert ric.symmetry_defect() < 1e-8

    def test_rejects_singular_Y0(self):
        with pytest.raises(ValueError, match="nonsingular"):
            evolve_yz(ZERO_D, np.diag([0.0, 1.0, 1.0]), 1j * EYE, (0.0, 1.0))

    def test_rejects_asymmetric_H0(self):
        H0 = 1j * EYE + np.array([[0.0, 0.3, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        with pytest.raises(ValueError, match="symmetric"):
            evolve_yz(ZERO_D, EYE, H0, (0.0, 1.0))

    def test_rejects_wrong_sign_height(self):
        with pytest.raises(ValueError, match="positive definite"):
            evolve_yz(ZERO_D, EYE, -1j * EYE, (0.0, 1.0))

    def test_rejects_tau0_outside_interval(self):
        with pytest.raises(ValueError, match="inside"):
            evolve_yz(ZERO_D, EYE, 1j * EYE, (0.0, 1.0), tau0=2.0)

    def test_unphysical_coefficient_breaks_positivity(self):
        # an imaginary coefficient matrix violates the conservation structure
        bad = lambda tau: np.diag([0.0, 4.0j, 4.0j])
        with pytest.raises(RiccatiPositivityError):
            evolve_yz(bad, EYE, 1j * EYE, (0.0, 3.0))

    def test_coarse_grid_cannot_track_fast_branches(self):
        stiff = lambda tau: np.diag([0.0, 400.0, 400.0])
        with pytest.raises(BranchTrackingError):
            evolve_yz(stiff, EYE, 1j * EYE, (0.0, 3.0), n_grid=30)


def _ray_and_frame(m, x0, d, radius=1.0, center=(0.0, 0.0, 0.0)):
    dom = ball(center, radius)
    path = trace_geodesic(m, WaveMode.S, x0, d, dom)
    return path, parallel_transport(path, m)


class TestCurvatureCoefficient:
    def test_constant_medium_curvature_vanishes(self, constant_medium):
        path, frame = _ray_and_frame(constant_medium, (0.0, 0.1, 0.0), (1.0, 0.5, 0.2))
        D = build_D_along_ray(path, frame, constant_medium)
        for tau in (-0.5, 0.0, 0.8):
            np.testing.assert_allclose(D(tau), np.zeros((3, 3)), atol=1e-12)

    def test_linear_speed_gives_constant_negative_curvature(self):
        # c = x3 on a ball away from the plane x3 = 0: K = -|grad c|^2 I = -I
        m = IsotropicMedium(
            lam=ConstantField(1.0),
            mu=ExpressionField("x3*x3"),
            rho=ConstantField(1.0),
            modA=ConstantField(0.0),
            modB=ConstantField(0.0),
            modC=ConstantField(0.0),
        )
        path, frame = _ray_and_frame(m, (0.0, 0.0, 2.0), (1.0, 0.3, 0.1), center=(0, 0, 2))
        D = build_D_along_ray(path, frame, m)
        for tau in (-0.6, 0.0, 0.4, 0.9):
            np.testing.assert_allclose(D.curvature(tau), -np.eye(2), atol=1e-9)
            np.testing.assert_allclose(D(tau)[1:, 1:], -0.25 * np.eye(2), atol=1e-9)
            assert np.all(D(tau)[0, :] == 0.0) and np.all(D(tau)[:, 0] == 0.0)

    def test_one_dimensional_profile_along_the_axis(self):
        # ray along x1 in c = c(x1): K = (c c'' - c'^2) I at the axis point
        m = IsotropicMedium(
            lam=ConstantField(1.0),
            mu=ExpressionField("(1 + 0.3*sin(x1))**2"),
            rho=ConstantField(1.0),
            modA=ConstantField(0.0),
            modB=ConstantField(0.0),
            modC=ConstantField(0.0),
        )
        path, frame = _ray_and_frame(m, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), radius=1.4)
        D = build_D_along_ray(path, frame, m)
        for tau in (-1.0, -0.2, 0.3, 1.2):
            x1 = path.position(tau / math.sqrt(2.0))[0]
            c = 1.0 + 0.3 * math.sin(x1)
            cpp = -0.3 * math.sin(x1)
            cp = 0.3 * math.cos(x1)
            expect = (c * cpp - cp * cp) * np.eye(2)
            np.testing.assert_allclose(D.curvature(tau), expect, atol=1e-9)

    def test_curvature_matches_difference_quotients(self, varying_medium):
        path, frame = _ray_and_frame(
            varying_medium, (0.1, -0.2, 0.0), (0.8, 0.4, -0.3)
        )
        D = build_D_along_ray(path, frame, varying_medium)
        mode = WaveMode.S
        for tau in (-0.4, 0.2, 0.7):
            s = tau / math.sqrt(2.0)
            x = path.position(s)
            v = path.velocity(s)
            c = varying_medium.wavespeed(x, mode)
            grad = orc.central_gradient(lambda y: varying_medium.wavespeed(y, mode), x)
            hess = orc.central_hessian(lambda y: varying_medium.wavespeed(y, mode), x)
            that = v / np.linalg.norm(v)
            N = np.stack([frame.e2(s) / c, frame.e3(s) / c], axis=1)
            expect = c * (float(that @ hess @ that) * np.eye(2) + N.T @ hess @ N)
            expect -= float(grad @ grad) * np.eye(2)
            assert np.max(np.abs(D.curvature(tau) - expect)) < 1e-5

    def test_symmetry_along_random_rays(self, varying_medium, rng):
        for _ in range(3):
            x0 = rng.uniform(-0.3, 0.3, size=3)
            d = rng.normal(size=3)
            path, frame = _ray_and_frame(varying_medium, x0, d)
            D = build_D_along_ray(path, frame, varying_medium)
            for tau in rng.uniform(-0.5, 0.5, size=3):
                M = D(float(tau))
                np.testing.assert_allclose(M, M.T, atol=1e-12)

    def test_evolution_driven_by_a_traced_ray_conserves(self, varying_medium):
        path, frame = _ray_and_frame(varying_medium, (0.0, 0.1, -0.1), (0.5, 1.0, 0.4))
        D = build_D_along_ray(path, frame, varying_medium)
        root2 = math.sqrt(2.0)
        ric = evolve_yz(
            D, EYE, 1j * EYE, (root2 * path.s_minus, root2 * path.s_plus), tau0=0.0
        )
        assert ric.conservation_defect() < 1e-8
