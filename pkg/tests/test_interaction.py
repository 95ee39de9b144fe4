"""Quadratic source tensor, matched shear-shear-compressional geometry, and
the interaction amplitude, checked against the frozen loop oracles."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as orc
from elastobeam import (
    DegenerateConfigError,
    InconsistentDataError,
    Moduli,
    amplitude_A,
    ball,
    build_ssp_beam_triple,
    build_ssp_directions,
    combination_ratio,
    divergence_identity_check,
    inplane_closed_form,
    interaction_density,
    normal_dot_G,
    oscillatory_interaction_integral,
    perp_closed_form,
    quadratic_source_G,
)


def random_moduli(rng):
    cs = rng.uniform(0.5, 1.5)
    cp = cs * rng.uniform(1.3, 2.5)
    rho = rng.uniform(0.5, 2.0)
    mu = rho * cs * cs
    lam = rho * cp * cp - 2.0 * mu
    a, b, c = rng.uniform(-1.0, 1.0, size=3)
    return Moduli(lam=lam, mu=mu, rho=rho, modA=a, modB=b, modC=c), cp, cs


def random_gradient(rng):
    return rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))


class TestSourceTensor:
    def test_identity_gradients_pinned(self):
        mod = Moduli(lam=2.0, mu=1.0, rho=1.0, modA=0.0, modB=0.0, modC=0.0)
        eye = np.eye(3)
        G = quadratic_source_G(eye, eye, mod)
        assert np.allclose(G, 24.0 * np.eye(3), atol=1e-13)
        assert interaction_density(eye, eye, eye, mod) == pytest.approx(72.0, abs=1e-12)

    def test_tensor_matches_loop_oracle(self, rng):
        for _ in range(40):
            mod, _, _ = random_moduli(rng)
            g1, g2 = random_gradient(rng), random_gradient(rng)
            got = quadratic_source_G(g1, g2, mod)
            want = orc.loop_source_tensor(g1, g2, mod.lam, mod.mu, mod.modA, mod.modB, mod.modC)
            assert np.max(np.abs(got - want)) < 1e-12 * max(1.0, np.max(np.abs(want)))

    def test_density_matches_loop_oracle(self, rng):
        for _ in range(40):
            mod, _, _ = random_moduli(rng)
            g1, g2, g0 = (random_gradient(rng) for _ in range(3))
            got = interaction_density(g1, g2, g0, mod)
            want = orc.loop_density(g1, g2, g0, mod.lam, mod.mu, mod.modA, mod.modB, mod.modC)
            assert abs(got - want) < 1e-12 * max(1.0, abs(want))

    def test_batched_evaluation_matches_per_item(self, rng):
        mod, _, _ = random_moduli(rng)
        g1 = rng.standard_normal((4, 5, 3, 3)) + 1j * rng.standard_normal((4, 5, 3, 3))
        g2 = rng.standard_normal((4, 5, 3, 3))
        g0 = rng.standard_normal((4, 5, 3, 3))
        dens = interaction_density(g1, g2, g0, mod)
        G = quadratic_source_G(g1, g2, mod)
        assert dens.shape == (4, 5)
        assert G.shape == (4, 5, 3, 3)
        for i in range(4):
            for j in range(5):
                one = interaction_density(g1[i, j], g2[i, j], g0[i, j], mod)
                assert abs(dens[i, j] - one) < 1e-13 * max(1.0, abs(one))
                assert np.allclose(G[i, j], quadratic_source_G(g1[i, j], g2[i, j], mod))

    def test_symmetric_in_first_two_slots(self, rng):
        mod, _, _ = random_moduli(rng)
        g1, g2, g0 = (random_gradient(rng) for _ in range(3))
        assert np.allclose(
            quadratic_source_G(g1, g2, mod), quadratic_source_G(g2, g1, mod), atol=1e-13
        )
        assert interaction_density(g1, g2, g0, mod) == pytest.approx(
            interaction_density(g2, g1, g0, mod), rel=1e-13
        )

    def test_trilinear_scaling(self, rng):
        mod, _, _ = random_moduli(rng)
        g1, g2, g0 = (random_gradient(rng) for _ in range(3))
        base = interaction_density(g1, g2, g0, mod)
        for s, slot in ((2.5, 0), (-1.25j, 1), (0.75 + 0.5j, 2)):
            args = [g1, g2, g0]
            args[slot] = s * args[slot]
            assert interaction_density(*args, mod) == pytest.approx(s * base, rel=1e-12)

    def test_density_is_contraction_of_tensor(self, rng):
        for _ in range(20):
            mod, _, _ = random_moduli(rng)
            g1, g2, g0 = (random_gradient(rng) for _ in range(3))
            direct = interaction_density(g1, g2, g0, mod)
            contracted = np.sum(quadratic_source_G(g1, g2, mod) * g0)
            assert abs(direct - contracted) < 1e-13 * max(1.0, abs(direct))

    def test_normal_contraction(self, rng):
        G = random_gradient(rng)
        nu = rng.standard_normal(3)
        assert np.allclose(normal_dot_G(G, nu), G @ nu, atol=1e-14)
        batch = rng.standard_normal((7, 3, 3))
        nus = rng.standard_normal((7, 3))
        rows = normal_dot_G(batch, nus)
        for k in range(7):
            assert np.allclose(rows[k], batch[k] @ nus[k], atol=1e-14)

    def test_third_order_C_enters_only_through_traces(self, rng):
        mod, _, _ = random_moduli(rng)
        shifted = Moduli(mod.lam, mod.mu, mod.rho, mod.modA, mod.modB, mod.modC + 3.0)
        g1, g2, g0 = (random_gradient(rng) for _ in range(3))
        gap = interaction_density(g1, g2, g0, shifted) - interaction_density(g1, g2, g0, mod)
        expected = 2.0 * 3.0 * np.trace(g1) * np.trace(g2) * np.trace(g0)
        assert abs(gap - expected) < 1e-12 * max(1.0, abs(expected))
        # trace-free first slot kills the dependence entirely
        g1 = g1 - np.trace(g1) / 3.0 * np.eye(3)
        same = interaction_density(g1, g2, g0, shifted) - interaction_density(g1, g2, g0, mod)
        assert abs(same) < 1e-12

    def test_zero_gradients_give_zero(self):
        mod = Moduli(2.0, 1.0, 1.0, 0.3, 0.2, 0.1)
        z = np.zeros((3, 3))
        assert np.all(quadratic_source_G(z, z, mod) == 0.0)
        assert interaction_density(z, np.eye(3), np.eye(3), mod) == 0.0


# polynomial displacement fields with hand-written Jacobians, used to probe
# the integration-by-parts identity on an ellipsoid


def _fields_a():
    def value(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([x1 * x1, x2 * x3, x1 + x3 * x3], axis=-1)

    def jac(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        z, o = np.zeros_like(x1), np.ones_like(x1)
        return np.stack(
            [
                np.stack([2.0 * x1, z, z], axis=-1),
                np.stack([z, x3, x2], axis=-1),
                np.stack([o, z, 2.0 * x3], axis=-1),
            ],
            axis=-2,
        )

    return value, jac


def _fields_b():
    def value(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([x2 - x1 * x3, x1 * x1, x2 * x2], axis=-1)

    def jac(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        z, o = np.zeros_like(x1), np.ones_like(x1)
        return np.stack(
            [
                np.stack([-x3, o, -x1], axis=-1),
                np.stack([2.0 * x1, z, z], axis=-1),
                np.stack([z, 2.0 * x2, z], axis=-1),
            ],
            axis=-2,
        )

    return value, jac


def _fields_c():
    def value(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([x3 * x3, x1 * x2, x1 - x2], axis=-1)

    def jac(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        z, o = np.zeros_like(x1), np.ones_like(x1)
        return np.stack(
            [
                np.stack([z, z, 2.0 * x3], axis=-1),
                np.stack([x2, x1, z], axis=-1),
                np.stack([o, -o, z], axis=-1),
            ],
            axis=-2,
        )

    return value, jac


class TestDivergenceIdentity:
    def test_jacobians_are_consistent(self):
        # guard the hand-written Jacobians against typos before using them
        rng = np.random.default_rng(7)
        pts = rng.uniform(-1.0, 1.0, size=(20, 3))
        for value, jac in (_fields_a(), _fields_b(), _fields_c()):
            for p in pts:
                fd = np.stack(
                    [orc.central_gradient(lambda y, m=m: value(y[None])[0, m], p) for m in range(3)]
                )
                assert np.max(np.abs(jac(p[None])[0] - fd)) < 1e-8

    def test_constant_medium_identity(self, constant_medium):
        res = divergence_identity_check(
            _fields_a(), _fields_b(), _fields_c(), constant_medium, ball((0.0, 0.0, 0.0), 1.0)
        )
        assert res < 1e-6

    def test_varying_medium_identity(self, varying_medium):
        res = divergence_identity_check(
            _fields_b(), _fields_c(), _fields_a(), varying_medium, ball((0.1, 0.0, -0.2), 0.9)
        )
        assert res < 1e-6


class TestMatchedDirections:
    def test_ratio_pinned_values(self):
        assert combination_ratio(0.0, 2.0, 1.0) == pytest.approx(0.5, rel=1e-14)
        assert combination_ratio(math.pi / 2.0, 2.0, 1.0) == pytest.approx(0.75, rel=1e-14)

    @given(
        psi=st.floats(0.0, math.pi - 0.2),
        cs=st.floats(0.5, 2.0),
        speed_ratio=st.floats(1.2, 3.0),
    )
    def test_matched_combination_identities(self, psi, cs, speed_ratio):
        cp = cs * speed_ratio
        xi1 = np.array([0.0, 0.0, 1.0])
        xi0 = np.array([math.sin(psi), 0.0, math.cos(psi)])
        cfg = build_ssp_directions(xi1, xi0, cp, cs, kind="PERP")
        a = combination_ratio(psi, cp, cs)
        assert cfg.ratio == pytest.approx(a, rel=1e-13)

        norm = np.linalg.norm(cfg.xi2_raw)
        assert norm == pytest.approx((cp - a * cs) / cs, rel=1e-12)
        # the matched combination lies on the compressional characteristic cone
        lhs = (a * cs - cp) ** 2
        rhs = cs * cs * float(cfg.xi2_raw @ cfg.xi2_raw)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)

        assert float(cfg.xi1 @ cfg.xi2_raw) == pytest.approx(a + math.cos(psi), abs=1e-12)
        assert float(cfg.xi2_raw @ cfg.xi0) == pytest.approx(
            1.0 + a * math.cos(psi), abs=1e-12
        )
        want_cos = (a + math.cos(psi)) / math.sqrt(a * a + 2.0 * a * math.cos(psi) + 1.0)
        assert math.cos(cfg.alpha) == pytest.approx(want_cos, abs=1e-12)

    def test_inplane_sign_table(self):
        for psi in (0.3, 0.9, 1.5, 2.4):
            xi1 = np.array([1.0, 0.0, 0.0])
            xi0 = np.array([math.cos(psi), -math.sin(psi), 0.0])
            cfg = build_ssp_directions(xi1, xi0, 2.0, 1.0, kind="INPLANE")
            al = cfg.alpha
            assert np.allclose(cfg.alpha1, [0.0, 1.0, 0.0], atol=1e-12)
            assert float(cfg.alpha2 @ cfg.xi1) == pytest.approx(math.sin(al), abs=1e-12)
            assert float(cfg.alpha1 @ cfg.xi2) == pytest.approx(-math.sin(al), abs=1e-12)
            assert float(cfg.alpha1 @ cfg.xi0) == pytest.approx(-math.sin(psi), abs=1e-12)
            assert float(cfg.alpha2 @ cfg.xi0) == pytest.approx(math.sin(al - psi), abs=1e-12)
            assert float(cfg.alpha1 @ cfg.alpha2) == pytest.approx(math.cos(al), abs=1e-12)

    def test_perp_polarizations_share_the_plane_normal(self, rng):
        for _ in range(20):
            xi1 = rng.standard_normal(3)
            xi0 = rng.standard_normal(3)
            cfg = build_ssp_directions(xi1, xi0, 2.0, 1.0, kind="PERP")
            assert np.allclose(cfg.alpha1, cfg.alpha2, atol=1e-14)
            assert abs(float(cfg.alpha1 @ cfg.xi1)) < 1e-12
            assert abs(float(cfg.alpha2 @ cfg.xi2)) < 1e-12
            assert np.linalg.norm(cfg.alpha1) == pytest.approx(1.0, abs=1e-13)

    def test_collinear_perp_uses_fallback_polarization(self):
        cfg = build_ssp_directions([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 2.0, 1.0, kind="PERP")
        assert cfg.psi == pytest.approx(0.0, abs=1e-8)
        assert abs(float(cfg.alpha1 @ cfg.xi1)) < 1e-12
        assert np.linalg.norm(cfg.alpha1) == pytest.approx(1.0, abs=1e-13)

    def test_collinear_inplane_is_degenerate(self):
        with pytest.raises(DegenerateConfigError, match="in-plane polarizations"):
            build_ssp_directions([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 2.0, 1.0, kind="INPLANE")

    def test_bad_speeds_and_kind_rejected(self):
        with pytest.raises(ValueError, match="0 < cS < cP"):
            build_ssp_directions([1, 0, 0], [0, 1, 0], 1.0, 1.0)
        with pytest.raises(ValueError, match="0 < cS < cP"):
            build_ssp_directions([1, 0, 0], [0, 1, 0], 1.0, 2.0)
        with pytest.raises(ValueError, match="kind must be"):
            build_ssp_directions([1, 0, 0], [0, 1, 0], 2.0, 1.0, kind="SIDEWAYS")


class TestAmplitude:
    def test_pinned_perp_value(self):
        mod = Moduli(lam=2.0, mu=1.0, rho=1.0, modA=0.3, modB=0.2, modC=0.7)
        cfg = build_ssp_directions([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 2.0, 1.0, kind="PERP")
        value, scaled = amplitude_A(cfg, mod)
        assert scaled == pytest.approx(6.525, rel=1e-12)
        assert value == pytest.approx(6.525 / (2.0**2.5 * 1.0**5 * 1.0**1.5), rel=1e-12)

    def test_density_route_matches_closed_forms(self, rng):
        for kind, closed in (("PERP", perp_closed_form), ("INPLANE", inplane_closed_form)):
            for _ in range(100):
                mod, cp, cs = random_moduli(rng)
                xi1 = rng.standard_normal(3)
                xi0 = rng.standard_normal(3)
                try:
                    cfg = build_ssp_directions(xi1, xi0, cp, cs, kind=kind)
                except DegenerateConfigError:
                    continue
                _, scaled = amplitude_A(cfg, mod)
                want = closed(cfg, mod)
                assert abs(scaled - want) <= 1e-10 * max(1.0, abs(want))

    def test_normalizers_divide_the_value(self, rng):
        mod, cp, cs = random_moduli(rng)
        cfg = build_ssp_directions(rng.standard_normal(3), rng.standard_normal(3), cp, cs)
        plain, scaled = amplitude_A(cfg, mod)
        value, scaled2 = amplitude_A(cfg, mod, normalizers=(2.0, 3.0, 4.0))
        assert scaled2 == scaled
        assert value == pytest.approx(plain / 24.0, rel=1e-13)
        denom = cp**2.5 * cs**5 * mod.rho**1.5
        assert plain == pytest.approx(scaled / denom, rel=1e-13)

    def test_third_order_C_never_enters(self, rng):
        for kind in ("PERP", "INPLANE"):
            mod, cp, cs = random_moduli(rng)
            other = Moduli(mod.lam, mod.mu, mod.rho, mod.modA, mod.modB, mod.modC + 9.0)
            cfg = build_ssp_directions(rng.standard_normal(3), rng.standard_normal(3), cp, cs, kind=kind)
            a1 = amplitude_A(cfg, mod)
            a2 = amplitude_A(cfg, other)
            assert abs(a1[1] - a2[1]) < 1e-12
            assert abs(a1[0] - a2[0]) < 1e-12

    def test_inplane_closed_form_aligned_limit(self):
        # as the opening angle closes, the in-plane value tends to the
        # aligned combination lam + 2 mu + B + A/2
        mod = Moduli(lam=2.0, mu=1.0, rho=1.0, modA=0.3, modB=0.2, modC=0.0)
        psi = 1e-6
        xi1 = np.array([1.0, 0.0, 0.0])
        xi0 = np.array([math.cos(psi), -math.sin(psi), 0.0])
        cfg = build_ssp_directions(xi1, xi0, 2.0, 1.0, kind="INPLANE")
        _, scaled = amplitude_A(cfg, mod)
        assert abs(scaled - (2.0 + 2.0 + 0.2 + 0.15)) < 1e-10

    def test_rescaled_form_is_symmetric_under_shear_swap(self, rng):
        # dividing by |xi2_raw| leaves the symmetric bilinear form
        # (lam+B) u.v + (2 mu + A/2)(u.xi0)(v.xi0) evaluated on the two
        # unit shear directions, in either order
        def bilinear(u, v, xi0, mod):
            return (mod.lam + mod.modB) * float(u @ v) + (
                2.0 * mod.mu + mod.modA / 2.0
            ) * float(u @ xi0) * float(v @ xi0)

        for _ in range(30):
            mod, cp, cs = random_moduli(rng)
            cfg = build_ssp_directions(
                rng.standard_normal(3), rng.standard_normal(3), cp, cs, kind="PERP"
            )
            _, scaled = amplitude_A(cfg, mod)
            norm = np.linalg.norm(cfg.xi2_raw)
            forward = bilinear(cfg.xi1, cfg.xi2, cfg.xi0, mod)
            backward = bilinear(cfg.xi2, cfg.xi1, cfg.xi0, mod)
            assert scaled / norm == pytest.approx(forward, rel=1e-12)
            assert forward == pytest.approx(backward, rel=1e-14)


class TestBeamTriple:
    @pytest.fixture()
    def triple(self, constant_medium):
        cfg = build_ssp_directions(
            [0.0, 0.0, 1.0], [math.sin(0.9), 0.0, math.cos(0.9)], 2.0, 1.0, kind="PERP"
        )
        return build_ssp_beam_triple(constant_medium, cfg, point=(0.0, 0.0, 0.0), delta=4.0)

    def test_frequency_multipliers(self, triple):
        a = triple.config.ratio
        root2 = math.sqrt(2.0)
        betas = [b.beta for b in triple.beams]
        assert betas[0] == pytest.approx(root2 * a * 1.0, rel=1e-13)
        assert betas[1] == pytest.approx(root2 * (2.0 - a * 1.0), rel=1e-13)
        assert betas[2] == pytest.approx(root2 * 2.0, rel=1e-13)
        assert [b.conjugate for b in triple.beams] == [True, True, False]
        assert [b.speed for b in triple.beams] == [1.0, 1.0, 2.0]

    def test_tangents_and_polarizations(self, triple):
        cfg = triple.config
        assert np.allclose(triple.beams[0].tangent, -cfg.xi1, atol=1e-14)
        assert np.allclose(triple.beams[1].tangent, cfg.xi2, atol=1e-14)
        assert np.allclose(triple.beams[2].tangent, cfg.xi0, atol=1e-14)
        assert np.allclose(triple.beams[0].polarization, cfg.alpha1, atol=1e-14)
        assert np.allclose(triple.beams[1].polarization, cfg.alpha2, atol=1e-14)
        assert np.allclose(triple.beams[2].polarization, cfg.xi0, atol=1e-14)

    def test_linear_phases_cancel(self, triple):
        # conjugated beams contribute with a minus sign; the signed sum of
        # the frequency-weighted on-axis phase covectors must vanish
        total = np.zeros(4)
        for beam in triple.beams:
            sign = -1.0 if beam.conjugate else 1.0
            total += sign * beam.beta * beam.phase_rows()[0]
        assert np.max(np.abs(total)) < 1e-12

    def test_needs_constant_medium(self, varying_medium):
        cfg = build_ssp_directions([0, 0, 1.0], [1.0, 0, 0], 2.0, 1.0)
        with pytest.raises(InconsistentDataError, match="constant medium"):
            build_ssp_beam_triple(varying_medium, cfg, point=(0, 0, 0))

    def test_wavespeed_mismatch_rejected(self, constant_medium):
        cfg = build_ssp_directions([0, 0, 1.0], [1.0, 0, 0], 3.0, 1.0)
        with pytest.raises(InconsistentDataError, match="do not match the medium"):
            build_ssp_beam_triple(constant_medium, cfg, point=(0, 0, 0))

    def test_integral_shapes(self, triple, constant_medium):
        dom = ball((0.0, 0.0, 0.0), 50.0)
        single = oscillatory_interaction_integral(
            triple, constant_medium, dom, varrhos=[160.0, 320.0], n_points=5
        )
        assert single.shape == (2,)
        assert single.dtype == complex
        sets = [constant_medium.constant_values(), Moduli(2.0, 1.0, 1.0, 0.0, 0.0, 0.0)]
        table = oscillatory_interaction_integral(
            triple, constant_medium, dom, varrhos=[160.0], moduli_sets=sets, n_points=5
        )
        assert table.shape == (2, 1)

    def test_even_point_count_rejected(self, triple, constant_medium):
        with pytest.raises(ValueError, match="odd number"):
            oscillatory_interaction_integral(
                triple, constant_medium, ball((0, 0, 0), 50.0), varrhos=[60.0], n_points=4
            )

    def test_narrow_cutoff_rejected(self, constant_medium):
        cfg = build_ssp_directions(
            [0.0, 0.0, 1.0], [math.sin(0.9), 0.0, math.cos(0.9)], 2.0, 1.0
        )
        narrow = build_ssp_beam_triple(constant_medium, cfg, point=(0, 0, 0), delta=0.2)
        with pytest.raises(ValueError, match="cutoff plateau"):
            oscillatory_interaction_integral(
                narrow, constant_medium, ball((0, 0, 0), 50.0), varrhos=[20.0], n_points=5
            )

    def test_small_domain_warns(self, constant_medium):
        cfg = build_ssp_directions(
            [0.0, 0.0, 1.0], [math.sin(0.9), 0.0, math.cos(0.9)], 2.0, 1.0
        )
        wide = build_ssp_beam_triple(constant_medium, cfg, point=(0, 0, 0), delta=60.0)
        with pytest.warns(UserWarning, match="outside the domain"):
            oscillatory_interaction_integral(
                wide, constant_medium, ball((0, 0, 0), 1e-3), varrhos=[20.0], n_points=5
            )
