"""Tension, bitension, energy density and harmonicity classification."""

import numpy as np
import pytest

from bergerdeform.deform import build_context
from bergerdeform.expr import parse_expression
from bergerdeform.manifolds import MapSpec, with_alpha
from bergerdeform.maps import (
    bitension_identity_from_deformed,
    bitension_identity_to_deformed,
    classify_biharmonic,
    energy_density,
    identity_harmonicity,
    map_harmonicity,
    tension_identity_from_deformed,
    tension_identity_to_deformed,
    tension_map_from_deformed,
    tension_map_to_deformed,
)
from bergerdeform.oracle import oracle_bitension, oracle_tension
from bergerdeform.sampling import sample_points


def make_map(source, target, components, deformed):
    comps = tuple(parse_expression(c, source.coordinates) for c in components)
    return MapSpec(source=source, target=target, components=comps, deformed=deformed)


def identity_map(spec, deformed):
    return make_map(spec, spec, list(spec.coordinates), deformed)


class TestIdentityTension:
    def test_to_deformed_hand_value(self, flat2):
        ctx = build_context(flat2, np.array([[1.0, 0.6]]))
        np.testing.assert_allclose(
            tension_identity_to_deformed(ctx)[0], [-0.5, 0.0], atol=1e-14
        )

    def test_to_deformed_constant_alpha_is_harmonic(self, const2):
        ctx = build_context(const2, sample_points(const2.domain, 40, 3))
        np.testing.assert_array_equal(tension_identity_to_deformed(ctx), 0.0)

    def test_to_deformed_matches_oracle(self, curved4):
        pts = sample_points(curved4.domain, 80, 5)
        ctx = build_context(curved4, pts)
        closed = tension_identity_to_deformed(ctx)
        orac = oracle_tension(identity_map(curved4, "target"), pts)
        np.testing.assert_allclose(closed, orac, atol=1e-7)

    def test_from_deformed_dimension_two_vanishes(self, flat2):
        ctx = build_context(flat2, sample_points(flat2.domain, 50, 3))
        np.testing.assert_array_equal(tension_identity_from_deformed(ctx), 0.0)

    def test_from_deformed_flat4_hand_value(self, flat4):
        ctx = build_context(flat4, np.array([[0.3, 1.0, -0.2, 2.0]]))
        np.testing.assert_allclose(
            tension_identity_from_deformed(ctx)[0], [0.0, 0.5, 0.0, 0.0], atol=1e-14
        )

    def test_from_deformed_matches_oracle(self, flat4):
        pts = sample_points(flat4.domain, 80, 5)
        ctx = build_context(flat4, pts)
        closed = tension_identity_from_deformed(ctx)
        orac = oracle_tension(identity_map(flat4, "source"), pts)
        np.testing.assert_allclose(closed, orac, atol=1e-7)


class TestMapTension:
    def test_identity_reduction_to_deformed(self, flat2, flat4, curved4):
        for spec in (flat2, flat4, curved4):
            pts = sample_points(spec.domain, 60, 7)
            mp = identity_map(spec, "target")
            closed_map = tension_map_to_deformed(mp, pts)
            closed_identity = tension_identity_to_deformed(build_context(spec, pts))
            np.testing.assert_allclose(closed_map, closed_identity, atol=1e-8)

    def test_identity_reduction_from_deformed(self, flat2, flat4, curved4):
        for spec in (flat2, flat4, curved4):
            pts = sample_points(spec.domain, 60, 7)
            mp = identity_map(spec, "source")
            closed_map = tension_map_from_deformed(mp, pts)
            closed_identity = tension_identity_from_deformed(build_context(spec, pts))
            np.testing.assert_allclose(closed_map, closed_identity, atol=1e-8)

    def test_constant_map_has_zero_tension(self, flat2, flat4):
        mp = make_map(flat2, flat4, ["0.5", "1", "-0.25", "0"], "target")
        pts = sample_points(flat2.domain, 30, 9)
        np.testing.assert_allclose(tension_map_to_deformed(mp, pts), 0.0, atol=1e-15)
        np.testing.assert_allclose(oracle_tension(mp, pts), 0.0, atol=1e-15)

    def test_linear_map_constant_alpha(self, flat2, const2):
        mp = make_map(flat2, const2, ["0.3*x + 0.2*y", "0.1*x - 0.4*y"], "target")
        pts = sample_points(flat2.domain, 30, 9)
        np.testing.assert_allclose(tension_map_to_deformed(mp, pts), 0.0, atol=1e-14)

    def test_general_map_to_deformed_matches_oracle(self, flat2, flat4):
        mp = make_map(
            flat2, flat4,
            ["0.4*x + 0.1*y^2", "sin(x)", "0.2*x*y", "cos(y) - 1"],
            "target",
        )
        pts = sample_points(flat2.domain, 80, 11)
        closed = tension_map_to_deformed(mp, pts)
        orac = oracle_tension(mp, pts)
        np.testing.assert_allclose(closed, orac, atol=1e-7)

    def test_general_map_from_deformed_matches_oracle(self, flat4, flat2):
        mp = make_map(
            flat4, flat2,
            ["0.3*x1 + 0.1*x3^2", "0.2*x2*x4 - sin(x3)/2"],
            "source",
        )
        pts = sample_points(flat4.domain, 80, 11)
        closed = tension_map_from_deformed(mp, pts)
        orac = oracle_tension(mp, pts)
        np.testing.assert_allclose(closed, orac, atol=1e-7)

    def test_wrong_tag_rejected(self, flat2):
        mp = identity_map(flat2, "none")
        with pytest.raises(ValueError):
            tension_map_to_deformed(mp, np.array([[0.0, 0.0]]))


class TestEnergyDensity:
    def test_identity_base_to_base(self, flat4):
        mp = identity_map(flat4, "none")
        e = energy_density(mp, sample_points(flat4.domain, 20, 13))
        np.testing.assert_allclose(e, 2.0, rtol=1e-14)  # m = dim/2

    def test_constant_map(self, flat2, flat4):
        mp = make_map(flat2, flat4, ["0", "0", "0", "0"], "none")
        e = energy_density(mp, sample_points(flat2.domain, 20, 13))
        np.testing.assert_array_equal(e, 0.0)

    def test_identity_into_deformed(self, flat2):
        pts = sample_points(flat2.domain, 20, 13)
        mp = identity_map(flat2, "target")
        e = energy_density(mp, pts)
        alpha = 1 + pts[:, 0] ** 2
        np.testing.assert_allclose(e, 1.5 * alpha, rtol=1e-14)


class TestBitension:
    def test_to_deformed_hand_value(self, flat2):
        ctx = build_context(flat2, np.array([[1.0, -0.8]]))
        np.testing.assert_allclose(
            bitension_identity_to_deformed(ctx)[0], [-0.625, 0.0], atol=1e-12
        )

    def test_constant_alpha_vanishes(self, const2):
        ctx = build_context(const2, sample_points(const2.domain, 30, 15))
        np.testing.assert_allclose(bitension_identity_to_deformed(ctx), 0.0, atol=1e-15)

    def test_to_deformed_matches_oracle(self, flat2, flat4, curved4):
        for spec in (flat2, flat4, curved4):
            pts = sample_points(spec.domain, 60, 15)
            ctx = build_context(spec, pts)
            closed = bitension_identity_to_deformed(ctx)
            orac = oracle_bitension(spec, pts, "to-deformed")
            np.testing.assert_allclose(closed, orac, atol=1e-6)

    def test_killing_alpha_against_oracle(self, killing2):
        pts = sample_points(killing2.domain, 60, 15)
        ctx = build_context(killing2, pts)
        closed = bitension_identity_to_deformed(ctx)
        orac = oracle_bitension(killing2, pts, "to-deformed")
        np.testing.assert_allclose(closed, orac, atol=1e-6)
        # only the |grad|^2 family survives for a Killing potential
        a = ctx.alpha
        expect = (-1.0 / (2 * a))[..., None] * (
            -(5.0 * ctx.grad_norm_sq / (4 * a**2))[..., None] * ctx.grad
        )
        np.testing.assert_allclose(closed, expect, atol=1e-12)

    def test_from_deformed_m1_identically_zero(self, flat2):
        ctx = build_context(flat2, sample_points(flat2.domain, 40, 15))
        out = bitension_identity_from_deformed(ctx)
        np.testing.assert_array_equal(out, 0.0)

    def test_from_deformed_flat4_hand_value(self, flat4):
        ctx = build_context(flat4, np.array([[0.1, 1.0, 0.4, -2.2]]))
        np.testing.assert_allclose(
            bitension_identity_from_deformed(ctx)[0], [0.0, 0.25, 0.0, 0.0], atol=1e-12
        )

    def test_from_deformed_matches_oracle(self, flat4, curved4):
        for spec in (flat4, curved4):
            pts = sample_points(spec.domain, 60, 15)
            ctx = build_context(spec, pts)
            closed = bitension_identity_from_deformed(ctx)
            orac = oracle_bitension(spec, pts, "from-deformed")
            np.testing.assert_allclose(closed, orac, atol=1e-6)


class TestClassification:
    def test_harmonic_constant_alpha(self, const2):
        res = identity_harmonicity(const2, "to-deformed")
        assert res.harmonic and res.reason == "alpha is constant"

    def test_not_harmonic_to_deformed(self, flat2):
        res = identity_harmonicity(flat2, "to-deformed")
        assert not res.harmonic
        assert res.residual > 0.4  # |tau| = 0.5 in the deformed norm at x = 1

    def test_from_deformed_dimension_two(self, flat2):
        res = identity_harmonicity(flat2, "from-deformed")
        assert res.harmonic and res.reason == "dim M = 2"

    def test_harmonicity_characterization(self, flat2):
        """Tension residual tracks max |grad alpha| (2m-1)/(2 alpha) pointwise."""
        pts = sample_points(flat2.domain, 120, 17)
        ctx = build_context(flat2, pts)
        tau = tension_identity_to_deformed(ctx)
        # the deformed norm of grad alpha: |grad a|_{g^a} = sqrt(a) |grad a|_g here
        lhs = np.sqrt(np.einsum("...ij,...i,...j->...", ctx.deformed, tau, tau))
        rhs = np.abs(2 * ctx.m - 1) / (2 * ctx.alpha) * np.sqrt(
            np.einsum("...ij,...i,...j->...", ctx.deformed, ctx.grad, ctx.grad)
        )
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12)

    def test_map_harmonicity_linear_flat(self, flat2, const2):
        mp = make_map(flat2, const2, ["0.3*x + 0.2*y", "0.1*x - 0.4*y"], "target")
        assert map_harmonicity(mp).harmonic

    def test_biharmonic_classifications(self, flat2, flat4, const2):
        assert classify_biharmonic(const2, "to-deformed").classification == "harmonic"
        assert classify_biharmonic(const2, "from-deformed").classification == "harmonic"
        assert classify_biharmonic(flat2, "from-deformed").classification == "harmonic"
        res = classify_biharmonic(flat2, "to-deformed")
        assert res.classification == "not-biharmonic"
        assert res.bitension_residual > 0.1
        assert classify_biharmonic(flat4, "to-deformed").classification == "not-biharmonic"
