"""Chart-level geometry: connections, curvature, field calculus, frames."""

import numpy as np
import pytest

from bergerdeform.chart import (
    ChartDomainError,
    ChartGeometry,
    FrameError,
    christoffel_at,
    frame_with_vector_last,
    gradient_at,
    gram_schmidt,
    hessian_at,
    killing_potential_residual,
    laplacian_at,
    metric_at,
    riemann_at,
)
from bergerdeform.manifolds import manifold_from_manifest
from bergerdeform.sampling import sample_points

RNG = np.random.default_rng(2024)


@pytest.fixture(scope="module")
def sphere():
    # unit round sphere in polar coordinates; scalar curvature 2, Ricci = g
    return manifold_from_manifest(
        {
            "name": "sphere",
            "dimension": 2,
            "coordinates": ["t", "p"],
            "metric": [["1", "0"], ["0", "sin(t)^2"]],
            "F": [["1", "0"], ["0", "-1"]],
            "V": ["1", "0"],
            "alpha": "1",
            "domain": [[0.4, 2.7], [-3, 3]],
        }
    )


class TestMetric:
    def test_flat_base_is_identity(self, flat2):
        g, g_inv, _ = metric_at(flat2, [0.3, -1.1], "base")
        np.testing.assert_array_equal(g, np.eye(2))
        np.testing.assert_array_equal(g_inv, np.eye(2))

    def test_deformed_flat2_is_diag_alpha_2alpha(self, flat2):
        x = 0.8
        g, _, _ = metric_at(flat2, [x, 0.0], "deformed")
        a = 1 + x**2
        np.testing.assert_allclose(g, np.diag([a, 2 * a]), rtol=1e-15)

    def test_deformed_at_x_equals_1(self, flat2):
        g, _, _ = metric_at(flat2, [1.0, 2.0], "deformed")
        np.testing.assert_allclose(g, np.diag([2.0, 4.0]), rtol=1e-15)

    def test_inverse_quality(self, curved4):
        pts = sample_points(curved4.domain, 60, 5)
        geom = ChartGeometry(curved4, pts, "deformed")
        resid = np.einsum("...ij,...jk->...ik", geom.g, geom.g_inv) - np.eye(4)
        assert np.max(np.abs(resid)) <= 1e-12

    def test_point_outside_domain(self, flat2):
        with pytest.raises(ChartDomainError):
            metric_at(flat2, [10.0, 0.0])


class TestChristoffel:
    def test_flat_base_vanishes(self, flat2):
        cc = christoffel_at(flat2, [0.5, 0.5], "base")
        assert np.all(cc.gamma == 0.0)

    def test_deformed_hand_values(self, flat2):
        cc = christoffel_at(flat2, [1.0, -0.4], "deformed")
        assert cc.gamma[0, 0, 0] == pytest.approx(0.5, abs=1e-12)
        assert cc.gamma[0, 1, 1] == pytest.approx(-1.0, abs=1e-12)
        assert cc.gamma[1, 0, 1] == pytest.approx(0.5, abs=1e-12)

    def test_symmetric_in_lower_indices(self, curved4):
        pts = sample_points(curved4.domain, 40, 9)
        for which in ("base", "deformed"):
            gam = ChartGeometry(curved4, pts, which).gamma
            np.testing.assert_array_equal(gam, np.swapaxes(gam, -1, -2))

    def test_polar_coordinates(self):
        polar = manifold_from_manifest(
            {
                "name": "polar",
                "dimension": 2,
                "coordinates": ["r", "t"],
                "metric": [["1", "0"], ["0", "r^2"]],
                "F": [["1", "0"], ["0", "-1"]],
                "V": ["1", "0"],
                "alpha": "1",
                "domain": [[0.5, 3], [-3, 3]],
            }
        )
        r = 1.7
        cc = christoffel_at(polar, [r, 0.2], "base")
        assert cc.gamma[0, 1, 1] == pytest.approx(-r)
        assert cc.gamma[1, 0, 1] == pytest.approx(1 / r)
        assert riemann_at(polar, [r, 0.2], "base").scalar == pytest.approx(0.0, abs=1e-13)

    def test_metric_compatibility(self, curved4):
        # d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il = 0
        pts = sample_points(curved4.domain, 100, 17)
        for which in ("base", "deformed"):
            geom = ChartGeometry(curved4, pts, which)
            n = geom.n
            dg = np.stack(
                [
                    np.stack(
                        [
                            np.stack(
                                [geom.metric_jets[i][j].partial(k).value for k in range(n)],
                                axis=-1,
                            )
                            for j in range(n)
                        ],
                        axis=-2,
                    )
                    for i in range(n)
                ],
                axis=-3,
            )  # [..., i, j, k]
            resid = (
                np.moveaxis(dg, -1, -3)  # [..., k, i, j]
                - np.einsum("...lki,...lj->...kij", geom.gamma, geom.g)
                - np.einsum("...lkj,...il->...kij", geom.gamma, geom.g)
            )
            assert np.max(np.abs(resid)) <= 1e-9


class TestCurvature:
    def test_flat_space_vanishes(self, flat2):
        bundle = riemann_at(flat2, [1.3, -0.2], "base")
        assert np.all(bundle.riemann == 0.0)
        assert bundle.scalar == 0.0

    def test_sphere_anchor(self, sphere):
        t = 0.9
        bundle = riemann_at(sphere, [t, 0.5], "base")
        assert bundle.scalar == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(
            bundle.ricci_tensor, np.diag([1.0, np.sin(t) ** 2]), atol=1e-12
        )
        # R_{t p t p} lowered = sin^2 t for the unit sphere
        lowered = np.einsum("lp,lijk->ijkp", np.diag([1.0, np.sin(t) ** 2]), bundle.riemann)
        assert lowered[0, 1, 1, 0] == pytest.approx(np.sin(t) ** 2, abs=1e-12)

    def test_deformed_scalar_analytic(self, flat2):
        x = 2.0
        bundle = riemann_at(flat2, [x, 0.1], "deformed")
        a, da, dda = 1 + x**2, 2 * x, 2.0
        assert bundle.scalar == pytest.approx((da**2 - a * dda) / a**3, abs=1e-12)
        assert bundle.scalar == pytest.approx(0.048)

    def test_first_bianchi(self, curved4):
        pts = sample_points(curved4.domain, 100, 23)
        for which in ("base", "deformed"):
            R = ChartGeometry(curved4, pts, which).riemann
            resid = (
                R
                + np.moveaxis(R, (-3, -2, -1), (-2, -1, -3))
                + np.moveaxis(R, (-3, -2, -1), (-1, -3, -2))
            )
            assert np.max(np.abs(resid)) <= 1e-8

    def test_lowered_symmetries(self, curved4):
        pts = sample_points(curved4.domain, 50, 29)
        geom = ChartGeometry(curved4, pts, "base")
        low = np.einsum("...lp,...lijk->...ijkp", geom.g, geom.riemann)
        # antisymmetry in the last two lowered slots (Z, W)
        assert np.max(np.abs(low + np.swapaxes(low, -1, -2))) <= 1e-8
        # pair exchange (X, Y) <-> (Z, W)
        swapped = np.moveaxis(low, (-4, -3, -2, -1), (-2, -1, -4, -3))
        assert np.max(np.abs(low - swapped)) <= 1e-8

    def test_scalar_equals_frame_trace(self, curved4):
        pts = sample_points(curved4.domain, 30, 31)
        geom = ChartGeometry(curved4, pts, "base")
        raw = RNG.standard_normal(pts.shape[:1] + (4, 4))
        frame = gram_schmidt(geom.g, raw)
        total = np.zeros(pts.shape[0])
        for a in range(4):
            e = frame[..., a, :]
            total += np.einsum("...ij,...i,...j->...", geom.ricci, e, e)
        np.testing.assert_allclose(total, geom.scalar, atol=1e-8)

    def test_ricci_operator_is_index_raised_tensor(self, curved4):
        geom = ChartGeometry(curved4, sample_points(curved4.domain, 20, 37), "deformed")
        lhs = np.einsum("...kw,...wi->...ki", geom.g_inv, geom.ricci)
        np.testing.assert_allclose(geom.ricci_op, lhs, rtol=1e-13)


class TestScalarFields:
    def test_flat_gradient(self, flat2):
        np.testing.assert_allclose(
            gradient_at(flat2, [1.0, 0.0], "1 + x^2", "base"), [2.0, 0.0]
        )

    def test_deformed_gradient(self, flat2):
        np.testing.assert_allclose(
            gradient_at(flat2, [1.0, 0.0], "1 + x^2", "deformed"), [1.0, 0.0]
        )

    def test_constant_field(self, flat2):
        np.testing.assert_array_equal(
            gradient_at(flat2, [0.7, 0.7], "3", "base"), [0.0, 0.0]
        )

    def test_flat_hessian(self, flat2):
        np.testing.assert_allclose(
            hessian_at(flat2, [0.2, 0.4], "1 + x^2", "base"), np.diag([2.0, 0.0])
        )

    def test_affine_field_is_killing(self, flat2):
        np.testing.assert_array_equal(
            hessian_at(flat2, [0.2, 0.4], "1 + x", "base"), np.zeros((2, 2))
        )

    def test_laplacians(self, flat2):
        assert laplacian_at(flat2, [1.2, 0.0], "1 + x^2", "base") == pytest.approx(2.0)
        assert laplacian_at(flat2, [1.2, 0.7], "x*y", "base") == pytest.approx(0.0)
        # deformed Laplacian assembled from deformed Christoffels at x = 1
        assert laplacian_at(flat2, [1.0, 0.0], "1 + x^2", "deformed") == pytest.approx(1.0)

    def test_killing_residuals(self, flat2):
        pts = sample_points(flat2.domain, 60, 3)
        assert killing_potential_residual(flat2, "1 + x", pts) == 0.0
        assert killing_potential_residual(flat2, "1 + x^2", pts) == pytest.approx(2.0)
        assert killing_potential_residual(flat2, "5", pts) == 0.0


class TestFrames:
    def test_gram_schmidt_orthonormal(self, curved4):
        pts = sample_points(curved4.domain, 25, 41)
        g = ChartGeometry(curved4, pts, "base").g
        frame = gram_schmidt(g, RNG.standard_normal((25, 4, 4)))
        gram = np.einsum("...ij,...ai,...bj->...ab", g, frame, frame)
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(4), gram.shape), atol=1e-12)

    def test_dependent_vectors_rejected(self):
        g = np.eye(2)[None]
        vecs = np.array([[[1.0, 0.0], [1.0, 1e-14]]])
        with pytest.raises(FrameError):
            gram_schmidt(g, vecs)

    def test_frame_with_vector_last(self, curved4):
        pts = sample_points(curved4.domain, 10, 43)
        geom = ChartGeometry(curved4, pts, "base")
        w = np.stack([j.value for j in geom.fv_jets], axis=-1)
        frame = frame_with_vector_last(geom.g, w)
        gram = np.einsum("...ij,...ai,...bj->...ab", geom.g, frame, frame)
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(4), gram.shape), atol=1e-12)
        norm = np.sqrt(np.einsum("...ij,...i,...j->...", geom.g, w, w))
        np.testing.assert_allclose(frame[..., -1, :], w / norm[..., None], atol=1e-12)
