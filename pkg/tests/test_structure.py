"""Structural hypothesis checks and the validation gate."""

import numpy as np
import pytest

from bergerdeform.chart import ChartGeometry
from bergerdeform.manifolds import manifold_from_manifest, with_alpha
from bergerdeform.sampling import sample_points
from bergerdeform.structure import (
    SpecValidationError,
    check_curvature_purity,
    check_norden_purity,
    check_para_complex,
    check_parallel_F,
    check_V_and_alpha,
    require_valid,
    validate_structure,
)


def _flat_variant(flat2, **overrides):
    doc = {
        "name": "variant",
        "dimension": 2,
        "coordinates": ["x", "y"],
        "metric": [["1", "0"], ["0", "1"]],
        "F": [["0", "1"], ["1", "0"]],
        "V": ["1", "0"],
        "alpha": "1 + x^2",
        "domain": [[-3, 3], [-3, 3]],
    }
    doc.update(overrides)
    return manifold_from_manifest(doc)


def test_builtins_validate_cleanly(flat2, flat4):
    for spec in (flat2, flat4):
        report = validate_structure(spec, 200, 42)
        assert report.passed
        for check in report.checks:
            if not check.skipped:
                assert check.residual <= 1e-9, check.name


def test_curved_spec_validates(curved4):
    report = validate_structure(curved4, 150, 42)
    assert report.passed, [c.name for c in report.checks if not c.passed]


def test_flat_para_complex(flat2):
    pts = sample_points(flat2.domain, 30, 1)
    results = check_para_complex(flat2, pts)
    assert all(r.residual == 0.0 for r in results)


def test_identity_F_fails_trace(flat2):
    bad = _flat_variant(flat2, F=[["1", "0"], ["0", "1"]])
    pts = sample_points(bad.domain, 30, 1)
    results = {r.name: r for r in check_para_complex(bad, pts)}
    assert results["F_squared_identity"].passed
    assert results["F_trace_zero"].residual == pytest.approx(2.0)
    assert not results["F_trace_zero"].passed


def test_diagonal_para_complex_passes(flat2):
    ok = _flat_variant(flat2, F=[["1", "0"], ["0", "-1"]], V=["1", "0"], alpha="1 + y^2/9")
    # FV = d/dx here, so alpha must not depend on x
    pts = sample_points(ok.domain, 30, 1)
    assert all(r.passed for r in check_para_complex(ok, pts))
    assert all(r.passed for r in check_norden_purity(ok, pts))


def test_antisymmetric_F_fails_purity(flat2):
    bad = _flat_variant(flat2, F=[["0", "1"], ["-1", "0"]])
    pts = sample_points(bad.domain, 30, 1)
    assert not check_norden_purity(bad, pts)[0].passed


def test_random_pure_pair_passes_purity():
    rng = np.random.default_rng(5)
    for trial in range(5):
        n = 4
        while True:
            s = rng.uniform(-1, 1, size=(n, n))
            if abs(np.linalg.det(s)) > 0.3:
                break
        d = np.diag([1.0, 1.0, -1.0, -1.0])
        g = s.T @ s
        f = np.linalg.solve(s, d @ s)
        spec = manifold_from_manifest(
            {
                "name": f"pure{trial}",
                "dimension": 4,
                "coordinates": ["x1", "x2", "x3", "x4"],
                "metric": [[repr(float(g[i, j])) for j in range(n)] for i in range(n)],
                "F": [[repr(float(f[i, j])) for j in range(n)] for i in range(n)],
                "V": ["1", "0", "0", "0"],
                "alpha": "1",
                "domain": [[-1, 1]] * 4,
            }
        )
        pts = sample_points(spec.domain, 10, 1)
        assert all(r.passed for r in check_norden_purity(spec, pts))
        results = {r.name: r for r in check_para_complex(spec, pts)}
        assert results["F_squared_identity"].residual <= 1e-12
        assert results["F_trace_zero"].residual <= 1e-12


def test_coordinate_dependent_F_fails_parallel(flat2):
    bad = _flat_variant(flat2, F=[["0", "1 + x"], ["1", "0"]])
    pts = sample_points(bad.domain, 40, 1)
    result = check_parallel_F(bad, pts)[0]
    assert not result.passed
    # on a flat chart the residual is exactly the stray partial derivative
    assert result.residual == pytest.approx(1.0)


def test_V_alpha_residuals(flat2):
    pts = sample_points(flat2.domain, 40, 1)
    assert all(r.passed for r in check_V_and_alpha(flat2, pts))

    bad_alpha = with_alpha(flat2, "x + y + 10")
    results = {r.name: r for r in check_V_and_alpha(bad_alpha, pts)}
    assert results["FV_alpha_derivative"].residual == pytest.approx(1.0)
    assert not results["FV_alpha_derivative"].passed

    long_v = _flat_variant(flat2, V=["2", "0"])
    results = {r.name: r for r in check_V_and_alpha(long_v, pts)}
    assert results["V_unit"].residual == pytest.approx(3.0)
    assert not results["V_unit"].passed


def test_parallel_V_annihilates_curvature(curved4):
    # nabla V = 0 forces R(X, Y)V = 0; check on the curved chart
    pts = sample_points(curved4.domain, 100, 7)
    results = {r.name: r for r in check_V_and_alpha(curved4, pts)}
    assert results["V_parallel"].residual <= 1e-12
    assert results["curvature_annihilates_V"].residual <= 1e-8


def test_curvature_purity_on_curved_chart(curved4):
    pts = sample_points(curved4.domain, 80, 11)
    result = check_curvature_purity(curved4, pts)[0]
    assert not result.skipped
    assert result.residual <= 1e-8


def test_curvature_purity_skipped_without_parallel_F(flat2):
    bad = _flat_variant(flat2, F=[["0", "1 + x"], ["1", "0"]])
    pts = sample_points(bad.domain, 20, 1)
    result = check_curvature_purity(bad, pts)[0]
    assert result.skipped


def test_identities_generalize_to_fresh_samples(curved4):
    """Residual identities validated at one seed hold at another."""
    assert validate_structure(curved4, 120, 1).passed
    fresh = sample_points(curved4.domain, 120, 99)
    for result in check_V_and_alpha(curved4, fresh):
        assert result.residual <= 1e-9
    # deformed-metric pairing identities at the fresh points
    base = ChartGeometry(curved4, fresh, "base")
    deformed = ChartGeometry(curved4, fresh, "deformed")
    fv = np.stack([j.value for j in base.fv_jets], axis=-1)
    alpha = base.alpha_jets.value
    rng = np.random.default_rng(0)
    X = rng.standard_normal(fresh.shape)
    lhs = np.einsum("...ij,...i,...j->...", base.g, X, fv)
    rhs = np.einsum("...ij,...i,...j->...", deformed.g, X, fv) / (2 * alpha)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_gate_refuses_and_force_overrides(flat2):
    bad = with_alpha(flat2, "1 + x + y", name="gatecase")
    with pytest.raises(SpecValidationError):
        require_valid(bad)
    report = require_valid(bad, force=True)
    assert not report.passed


def test_alpha_positivity_guard(flat2):
    bad = with_alpha(flat2, "x", name="alpha-sign")
    report = validate_structure(bad, 50, 42)
    names = {c.name: c for c in report.checks}
    assert not names["alpha_positive"].passed
