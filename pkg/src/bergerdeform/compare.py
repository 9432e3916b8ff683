"""Closed-form vs oracle comparison campaigns.

Each registered formula id evaluates one closed form and its definition-based
oracle over a shared batch of sample points and reports maximum/mean absolute
and relative discrepancies, the worst point with both values, and a pass
flag. A point-component passes when its absolute discrepancy is within the
absolute tolerance or its relative discrepancy is within the relative
tolerance (curvature magnitudes vary by orders of magnitude across a domain,
so either bound may be the meaningful one).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import deform, maps, oracle
from .chart import ChartGeometry, gram_schmidt
from .manifolds import ManifoldSpec
from .sampling import sample_points
from .structure import require_valid

__all__ = [
    "ComparisonReport",
    "FORMULA_IDS",
    "UnknownFormulaError",
    "compare",
    "compare_all",
]

DEFAULT_ABS_TOL = 1e-7
DEFAULT_REL_TOL = 1e-6
SECTIONAL_PAIRS = 5


class UnknownFormulaError(ValueError):
    pass


@dataclass(frozen=True)
class ComparisonReport:
    formula: str
    n_points: int
    max_abs: float
    mean_abs: float
    max_rel: float
    mean_rel: float
    worst_point: tuple[float, ...]
    worst_closed: float
    worst_oracle: float
    passed: bool
    forced: bool = False

    def to_dict(self) -> dict:
        d = {
            "formula": self.formula,
            "points": self.n_points,
            "max_abs": float(self.max_abs),
            "mean_abs": float(self.mean_abs),
            "max_rel": float(self.max_rel),
            "mean_rel": float(self.mean_rel),
            "worst_point": [float(v) for v in self.worst_point],
            "worst_closed": float(self.worst_closed),
            "worst_oracle": float(self.worst_oracle),
            "pass": bool(self.passed),
        }
        if self.forced:
            d["forced"] = True
        return d


class _Bundle:
    """Geometry shared by all formula evaluators at one batch of points."""

    def __init__(self, spec: ManifoldSpec, points):
        self.spec = spec
        self.points = np.asarray(points, dtype=float)
        self.n = spec.dimension

    @cached_property
    def base(self) -> ChartGeometry:
        return ChartGeometry(self.spec, self.points, "base")

    @cached_property
    def deformed(self) -> ChartGeometry:
        return ChartGeometry(self.spec, self.points, "deformed")

    @cached_property
    def ctx(self) -> deform.DeformationContext:
        return deform.build_context(self.spec, self.points, geometry=self.base)


def _eval_connection(b: _Bundle, rng):
    eye = np.eye(b.n)
    closed = np.stack(
        [
            np.stack([deform.closed_form_connection(b.ctx, eye[i], eye[j]) for j in range(b.n)], axis=-2)
            for i in range(b.n)
        ],
        axis=-3,
    )  # [..., i, j, k]
    orac = np.moveaxis(b.deformed.gamma, -3, -1)  # Gamma^k_ij -> [..., i, j, k]
    return closed, orac


def _eval_nabla_grad(b: _Bundle, rng):
    eye = np.eye(b.n)
    closed = np.stack(
        [deform.closed_form_nabla_grad(b.ctx, eye[i]) for i in range(b.n)], axis=-2
    )  # [..., i, k]
    orac = np.swapaxes(oracle.oracle_nabla_grad(b.base, b.deformed), -1, -2)
    return closed, orac


def _eval_riemann(b: _Bundle, rng):
    eye = np.eye(b.n)
    rows = []
    for i in range(b.n):
        cols = []
        for j in range(b.n):
            inner = [
                deform.closed_form_riemann(b.ctx, eye[i], eye[j], eye[k])
                for k in range(b.n)
            ]
            cols.append(np.stack(inner, axis=-2))
        rows.append(np.stack(cols, axis=-3))
    closed = np.stack(rows, axis=-4)  # [..., i, j, k, l]
    orac = np.moveaxis(b.deformed.riemann, -4, -1)  # [l,i,j,k] -> [i,j,k,l]
    return closed, orac


def _eval_sectional(b: _Bundle, rng):
    batch = b.points.shape[:-1]
    closed_cols = []
    oracle_cols = []
    for _ in range(SECTIONAL_PAIRS):
        pair = gram_schmidt(b.base.g, rng.standard_normal(batch + (2, b.n)))
        X, Y = pair[..., 0, :], pair[..., 1, :]
        closed_cols.append(deform.closed_form_sectional(b.ctx, X, Y))
        oracle_cols.append(oracle.oracle_sectional(b.deformed, X, Y))
    return np.stack(closed_cols, axis=-1), np.stack(oracle_cols, axis=-1)


def _eval_ricci_operator(b: _Bundle, rng):
    eye = np.eye(b.n)
    closed = np.stack(
        [deform.closed_form_ricci_operator(b.ctx, eye[i]) for i in range(b.n)], axis=-2
    )  # [..., i, k]
    orac = np.swapaxes(b.deformed.ricci_op, -1, -2)  # [k, i] -> [i, k]
    return closed, orac


def _eval_ricci_tensor(b: _Bundle, rng):
    eye = np.eye(b.n)
    closed = np.stack(
        [
            np.stack([deform.closed_form_ricci_tensor(b.ctx, eye[i], eye[j]) for j in range(b.n)], axis=-1)
            for i in range(b.n)
        ],
        axis=-2,
    )
    return closed, b.deformed.ricci


def _eval_scalar(b: _Bundle, rng):
    return deform.closed_form_scalar(b.ctx), b.deformed.scalar


def _eval_tension_to(b: _Bundle, rng):
    closed = maps.tension_identity_to_deformed(b.ctx)
    orac = oracle.oracle_identity_tension(b.base, b.deformed)
    return closed, orac


def _eval_tension_from(b: _Bundle, rng):
    closed = maps.tension_identity_from_deformed(b.ctx)
    orac = oracle.oracle_identity_tension(b.deformed, b.base)
    return closed, orac


def _eval_bitension_to(b: _Bundle, rng):
    closed = maps.bitension_identity_to_deformed(b.ctx)
    orac = oracle.identity_bitension_from_geometries(b.base, b.deformed)
    return closed, orac


def _eval_bitension_from(b: _Bundle, rng):
    closed = maps.bitension_identity_from_deformed(b.ctx)
    orac = oracle.identity_bitension_from_geometries(b.deformed, b.base)
    return closed, orac


FORMULAS = {
    "connection": _eval_connection,
    "nabla-grad": _eval_nabla_grad,
    "riemann": _eval_riemann,
    "sectional": _eval_sectional,
    "ricci-operator": _eval_ricci_operator,
    "ricci-tensor": _eval_ricci_tensor,
    "scalar": _eval_scalar,
    "tension-to-deformed": _eval_tension_to,
    "tension-from-deformed": _eval_tension_from,
    "bitension-to-deformed": _eval_bitension_to,
    "bitension-from-deformed": _eval_bitension_from,
}

FORMULA_IDS = tuple(FORMULAS)


def _build_report(formula: str, points: np.ndarray, closed, orac,
                  abs_tol: float, rel_tol: float, forced: bool) -> ComparisonReport:
    closed = np.asarray(closed, dtype=float)
    orac = np.asarray(orac, dtype=float)
    n_points = points.shape[0]
    c = closed.reshape(n_points, -1)
    o = orac.reshape(n_points, -1)
    diff = np.abs(c - o)
    scale = np.maximum(np.abs(c), np.abs(o))
    rel = np.where(scale > 0.0, diff / np.where(scale > 0.0, scale, 1.0), 0.0)
    ok = (diff <= abs_tol) | (rel <= rel_tol)
    flat_worst = int(np.argmax(diff))
    wp, wc = np.unravel_index(flat_worst, diff.shape)
    return ComparisonReport(
        formula=formula,
        n_points=n_points,
        max_abs=float(diff.max()),
        mean_abs=float(diff.mean()),
        max_rel=float(rel.max()),
        mean_rel=float(rel.mean()),
        worst_point=tuple(float(v) for v in points[wp]),
        worst_closed=float(c[wp, wc]),
        worst_oracle=float(o[wp, wc]),
        passed=bool(np.all(ok)),
        forced=forced,
    )


def compare(formula: str, spec: ManifoldSpec, n_samples: int = 200, seed: int = 42,
            abs_tol: float = DEFAULT_ABS_TOL, rel_tol: float = DEFAULT_REL_TOL,
            force: bool = False, points=None) -> ComparisonReport:
    """Compare one closed form against its oracle over sampled points."""
    if formula not in FORMULAS:
        raise UnknownFormulaError(
            f"unknown formula {formula!r}; known: {', '.join(FORMULA_IDS)}"
        )
    report = require_valid(spec, force=force)
    forced = force and not report.passed
    if points is None:
        points = sample_points(spec.domain, n_samples, seed)
    points = np.asarray(points, dtype=float)
    bundle = _Bundle(spec, points)
    rng = np.random.default_rng([seed, FORMULA_IDS.index(formula)])
    closed, orac = FORMULAS[formula](bundle, rng)
    return _build_report(formula, points, closed, orac, abs_tol, rel_tol, forced)


def compare_all(spec: ManifoldSpec, n_samples: int = 200, seed: int = 42,
                abs_tol: float = DEFAULT_ABS_TOL, rel_tol: float = DEFAULT_REL_TOL,
                force: bool = False, points=None) -> list[ComparisonReport]:
    """Compare every registered formula on a shared geometry bundle."""
    report = require_valid(spec, force=force)
    forced = force and not report.passed
    if points is None:
        points = sample_points(spec.domain, n_samples, seed)
    points = np.asarray(points, dtype=float)
    bundle = _Bundle(spec, points)
    out = []
    for idx, (formula, fn) in enumerate(FORMULAS.items()):
        rng = np.random.default_rng([seed, idx])
        closed, orac = fn(bundle, rng)
        out.append(_build_report(formula, points, closed, orac, abs_tol, rel_tol, forced))
    return out
