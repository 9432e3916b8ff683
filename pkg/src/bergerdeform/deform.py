"""Closed-form geometry of the Berger-type conformal deformation.

Given a validated chart (M, F, g, V, alpha), the deformed metric is

    g^a(X, Y) = alpha (g(X, Y) + g(X, FV) g(Y, FV)).

This module evaluates the closed-form expressions for the deformed
Levi-Civita connection, curvature tensor, sectional curvature, Ricci
operator/tensor and scalar curvature, together with their Killing-potential
specializations. Everything is assembled from base-metric data collected in
a :class:`DeformationContext`; the independent oracle in
:mod:`bergerdeform.oracle` recomputes the same quantities from the deformed
metric components directly, and the two are compared in
:mod:`bergerdeform.compare`.

Argument vectors are constant-coefficient vectors at the sampled points
(tensoriality makes that sufficient for curvature-type quantities); the
connection, which is not tensorial in its second slot, also accepts a
jet-valued field.

The curvature closed form is organized so that swapping the first two
arguments negates the result bit-for-bit, and the Ricci tensor closed form
so that swapping its arguments reproduces the result bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .chart import (
    ChartGeometry,
    FrameError,
    frame_with_vector_last,
    gram_schmidt,
    gradient_jets,
    hessian_values,
)
from .manifolds import ManifoldSpec

__all__ = [
    "DeformationContext",
    "build_context",
    "NotOrthonormalError",
    "NotKillingError",
    "deformed_metric_components",
    "closed_form_connection",
    "closed_form_nabla_grad",
    "closed_form_riemann",
    "killing_riemann",
    "closed_form_sectional",
    "killing_sectional",
    "closed_form_ricci_operator",
    "killing_ricci_operator",
    "closed_form_ricci_tensor",
    "killing_ricci_tensor",
    "closed_form_scalar",
    "killing_scalar",
    "killing_residual",
    "killing_corollary_suite",
    "KillingSuiteReport",
    "deformed_frame",
    "sym_bilinear",
]

ORTHONORMAL_TOL = 1e-10
KILLING_TOL = 1e-9


class NotOrthonormalError(ValueError):
    """Sectional-curvature arguments must be orthonormal for the base metric."""


class NotKillingError(ValueError):
    """A Killing-potential specialization was requested for a non-Killing factor."""


def sym_bilinear(mat: np.ndarray, X, Y) -> np.ndarray:
    """q(X, Y) = sum_ij M_ij X^i Y^j, summed so that q(X, Y) == q(Y, X) exactly."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = mat.shape[-1]
    acc = mat[..., 0, 0] * (X[..., 0] * Y[..., 0])
    for i in range(1, n):
        acc = acc + mat[..., i, i] * (X[..., i] * Y[..., i])
    for i in range(n):
        for j in range(i + 1, n):
            acc = acc + mat[..., i, j] * (X[..., i] * Y[..., j] + X[..., j] * Y[..., i])
    return acc


def _dot(X, Y) -> np.ndarray:
    return np.einsum("...i,...i->...", np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


class DeformationContext:
    """Base-metric data shared by every closed form, at a batch of points."""

    def __init__(self, spec: ManifoldSpec, points, geometry: ChartGeometry | None = None):
        self.spec = spec
        if geometry is not None and geometry.which == "base":
            self.base = geometry
        else:
            self.base = ChartGeometry(spec, points, "base")
        self.points = self.base.points
        self.n = spec.dimension
        self.m = spec.m

    # scalar factor and its derivatives
    @cached_property
    def alpha(self) -> np.ndarray:
        return self.base.alpha_jets.value

    @cached_property
    def dalpha(self) -> np.ndarray:
        return np.stack(
            [self.base.alpha_jets.partial(i).value for i in range(self.n)], axis=-1
        )

    @cached_property
    def grad_jets(self):
        return gradient_jets(self.base, self.base.alpha_jets)

    @cached_property
    def grad(self) -> np.ndarray:
        return np.stack([j.value for j in self.grad_jets], axis=-1)

    @cached_property
    def grad_norm_sq(self) -> np.ndarray:
        return _dot(self.dalpha, self.grad)

    @cached_property
    def hess(self) -> np.ndarray:
        return hessian_values(self.base, self.base.alpha_jets)

    @cached_property
    def nabla_grad(self) -> np.ndarray:
        """(nabla_i grad alpha)^k = g^kl Hess_li, indexed [..., k, i]."""
        return np.einsum("...kl,...li->...ki", self.base.g_inv, self.hess)

    @cached_property
    def laplacian(self) -> np.ndarray:
        return np.einsum("...ij,...ij->...", self.base.g_inv, self.hess)

    # deformation direction
    @cached_property
    def fv(self) -> np.ndarray:
        return np.stack([j.value for j in self.base.fv_jets], axis=-1)

    @cached_property
    def omega(self) -> np.ndarray:
        return np.stack([j.value for j in self.base.omega_jets], axis=-1)

    # base geometry values
    @property
    def g(self) -> np.ndarray:
        return self.base.g

    @property
    def g_inv(self) -> np.ndarray:
        return self.base.g_inv

    @property
    def gamma(self) -> np.ndarray:
        return self.base.gamma

    @property
    def riemann(self) -> np.ndarray:
        return self.base.riemann

    @property
    def ricci(self) -> np.ndarray:
        return self.base.ricci

    @property
    def ricci_op(self) -> np.ndarray:
        return self.base.ricci_op

    @cached_property
    def deformed(self) -> np.ndarray:
        """g^a_ij = alpha (g_ij + w_i w_j)."""
        w = self.omega
        return self.alpha[..., None, None] * (
            self.g + w[..., :, None] * w[..., None, :]
        )

    # second covariant derivatives of grad alpha, needed by the bitension forms
    @cached_property
    def _nabla_grad_jets(self):
        """(nabla_j grad alpha)^k as order-1 jets, indexed [k][j]."""
        n = self.n
        gj = self.grad_jets
        gam = self.base.gamma_jets
        out = []
        for k in range(n):
            row = []
            for j in range(n):
                acc = gj[k].partial(j)
                for nu in range(n):
                    acc = acc + gam[k][j][nu] * gj[nu]
                row.append(acc)
            out.append(row)
        return out

    @cached_property
    def delta_grad(self) -> np.ndarray:
        """Rough Laplacian of grad alpha: -Tr_g (nabla nabla - nabla_nabla)."""
        n = self.n
        ndg = self._nabla_grad_jets
        vals = np.stack(
            [np.stack([ndg[k][j].value for j in range(n)], axis=-1) for k in range(n)],
            axis=-2,
        )  # [..., k, j]
        dvals = np.stack(
            [
                np.stack(
                    [
                        np.stack([ndg[k][j].partial(i).value for i in range(n)], axis=-1)
                        for j in range(n)
                    ],
                    axis=-2,
                )
                for k in range(n)
            ],
            axis=-3,
        )  # [..., k, j, i]
        second = (
            np.swapaxes(dvals, -1, -2)  # [..., k, i, j] = d_i (nabla_j G)^k
            + np.einsum("...kin,...nj->...kij", self.gamma, vals)
            - np.einsum("...pij,...kp->...kij", self.gamma, vals)
        )
        return -np.einsum("...ij,...kij->...k", self.g_inv, second)

    @cached_property
    def nabla_fv_fv_grad(self) -> np.ndarray:
        """nabla_FV nabla_FV grad alpha (identically zero on valid specs)."""
        n = self.n
        ndg = self._nabla_grad_jets
        w = []
        for k in range(n):
            acc = None
            for j in range(n):
                term = self.base.fv_jets[j] * ndg[k][j]
                acc = term if acc is None else acc + term
            w.append(acc)
        wv = np.stack([j.value for j in w], axis=-1)
        dw = np.stack(
            [np.stack([w[k].partial(i).value for i in range(n)], axis=-1) for k in range(n)],
            axis=-2,
        )  # [..., k, i]
        return np.einsum("...i,...ki->...k", self.fv, dw) + np.einsum(
            "...i,...kin,...n->...k", self.fv, self.gamma, wv
        )


def build_context(spec: ManifoldSpec, points,
                  geometry: ChartGeometry | None = None) -> DeformationContext:
    return DeformationContext(spec, points, geometry)


# -- closed forms ---------------------------------------------------------------


def deformed_metric_components(ctx: DeformationContext) -> np.ndarray:
    """The deformed metric matrix at each point."""
    return ctx.deformed


def closed_form_connection(ctx: DeformationContext, X, Y, y_jets=None) -> np.ndarray:
    """Deformed connection applied to (X, Y):

    nabla^a_X Y = nabla_X Y + X(a)/(2a) Y + Y(a)/(2a) X
                  - g^a(X, Y)/(2a^2) grad a.

    ``y_jets`` supplies Y as a jet-valued field when it is not constant.
    """
    X = np.asarray(X, dtype=float)
    a = ctx.alpha
    if y_jets is not None:
        Yv = np.stack([j.value for j in y_jets], axis=-1)
        dY = np.stack(
            [
                np.stack([y_jets[k].partial(i).value for i in range(ctx.n)], axis=-1)
                for k in range(ctx.n)
            ],
            axis=-2,
        )
        nab = np.einsum("...ki,...i->...k", dY, X) + np.einsum(
            "...kij,...i,...j->...k", ctx.gamma, X, Yv
        )
    else:
        Yv = np.asarray(Y, dtype=float)
        nab = np.einsum("...kij,...i,...j->...k", ctx.gamma, X, Yv)
    xa = _dot(X, ctx.dalpha)
    ya = _dot(Yv, ctx.dalpha)
    gxy = sym_bilinear(ctx.deformed, X, Yv)
    return (
        nab
        + (xa / (2.0 * a))[..., None] * Yv
        + (ya / (2.0 * a))[..., None] * X
        - (gxy / (2.0 * a**2))[..., None] * ctx.grad
    )


def closed_form_nabla_grad(ctx: DeformationContext, X) -> np.ndarray:
    """nabla^a_X grad a = nabla_X grad a + |grad a|^2/(2a) X."""
    X = np.asarray(X, dtype=float)
    nx = np.einsum("...ki,...i->...k", ctx.nabla_grad, X)
    return nx + (ctx.grad_norm_sq / (2.0 * ctx.alpha))[..., None] * X


def _riemann_terms(ctx: DeformationContext, X, Y, Z, with_hessian: bool):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    a = ctx.alpha
    gn = ctx.grad_norm_sq

    # base curvature term, contracted pairwise for exact antisymmetry in (X, Y)
    rz = np.einsum("...lijk,...k->...lij", ctx.riemann, Z)
    base = None
    for i in range(ctx.n):
        for j in range(i + 1, ctx.n):
            w = X[..., i] * Y[..., j] - X[..., j] * Y[..., i]
            term = w[..., None] * rz[..., :, i, j]
            base = term if base is None else base + term
    if base is None:
        base = np.zeros(np.broadcast_shapes(X.shape, Y.shape))

    gyz = sym_bilinear(ctx.deformed, Y, Z)
    gxz = sym_bilinear(ctx.deformed, X, Z)
    xa = _dot(X, ctx.dalpha)
    ya = _dot(Y, ctx.dalpha)
    za = _dot(Z, ctx.dalpha)

    if with_hessian:
        nx = np.einsum("...ki,...i->...k", ctx.nabla_grad, X)
        ny = np.einsum("...ki,...i->...k", ctx.nabla_grad, Y)
        t23 = (-gyz / (2.0 * a**2))[..., None] * nx + (gxz / (2.0 * a**2))[..., None] * ny
        hyz = sym_bilinear(ctx.hess, Y, Z)
        hxz = sym_bilinear(ctx.hess, X, Z)
    else:
        t23 = 0.0
        hyz = 0.0
        hxz = 0.0

    cyz = 3.0 * ya * za / (4.0 * a**2) - hyz / (2.0 * a) - gn * gyz / (4.0 * a**3)
    cxz = 3.0 * xa * za / (4.0 * a**2) - hxz / (2.0 * a) - gn * gxz / (4.0 * a**3)
    t45 = cyz[..., None] * X - cxz[..., None] * Y
    t6 = (3.0 * xa * gyz / (4.0 * a**3) - 3.0 * ya * gxz / (4.0 * a**3))[..., None] * ctx.grad
    return base + t23 + t45 + t6


def closed_form_riemann(ctx: DeformationContext, X, Y, Z) -> np.ndarray:
    """Deformed curvature R^a(X, Y)Z as a coordinate vector.

    Exactly antisymmetric under exchanging X and Y (term grouping preserves
    this bit-for-bit in floating point).
    """
    return _riemann_terms(ctx, X, Y, Z, with_hessian=True)


def killing_residual(ctx: DeformationContext) -> float:
    """max |Hess alpha| over the batch; ~0 iff alpha is a Killing potential."""
    return float(np.max(np.abs(ctx.hess)))


def _require_killing(ctx: DeformationContext, tol: float):
    res = killing_residual(ctx)
    if res > tol:
        raise NotKillingError(
            f"alpha is not a Killing potential (Hessian residual {res:.3e} > {tol:.1e})"
        )


def killing_riemann(ctx: DeformationContext, X, Y, Z, tol: float = KILLING_TOL) -> np.ndarray:
    """Curvature closed form with the Hessian terms dropped (alpha Killing)."""
    _require_killing(ctx, tol)
    return _riemann_terms(ctx, X, Y, Z, with_hessian=False)


def _check_orthonormal(ctx: DeformationContext, X, Y):
    gxx = sym_bilinear(ctx.g, X, X)
    gyy = sym_bilinear(ctx.g, Y, Y)
    gxy = sym_bilinear(ctx.g, X, Y)
    worst = max(
        float(np.max(np.abs(gxx - 1.0))),
        float(np.max(np.abs(gyy - 1.0))),
        float(np.max(np.abs(gxy))),
    )
    if worst > ORTHONORMAL_TOL:
        raise NotOrthonormalError(
            f"arguments are not g-orthonormal (residual {worst:.3e})"
        )


def _sectional(ctx: DeformationContext, X, Y, with_hessian: bool) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _check_orthonormal(ctx, X, Y)
    a = ctx.alpha
    xa = _dot(X, ctx.dalpha)
    ya = _dot(Y, ctx.dalpha)
    xf = sym_bilinear(ctx.g, X, ctx.fv)
    yf = sym_bilinear(ctx.g, Y, ctx.fv)
    ryy = np.einsum("...lijk,...i,...j,...k->...l", ctx.riemann, X, Y, Y)
    k_base = sym_bilinear(ctx.g, ryy, X)
    if with_hessian:
        hxx = sym_bilinear(ctx.hess, X, X)
        hyy = sym_bilinear(ctx.hess, Y, Y)
        hxy = sym_bilinear(ctx.hess, X, Y)
    else:
        hxx = hyy = hxy = 0.0
    bracket = (
        k_base
        + (3.0 * ya**2 / (4.0 * a**2) - hyy / (2.0 * a)) * (1.0 + xf**2)
        + (3.0 * xa**2 / (4.0 * a**2) - hxx / (2.0 * a)) * (1.0 + yf**2)
        - (3.0 * xa * ya / (2.0 * a**2) - hxy / a) * (xf * yf)
    )
    return -ctx.grad_norm_sq / (4.0 * a**3) + bracket / (a * (1.0 + xf**2 + yf**2))


def closed_form_sectional(ctx: DeformationContext, X, Y) -> np.ndarray:
    """Deformed sectional curvature of span{X, Y} for a g-orthonormal pair."""
    return _sectional(ctx, X, Y, with_hessian=True)


def killing_sectional(ctx: DeformationContext, X, Y, tol: float = KILLING_TOL) -> np.ndarray:
    _require_killing(ctx, tol)
    return _sectional(ctx, X, Y, with_hessian=False)


def _ricci_operator(ctx: DeformationContext, X, with_hessian: bool) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    a = ctx.alpha
    m = ctx.m
    gn = ctx.grad_norm_sq
    ricx = np.einsum("...ki,...i->...k", ctx.ricci_op, X)
    xa = _dot(X, ctx.dalpha)
    out = (1.0 / a)[..., None] * ricx + (
        3.0 * (m - 1) * xa / (2.0 * a**3)
    )[..., None] * ctx.grad
    if with_hessian:
        nx = np.einsum("...ki,...i->...k", ctx.nabla_grad, X)
        out = out - ((m - 1) / a**2)[..., None] * nx
        coeff = (m - 2) * gn / (2.0 * a**3) + ctx.laplacian / (2.0 * a**2)
    else:
        coeff = (m - 2) * gn / (2.0 * a**3)
    return out - coeff[..., None] * X


def closed_form_ricci_operator(ctx: DeformationContext, X) -> np.ndarray:
    """Deformed Ricci operator applied to X."""
    return _ricci_operator(ctx, X, with_hessian=True)


def killing_ricci_operator(ctx: DeformationContext, X, tol: float = KILLING_TOL) -> np.ndarray:
    _require_killing(ctx, tol)
    return _ricci_operator(ctx, X, with_hessian=False)


def _ricci_tensor(ctx: DeformationContext, X, Y, with_hessian: bool) -> np.ndarray:
    a = ctx.alpha
    m = ctx.m
    ric = sym_bilinear(ctx.ricci, X, Y)
    gt = sym_bilinear(ctx.deformed, X, Y)
    xa_ya = _dot(X, ctx.dalpha) * _dot(Y, ctx.dalpha)
    out = ric + 3.0 * (m - 1) / (2.0 * a**2) * xa_ya
    if with_hessian:
        out = out - (m - 1) / a * sym_bilinear(ctx.hess, X, Y)
        coeff = (m - 2) * ctx.grad_norm_sq / (2.0 * a**3) + ctx.laplacian / (2.0 * a**2)
    else:
        coeff = (m - 2) * ctx.grad_norm_sq / (2.0 * a**3)
    return out - coeff * gt


def closed_form_ricci_tensor(ctx: DeformationContext, X, Y) -> np.ndarray:
    """Deformed Ricci tensor on (X, Y); symmetric in its arguments bit-for-bit."""
    return _ricci_tensor(ctx, X, Y, with_hessian=True)


def killing_ricci_tensor(ctx: DeformationContext, X, Y, tol: float = KILLING_TOL) -> np.ndarray:
    _require_killing(ctx, tol)
    return _ricci_tensor(ctx, X, Y, with_hessian=False)


def closed_form_scalar(ctx: DeformationContext) -> np.ndarray:
    """Deformed scalar curvature."""
    a = ctx.alpha
    m = ctx.m
    return (
        ctx.base.scalar / a
        - (2 * m - 1) * ctx.laplacian / a**2
        - (2 * m - 1) * (m - 3) * ctx.grad_norm_sq / (2.0 * a**3)
    )


def killing_scalar(ctx: DeformationContext, tol: float = KILLING_TOL) -> np.ndarray:
    _require_killing(ctx, tol)
    a = ctx.alpha
    m = ctx.m
    return ctx.base.scalar / a - (2 * m - 1) * (m - 3) * ctx.grad_norm_sq / (2.0 * a**3)


# -- Killing corollary suite ------------------------------------------------------


@dataclass(frozen=True)
class KillingSuiteReport:
    deviations: dict
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.deviations.values())


def killing_corollary_suite(ctx: DeformationContext, seed: int = 0,
                            tol: float = 1e-10,
                            killing_tol: float = KILLING_TOL) -> KillingSuiteReport:
    """Evaluate every reduced (Killing) form against its full counterpart.

    Refuses unless alpha is a Killing potential within ``killing_tol``.
    """
    _require_killing(ctx, killing_tol)
    n = ctx.n
    rng = np.random.default_rng(seed)
    eye = np.eye(n)
    dev: dict[str, float] = {}

    worst = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                full = closed_form_riemann(ctx, eye[i], eye[j], eye[k])
                red = killing_riemann(ctx, eye[i], eye[j], eye[k], killing_tol)
                worst = max(worst, float(np.max(np.abs(full - red))))
    dev["riemann"] = worst

    worst = 0.0
    for _ in range(4):
        pair = gram_schmidt(ctx.g, rng.standard_normal(ctx.points.shape[:-1] + (2, n)))
        X, Y = pair[..., 0, :], pair[..., 1, :]
        full = closed_form_sectional(ctx, X, Y)
        red = killing_sectional(ctx, X, Y, killing_tol)
        worst = max(worst, float(np.max(np.abs(full - red))))
    dev["sectional"] = worst

    worst = 0.0
    for i in range(n):
        full = closed_form_ricci_operator(ctx, eye[i])
        red = killing_ricci_operator(ctx, eye[i], killing_tol)
        worst = max(worst, float(np.max(np.abs(full - red))))
    dev["ricci_operator"] = worst

    worst = 0.0
    for i in range(n):
        for j in range(n):
            full = closed_form_ricci_tensor(ctx, eye[i], eye[j])
            red = killing_ricci_tensor(ctx, eye[i], eye[j], killing_tol)
            worst = max(worst, float(np.max(np.abs(full - red))))
    dev["ricci_tensor"] = worst

    dev["scalar"] = float(
        np.max(np.abs(closed_form_scalar(ctx) - killing_scalar(ctx, killing_tol)))
    )

    return KillingSuiteReport(deviations=dev, tolerance=tol)


# -- the deformed orthonormal frame ------------------------------------------------


def deformed_frame(ctx: DeformationContext) -> np.ndarray:
    """A g^a-orthonormal frame (B, n, n): e_i/sqrt(a) with FV/sqrt(2a) last.

    Built from a base g-orthonormal frame whose last vector is FV.
    """
    try:
        base_frame = frame_with_vector_last(ctx.g, ctx.fv)
    except FrameError:
        raise FrameError("could not build a frame adapted to FV") from None
    scale = np.full(ctx.points.shape[:-1] + (ctx.n,), np.nan)
    scale[..., : ctx.n - 1] = (1.0 / np.sqrt(ctx.alpha))[..., None]
    scale[..., ctx.n - 1] = 1.0 / np.sqrt(2.0 * ctx.alpha)
    return base_frame * scale[..., :, None]
