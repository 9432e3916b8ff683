"""Definition-based Riemannian geometry on a coordinate chart.

Everything here is computed from metric components and their exact jets:
Christoffel symbols from the coordinate Koszul formula, the curvature tensor
from derivatives of the Christoffel symbols, Ricci data by contraction, and
gradient/Hessian/Laplacian of scalar fields. The deformed branch assembles
the conformally deformed metric components symbolically (as jets) and feeds
them through the same machinery, so it never consults any closed form.

Index conventions, used everywhere in this package:

* ``gamma[..., k, i, j]``   is Gamma^k_ij (torsion free: symmetric in i, j);
* ``riemann[..., l, i, j, k]`` is the l-component of R(d_i, d_j) d_k, i.e.
  R^l_ijk = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_ip Gamma^p_jk
            - Gamma^l_jp Gamma^p_ik;
* ``ricci[..., j, k]`` = R^i_ijk (symmetric), ``scalar`` = g^jk ricci_jk;
* ``ricci_op[..., k, i]`` = g^kw ricci_wi, so the Ricci operator acts as
  ``einsum('...ki,...i->...k', ricci_op, X)`` and satisfies
  g(Ricci(X), Y) = ricci(X, Y).

With these conventions the unit round 2-sphere has scalar curvature +2.

All operations are pure functions of (spec, points); a ``ChartGeometry`` is
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .expr import Expression, eval_jet, parse_expression
from .jets import Jet
from .manifolds import ManifoldSpec

__all__ = [
    "ChartGeometry",
    "ConnectionCoefficients",
    "CurvatureBundle",
    "ChartDomainError",
    "SingularMetricError",
    "FrameError",
    "metric_at",
    "christoffel_at",
    "riemann_at",
    "gradient_at",
    "hessian_at",
    "laplacian_at",
    "killing_potential_residual",
    "gram_schmidt",
    "random_orthonormal_pairs",
    "frame_with_vector_last",
]

MAX_CONDITION = 1e12


class ChartDomainError(ValueError):
    """A point lies outside the chart's domain box."""


class SingularMetricError(ValueError):
    """The metric is singular or too ill-conditioned at a sampled point."""


class FrameError(ValueError):
    """Frame vectors were too close to linearly dependent to orthonormalize."""


@dataclass(frozen=True, eq=False)
class ConnectionCoefficients:
    """Gamma^k_ij of the Levi-Civita connection at one point."""

    gamma: np.ndarray  # (n, n, n), [k, i, j]
    which_metric: str  # "base" | "deformed"


@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    """Curvature data of one metric at one point."""

    riemann: np.ndarray  # (n, n, n, n), [l, i, j, k]
    ricci_operator: np.ndarray  # (n, n), [k, i]
    ricci_tensor: np.ndarray  # (n, n), symmetric
    scalar: float


# -- jet-valued linear algebra -------------------------------------------------


def jet_matrix_values(jets) -> np.ndarray:
    """Stack the values of a nested list of jets into one array."""
    rows = [np.stack([e.value for e in row], axis=-1) for row in jets]
    return np.stack(rows, axis=-2)


def jet_vector_values(jets) -> np.ndarray:
    return np.stack([e.value for e in jets], axis=-1)


def invert_jet_matrix(mat, n: int):
    """Gauss-Jordan inverse of a jet-valued SPD matrix (no pivoting needed)."""
    a = [list(row) for row in mat]
    first = mat[0][0]
    eye = [
        [first._const_like(1.0 if i == j else 0.0) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        piv = a[col][col]
        if np.any(np.abs(piv.value) < 1e-300):
            raise SingularMetricError("zero pivot while inverting the metric")
        inv_piv = 1.0 / piv
        for j in range(n):
            a[col][j] = a[col][j] * inv_piv
            eye[col][j] = eye[col][j] * inv_piv
        for row in range(n):
            if row == col:
                continue
            f = a[row][col]
            for j in range(n):
                a[row][j] = a[row][j] - f * a[col][j]
                eye[row][j] = eye[row][j] - f * eye[col][j]
    return eye


def christoffel_from_metric(g_jets, ginv_jets, n: int):
    """Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij), as jets."""
    dg = [
        [[g_jets[a][b].partial(c) for c in range(n)] for b in range(n)]
        for a in range(n)
    ]
    gamma = []
    for k in range(n):
        rows = []
        for i in range(n):
            row = []
            for j in range(i + 1):
                acc = None
                for l in range(n):
                    term = ginv_jets[k][l] * (dg[j][l][i] + dg[i][l][j] - dg[i][j][l])
                    acc = term if acc is None else acc + term
                row.append(acc * 0.5)
            rows.append(row)
        # symmetric completion: Gamma^k_ij = Gamma^k_ji
        full = [[rows[max(i, j)][min(i, j)] for j in range(n)] for i in range(n)]
        gamma.append(full)
    return gamma


def riemann_from_christoffel(gamma_jets, n: int):
    """R^l_ijk jets (order one lower than the connection jets)."""
    dgam = [
        [[[gamma_jets[l][a][b].partial(c) for c in range(n)] for b in range(n)] for a in range(n)]
        for l in range(n)
    ]
    zero = gamma_jets[0][0][0].partial(0)
    zero = zero - zero  # order-1 zero jet with the right batch shape
    riem = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for l in range(n):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if i == j:
                        riem[l][i][j][k] = zero
                        continue
                    if i > j:
                        riem[l][i][j][k] = -riem[l][j][i][k]
                        continue
                    acc = dgam[l][j][k][i] - dgam[l][i][k][j]
                    for p in range(n):
                        acc = acc + (
                            gamma_jets[l][i][p] * gamma_jets[p][j][k]
                            - gamma_jets[l][j][p] * gamma_jets[p][i][k]
                        )
                    riem[l][i][j][k] = acc
    return riem


# -- chart geometry bundle -----------------------------------------------------


class ChartGeometry:
    """All metric-derived quantities of one chart at a batch of points.

    Construction is cheap; each derived quantity is computed once on first
    access and cached. ``which`` selects the base metric g or its conformal
    Berger-type deformation g^alpha = alpha (g_ij + w_i w_j) with
    w_i = g_ik (F V)^k.
    """

    def __init__(self, spec: ManifoldSpec, points, which: str = "base",
                 check_domain: bool = True):
        if which not in ("base", "deformed"):
            raise ValueError(f"which must be 'base' or 'deformed', got {which!r}")
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != spec.dimension:
            raise ValueError(
                f"points must have shape (B, {spec.dimension}), got {pts.shape}"
            )
        if check_domain:
            box = np.asarray(spec.domain)
            slack = 1e-9
            bad = (pts < box[:, 0] - slack) | (pts > box[:, 1] + slack)
            if np.any(bad):
                idx = int(np.argwhere(bad.any(axis=1))[0][0])
                raise ChartDomainError(
                    f"point {pts[idx].tolist()} outside the domain box of {spec.name!r}"
                )
        self.spec = spec
        self.points = pts
        self.which = which
        self.n = spec.dimension

    # --- field evaluation

    @cached_property
    def base_metric_jets(self):
        n = self.n
        return [
            [eval_jet(self.spec.metric[i][j], self.points) for j in range(n)]
            for i in range(n)
        ]

    @cached_property
    def alpha_jets(self) -> Jet:
        return eval_jet(self.spec.alpha, self.points)

    @cached_property
    def F_jets(self):
        n = self.n
        return [
            [eval_jet(self.spec.F[i][j], self.points) for j in range(n)]
            for i in range(n)
        ]

    @cached_property
    def V_jets(self):
        return [eval_jet(self.spec.V[i], self.points) for i in range(self.n)]

    @cached_property
    def fv_jets(self):
        """(F V)^i = F^i_j V^j as jets."""
        n = self.n
        out = []
        for i in range(n):
            acc = None
            for j in range(n):
                term = self.F_jets[i][j] * self.V_jets[j]
                acc = term if acc is None else acc + term
            out.append(acc)
        return out

    @cached_property
    def omega_jets(self):
        """w_i = g_ik (F V)^k, the covariant deformation direction."""
        n = self.n
        out = []
        for i in range(n):
            acc = None
            for k in range(n):
                term = self.base_metric_jets[i][k] * self.fv_jets[k]
                acc = term if acc is None else acc + term
            out.append(acc)
        return out

    @cached_property
    def metric_jets(self):
        if self.which == "base":
            return self.base_metric_jets
        n = self.n
        a = self.alpha_jets
        w = self.omega_jets
        g = self.base_metric_jets
        return [[a * (g[i][j] + w[i] * w[j]) for j in range(n)] for i in range(n)]

    # --- metric-level data

    @cached_property
    def g(self) -> np.ndarray:
        vals = jet_matrix_values(self.metric_jets)
        cond = np.linalg.cond(vals)
        if np.any(~np.isfinite(cond)) or np.any(cond > MAX_CONDITION):
            raise SingularMetricError(
                f"metric of {self.spec.name!r} has condition number above {MAX_CONDITION:g}"
            )
        return vals

    @cached_property
    def g_inv_jets(self):
        _ = self.g  # condition check first
        return invert_jet_matrix(self.metric_jets, self.n)

    @cached_property
    def g_inv(self) -> np.ndarray:
        return jet_matrix_values(self.g_inv_jets)

    @cached_property
    def gamma_jets(self):
        return christoffel_from_metric(self.metric_jets, self.g_inv_jets, self.n)

    @cached_property
    def gamma(self) -> np.ndarray:
        n = self.n
        rows = [jet_matrix_values(self.gamma_jets[k]) for k in range(n)]
        return np.stack(rows, axis=-3)

    @cached_property
    def riemann_jets(self):
        return riemann_from_christoffel(self.gamma_jets, self.n)

    @cached_property
    def riemann(self) -> np.ndarray:
        n = self.n
        blocks = [
            np.stack(
                [jet_matrix_values(self.riemann_jets[l][i]) for i in range(n)],
                axis=-3,
            )
            for l in range(n)
        ]
        return np.stack(blocks, axis=-4)

    @cached_property
    def ricci(self) -> np.ndarray:
        ric = np.einsum("...iijk->...jk", self.riemann)
        return 0.5 * (ric + np.swapaxes(ric, -1, -2))

    @cached_property
    def ricci_op(self) -> np.ndarray:
        return np.einsum("...kw,...wi->...ki", self.g_inv, self.ricci)

    @cached_property
    def scalar(self) -> np.ndarray:
        return np.einsum("...jk,...jk->...", self.g_inv, self.ricci)

    def bundle(self, index: int = 0) -> CurvatureBundle:
        return CurvatureBundle(
            riemann=self.riemann[index],
            ricci_operator=self.ricci_op[index],
            ricci_tensor=self.ricci[index],
            scalar=float(self.scalar[index]),
        )


# -- scalar-field calculus ----------------------------------------------------


def _field_expression(spec: ManifoldSpec, field) -> Expression:
    if isinstance(field, Expression):
        return field
    return parse_expression(field, spec.coordinates)


def field_jets(geom: ChartGeometry, field) -> Jet:
    return eval_jet(_field_expression(geom.spec, field), geom.points)


def gradient_values(geom: ChartGeometry, fjets: Jet) -> np.ndarray:
    df = np.stack([fjets.partial(j).value for j in range(geom.n)], axis=-1)
    return np.einsum("...ij,...j->...i", geom.g_inv, df)


def gradient_jets(geom: ChartGeometry, fjets: Jet):
    n = geom.n
    parts = [fjets.partial(j) for j in range(n)]
    out = []
    for i in range(n):
        acc = None
        for j in range(n):
            term = geom.g_inv_jets[i][j] * parts[j]
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def hessian_values(geom: ChartGeometry, fjets: Jet) -> np.ndarray:
    """Hess_ij = d_i d_j f - Gamma^k_ij d_k f."""
    n = geom.n
    d2 = np.stack(
        [
            np.stack([fjets.partial(i).partial(j).value for j in range(n)], axis=-1)
            for i in range(n)
        ],
        axis=-2,
    )
    df = np.stack([fjets.partial(k).value for k in range(n)], axis=-1)
    return d2 - np.einsum("...kij,...k->...ij", geom.gamma, df)


def laplacian_values(geom: ChartGeometry, fjets: Jet) -> np.ndarray:
    return np.einsum("...ij,...ij->...", geom.g_inv, hessian_values(geom, fjets))


# -- single-point operation surface --------------------------------------------


def metric_at(spec: ManifoldSpec, point, which: str = "base"):
    """Metric matrix, its inverse and the component jets at one point."""
    geom = ChartGeometry(spec, point, which)
    jets = [[geom.metric_jets[i][j] for j in range(geom.n)] for i in range(geom.n)]
    return geom.g[0], geom.g_inv[0], jets


def christoffel_at(spec: ManifoldSpec, point, which: str = "base") -> ConnectionCoefficients:
    geom = ChartGeometry(spec, point, which)
    return ConnectionCoefficients(gamma=geom.gamma[0], which_metric=which)


def riemann_at(spec: ManifoldSpec, point, which: str = "base") -> CurvatureBundle:
    return ChartGeometry(spec, point, which).bundle(0)


def gradient_at(spec: ManifoldSpec, point, field, which: str = "base") -> np.ndarray:
    geom = ChartGeometry(spec, point, which)
    return gradient_values(geom, field_jets(geom, field))[0]


def hessian_at(spec: ManifoldSpec, point, field, which: str = "base") -> np.ndarray:
    geom = ChartGeometry(spec, point, which)
    return hessian_values(geom, field_jets(geom, field))[0]


def laplacian_at(spec: ManifoldSpec, point, field, which: str = "base") -> float:
    geom = ChartGeometry(spec, point, which)
    return float(laplacian_values(geom, field_jets(geom, field))[0])


def killing_potential_residual(spec: ManifoldSpec, field, points) -> float:
    """max |Hess f| over the sample set; ~0 iff f is a Killing potential."""
    geom = ChartGeometry(spec, points, "base")
    hess = hessian_values(geom, field_jets(geom, field))
    return float(np.max(np.abs(hess)))


# -- frames ---------------------------------------------------------------------


def gram_schmidt(g: np.ndarray, vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormalize ``vectors`` (..., k, n) against the metric ``g``.

    Near-dependent inputs are rejected rather than silently perturbed.
    """
    vectors = np.asarray(vectors, dtype=float)
    k = vectors.shape[-2]
    out = []
    for a in range(k):
        v = vectors[..., a, :].copy()
        for b in range(a):
            coeff = np.einsum("...ij,...i,...j->...", g, v, out[b])
            v = v - coeff[..., None] * out[b]
        norm2 = np.einsum("...ij,...i,...j->...", g, v, v)
        if np.any(norm2 < tol):
            raise FrameError("input vectors are numerically dependent")
        out.append(v / np.sqrt(norm2)[..., None])
    return np.stack(out, axis=-2)


def random_orthonormal_pairs(g: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` g-orthonormal pairs per point, shape (B, count, 2, n)."""
    batch = g.shape[:-2]
    n = g.shape[-1]
    pairs = []
    for _ in range(count):
        raw = rng.standard_normal(batch + (2, n))
        pairs.append(gram_schmidt(g, raw))
    return np.stack(pairs, axis=-3)


def frame_with_vector_last(g: np.ndarray, w: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """A g-orthonormal frame (..., n, n) whose last vector is w/|w|_g."""
    n = g.shape[-1]
    batch = np.broadcast_shapes(g.shape[:-2], w.shape[:-1])
    candidates = [np.broadcast_to(w, batch + (n,))]
    eye = np.eye(n)
    for i in range(n):
        candidates.append(np.broadcast_to(eye[i], batch + (n,)))
    frame = []
    for cand in candidates:
        v = cand.copy()
        for b in frame:
            coeff = np.einsum("...ij,...i,...j->...", g, v, b)
            v = v - coeff[..., None] * b
        norm2 = np.einsum("...ij,...i,...j->...", g, v, v)
        if np.any(norm2 < tol):
            continue  # candidate dependent on earlier ones at some point
        frame.append(v / np.sqrt(norm2)[..., None])
        if len(frame) == n:
            break
    if len(frame) < n:
        raise FrameError("could not complete an orthonormal frame")
    # the first frame vector is the normalized w; spec'd frames put it last
    return np.stack(frame[1:] + frame[:1], axis=-2)
