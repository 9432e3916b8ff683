"""Shared plumbing for maps between charts: component jets and the pullback
tension kernel. Used by both the closed-form side and the oracle."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .chart import ChartDomainError, ChartGeometry
from .expr import eval_jet
from .manifolds import MapSpec

__all__ = ["MapGeometry", "base_tension"]


class MapGeometry:
    """Jets of the map components plus source/target geometry at a batch.

    ``deformed`` overrides the map's tag, selecting which side carries the
    deformed metric for the geometry properties.
    """

    def __init__(self, map_spec: MapSpec, points, deformed: str | None = None):
        self.map_spec = map_spec
        self.deformed = map_spec.deformed if deformed is None else deformed
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        self.points = pts
        self.ns = map_spec.source.dimension
        self.nt = map_spec.target.dimension

    @cached_property
    def phi_jets(self):
        return [eval_jet(c, self.points) for c in self.map_spec.components]

    @cached_property
    def image(self) -> np.ndarray:
        img = np.stack([j.value for j in self.phi_jets], axis=-1)
        box = np.asarray(self.map_spec.target.domain)
        slack = 1e-9
        if np.any((img < box[:, 0] - slack) | (img > box[:, 1] + slack)):
            raise ChartDomainError(
                "the map sends sampled points outside the target domain box"
            )
        return img

    @cached_property
    def dphi(self) -> np.ndarray:
        """[..., gamma, i] = d_i phi^gamma."""
        return np.stack(
            [
                np.stack([j.partial(i).value for i in range(self.ns)], axis=-1)
                for j in self.phi_jets
            ],
            axis=-2,
        )

    @cached_property
    def d2phi(self) -> np.ndarray:
        """[..., gamma, i, j] = d_i d_j phi^gamma."""
        return np.stack(
            [
                np.stack(
                    [
                        np.stack(
                            [j.partial(i).partial(k).value for k in range(self.ns)],
                            axis=-1,
                        )
                        for i in range(self.ns)
                    ],
                    axis=-2,
                )
                for j in self.phi_jets
            ],
            axis=-3,
        )

    @cached_property
    def source_geometry(self) -> ChartGeometry:
        which = "deformed" if self.deformed == "source" else "base"
        return ChartGeometry(self.map_spec.source, self.points, which)

    @cached_property
    def target_geometry(self) -> ChartGeometry:
        which = "deformed" if self.deformed == "target" else "base"
        return ChartGeometry(self.map_spec.target, self.image, which, check_domain=False)


def base_tension(mg: MapGeometry, source_geom: ChartGeometry,
                 target_geom: ChartGeometry) -> np.ndarray:
    """tau^c = g^ij (d_i d_j phi^c - Gs^k_ij d_k phi^c + Gt^c_mn d_i phi^m d_j phi^n)."""
    gs_inv = source_geom.g_inv
    out = np.einsum("...ij,...cij->...c", gs_inv, mg.d2phi)
    out = out - np.einsum("...ij,...kij,...ck->...c", gs_inv, source_geom.gamma, mg.dphi)
    out = out + np.einsum(
        "...ij,...cmn,...mi,...nj->...c", gs_inv, target_geom.gamma, mg.dphi, mg.dphi
    )
    return out
