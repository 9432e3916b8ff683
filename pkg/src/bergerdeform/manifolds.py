"""Chart descriptions and JSON manifest loading.

A :class:`ManifoldSpec` is the single source of truth for one coordinate
chart: an even dimension 2m, the metric components g_ij, the (1,1) structure
tensor F^i_j (row = upper index), the distinguished vector field V^i, the
conformal factor alpha, and a per-coordinate domain box. All fields are
compiled expressions in the chart coordinates.

Manifold manifest (UTF-8 JSON):

    { "dimension": <even int>, "coordinates": [<id>...],
      "metric": [[<expr>...]...], "F": [[<expr>...]...], "V": [<expr>...],
      "alpha": <expr>, "domain": [[lo, hi]...], "name": <string> }

Map manifest:

    { "source": <path or builtin>, "target": <path or builtin>,
      "components": [<expr>...], "deformed": "source" | "target" | "none" }

Built-in charts: ``flat2`` (dimension 2: identity metric, F swapping the two
coordinates, V the first coordinate field, alpha = 1 + x^2) and ``flat4``
(dimension 4 analogue with the two coordinate pairs swapped and
alpha = 1 + x2^2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .expr import CONSTANTS, Expression, ExpressionError, parse_expression
from .jets import JET_FUNCTIONS

__all__ = [
    "ManifoldSpec",
    "MapSpec",
    "ManifestError",
    "BUILTIN_MANIFESTS",
    "load_manifold",
    "load_map",
    "manifold_from_manifest",
    "map_from_manifest",
    "with_alpha",
]

_RESERVED = set(CONSTANTS) | set(JET_FUNCTIONS)


class ManifestError(ValueError):
    """A manifest is malformed or inconsistent."""


@dataclass(frozen=True)
class ManifoldSpec:
    """Immutable description of one chart; safe to share across threads."""

    name: str
    coordinates: tuple[str, ...]
    metric: tuple[tuple[Expression, ...], ...]
    F: tuple[tuple[Expression, ...], ...]
    V: tuple[Expression, ...]
    alpha: Expression
    domain: tuple[tuple[float, float], ...]

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    @property
    def m(self) -> int:
        return self.dimension // 2


@dataclass(frozen=True)
class MapSpec:
    """A smooth map between two charts, with a deformation side tag."""

    source: ManifoldSpec
    target: ManifoldSpec
    components: tuple[Expression, ...]
    deformed: str  # "source" | "target" | "none"


def _parse_field(source, coordinates, where: str) -> Expression:
    if not isinstance(source, str):
        raise ManifestError(f"{where}: expected an expression string, got {source!r}")
    try:
        return parse_expression(source, coordinates)
    except ExpressionError as err:
        raise ManifestError(f"{where}: {err}") from None


def manifold_from_manifest(doc: dict, name: str | None = None) -> ManifoldSpec:
    if not isinstance(doc, dict):
        raise ManifestError("manifold manifest must be a JSON object")
    try:
        dim = doc["dimension"]
        coords = doc["coordinates"]
        metric = doc["metric"]
        F = doc["F"]
        V = doc["V"]
        alpha = doc["alpha"]
        domain = doc["domain"]
    except KeyError as err:
        raise ManifestError(f"missing manifest key {err.args[0]!r}") from None

    if not isinstance(dim, int) or dim < 2 or dim % 2 != 0:
        raise ManifestError(f"dimension must be an even integer >= 2, got {dim!r}")
    if not isinstance(coords, list) or len(coords) != dim:
        raise ManifestError(f"expected {dim} coordinates, got {coords!r}")
    for c in coords:
        if not isinstance(c, str) or not c.isidentifier():
            raise ManifestError(f"bad coordinate name {c!r}")
        if c in _RESERVED:
            raise ManifestError(f"coordinate name {c!r} is reserved")
    if len(set(coords)) != dim:
        raise ManifestError("coordinate names must be distinct")

    def parse_matrix(rows, label):
        if not isinstance(rows, list) or len(rows) != dim or any(
            not isinstance(r, list) or len(r) != dim for r in rows
        ):
            raise ManifestError(f"{label} must be a {dim}x{dim} matrix of expressions")
        return tuple(
            tuple(_parse_field(rows[i][j], coords, f"{label}[{i}][{j}]") for j in range(dim))
            for i in range(dim)
        )

    metric_ast = parse_matrix(metric, "metric")
    F_ast = parse_matrix(F, "F")
    if not isinstance(V, list) or len(V) != dim:
        raise ManifestError(f"V must have {dim} components")
    V_ast = tuple(_parse_field(V[i], coords, f"V[{i}]") for i in range(dim))
    alpha_ast = _parse_field(alpha, coords, "alpha")

    if not isinstance(domain, list) or len(domain) != dim:
        raise ManifestError(f"domain must list {dim} intervals")
    box = []
    for i, pair in enumerate(domain):
        try:
            lo, hi = float(pair[0]), float(pair[1])
        except (TypeError, ValueError, IndexError):
            raise ManifestError(f"domain[{i}] must be [lo, hi]") from None
        if not lo <= hi:
            raise ManifestError(f"domain[{i}]: lo must not exceed hi")
        box.append((lo, hi))

    return ManifoldSpec(
        name=name or doc.get("name", "unnamed"),
        coordinates=tuple(coords),
        metric=metric_ast,
        F=F_ast,
        V=V_ast,
        alpha=alpha_ast,
        domain=tuple(box),
    )


BUILTIN_MANIFESTS = {
    "flat2": {
        "name": "flat2",
        "dimension": 2,
        "coordinates": ["x", "y"],
        "metric": [["1", "0"], ["0", "1"]],
        "F": [["0", "1"], ["1", "0"]],
        "V": ["1", "0"],
        "alpha": "1 + x^2",
        "domain": [[-3, 3], [-3, 3]],
    },
    "flat4": {
        "name": "flat4",
        "dimension": 4,
        "coordinates": ["x1", "x2", "x3", "x4"],
        "metric": [
            ["1", "0", "0", "0"],
            ["0", "1", "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "1"],
        ],
        "F": [
            ["0", "0", "1", "0"],
            ["0", "0", "0", "1"],
            ["1", "0", "0", "0"],
            ["0", "1", "0", "0"],
        ],
        "V": ["1", "0", "0", "0"],
        "alpha": "1 + x2^2",
        "domain": [[-3, 3], [-3, 3], [-3, 3], [-3, 3]],
    },
}


def load_manifold(path_or_name: str) -> ManifoldSpec:
    """Load a chart from a builtin name or a JSON manifest path."""
    if path_or_name in BUILTIN_MANIFESTS:
        return manifold_from_manifest(BUILTIN_MANIFESTS[path_or_name], path_or_name)
    path = Path(path_or_name)
    if not path.exists():
        raise ManifestError(f"no builtin or manifest file named {path_or_name!r}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ManifestError(f"{path}: invalid JSON ({err})") from None
    return manifold_from_manifest(doc, doc.get("name", path.stem) if isinstance(doc, dict) else None)


def map_from_manifest(doc: dict, base_dir: Path | None = None) -> MapSpec:
    if not isinstance(doc, dict):
        raise ManifestError("map manifest must be a JSON object")
    for key in ("source", "target", "components", "deformed"):
        if key not in doc:
            raise ManifestError(f"missing map manifest key {key!r}")

    def resolve(ref, which):
        if not isinstance(ref, str):
            raise ManifestError(f"{which} must be a builtin name or path")
        if ref in BUILTIN_MANIFESTS:
            return load_manifold(ref)
        path = Path(ref)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_manifold(str(path))

    source = resolve(doc["source"], "source")
    target = resolve(doc["target"], "target")
    comps = doc["components"]
    if not isinstance(comps, list) or len(comps) != target.dimension:
        raise ManifestError(
            f"components must list {target.dimension} expressions in the source coordinates"
        )
    comps_ast = tuple(
        _parse_field(comps[i], source.coordinates, f"components[{i}]")
        for i in range(len(comps))
    )
    deformed = doc["deformed"]
    if deformed not in ("source", "target", "none"):
        raise ManifestError(f"deformed must be 'source', 'target' or 'none', got {deformed!r}")
    return MapSpec(source=source, target=target, components=comps_ast, deformed=deformed)


def load_map(path: str) -> MapSpec:
    p = Path(path)
    if not p.exists():
        raise ManifestError(f"no map manifest file named {path!r}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ManifestError(f"{p}: invalid JSON ({err})") from None
    return map_from_manifest(doc, base_dir=p.parent)


def with_alpha(spec: ManifoldSpec, alpha_source: str, name: str | None = None) -> ManifoldSpec:
    """Copy of ``spec`` with a different conformal factor."""
    alpha = _parse_field(alpha_source, spec.coordinates, "alpha")
    return replace(spec, alpha=alpha, name=name or f"{spec.name}[alpha={alpha_source}]")
