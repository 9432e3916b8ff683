"""Batch front-end: load manifests, run validation/comparison campaigns and
harmonicity classifications, and emit text or JSON reports.

Exit codes: 0 all checks passed, 1 a check failed (or a theorem-level command
was refused on an invalid spec), 2 input or parse error.

JSON reports share one top-level shape:

    { "spec": <name>, "command": <command>, "results": [
        { "formula": <id>, "max_abs": x, "max_rel": x,
          "worst_point": [...], "pass": bool, ... } ... ] }

Runs are deterministic for fixed inputs and --seed; forced runs on specs that
fail validation carry a "forced" watermark.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .chart import ChartDomainError, FrameError, SingularMetricError
from .compare import (
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    FORMULA_IDS,
    UnknownFormulaError,
    compare,
    compare_all,
)
from .expr import ExpressionError
from .manifolds import ManifestError, load_manifold, load_map
from .maps import (
    HARMONIC_TOL,
    classify_biharmonic,
    identity_harmonicity,
    tension_map_from_deformed,
    tension_map_to_deformed,
)
from .oracle import oracle_tension
from .sampling import sample_points
from .structure import DEFAULT_TOLERANCE, SpecValidationError, require_valid, validate_structure

__all__ = ["main", "build_parser", "run_command"]

DEFAULT_SAMPLES = 200
DEFAULT_SEED = 42


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bergerdeform",
        description="Verify Berger-type conformal deformation formulas against a "
        "definition-based numerical oracle.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, samples=True):
        if samples:
            sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                            help="number of sample points (default %(default)s)")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="sampling seed (default %(default)s)")

    sp = sub.add_parser("validate", help="run all structural checks")
    sp.add_argument("manifest")
    add_common(sp)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE,
                    help="residual tolerance (default %(default)s)")

    sp = sub.add_parser("report", help="closed forms and oracle side by side at one point")
    sp.add_argument("manifest")
    sp.add_argument("--point", required=True,
                    help="comma-separated coordinates v1,...,v2m")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--force", action="store_true",
                    help="run even if structural validation fails (watermarked)")

    sp = sub.add_parser("compare", help="closed form vs oracle over sampled points")
    sp.add_argument("manifest")
    sp.add_argument("--formula", default="all",
                    help="formula id or 'all' (ids: %s)" % ", ".join(FORMULA_IDS))
    add_common(sp)
    sp.add_argument("--abs", dest="abs_tol", type=float, default=DEFAULT_ABS_TOL,
                    help="absolute tolerance (default %(default)s)")
    sp.add_argument("--rel", dest="rel_tol", type=float, default=DEFAULT_REL_TOL,
                    help="relative tolerance (default %(default)s)")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--force", action="store_true")

    sp = sub.add_parser("harmonic", help="harmonicity of the identity map")
    sp.add_argument("manifest")
    sp.add_argument("--direction", required=True,
                    choices=["to-deformed", "from-deformed"])
    sp.add_argument("--tol", type=float, default=HARMONIC_TOL)
    add_common(sp)
    sp.add_argument("--force", action="store_true")

    sp = sub.add_parser("biharmonic", help="biharmonicity of the identity map")
    sp.add_argument("manifest")
    sp.add_argument("--direction", required=True,
                    choices=["to-deformed", "from-deformed"])
    sp.add_argument("--tol", type=float, default=HARMONIC_TOL)
    add_common(sp)
    sp.add_argument("--force", action="store_true")

    sp = sub.add_parser("map-tension", help="general-map tension closed form vs oracle")
    sp.add_argument("map_manifest")
    add_common(sp)
    sp.add_argument("--abs", dest="abs_tol", type=float, default=DEFAULT_ABS_TOL)
    sp.add_argument("--rel", dest="rel_tol", type=float, default=DEFAULT_REL_TOL)
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--force", action="store_true")

    return p


def _emit_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _forced_banner(forced: bool) -> None:
    if forced:
        print("!! structural validation FAILED; results computed under --force")


def _report_rows(reports) -> list[dict]:
    return [r.to_dict() for r in reports]


def _cmd_validate(args) -> int:
    spec = load_manifold(args.manifest)
    report = validate_structure(spec, args.samples, args.seed, args.tol)
    print(f"validate {spec.name}: {args.samples} samples, seed {args.seed}, "
          f"tolerance {args.tol:g}")
    for c in report.checks:
        if c.skipped:
            status = " n/a"
        else:
            status = "pass" if c.passed else "FAIL"
        detail = f"  ({c.detail})" if c.detail else ""
        print(f"  {status}  {c.name:28s} residual {c.residual:.3e}{detail}")
    print("all checks passed" if report.passed else "validation FAILED")
    return 0 if report.passed else 1


def _cmd_report(args) -> int:
    spec = load_manifold(args.manifest)
    try:
        point = [float(v) for v in args.point.split(",")]
    except ValueError:
        print(f"error: --point must be comma-separated numbers, got {args.point!r}",
              file=sys.stderr)
        return 2
    if len(point) != spec.dimension:
        print(f"error: --point needs {spec.dimension} coordinates, got {len(point)}",
              file=sys.stderr)
        return 2
    gate = require_valid(spec, force=args.force)
    forced = args.force and not gate.passed
    pts = np.asarray([point])
    reports = compare_all(spec, seed=args.seed, force=args.force, points=pts)
    if args.json:
        doc = {"spec": spec.name, "command": "report", "point": point,
               "results": _report_rows(reports)}
        if forced:
            doc["forced"] = True
        _emit_json(doc)
    else:
        _forced_banner(forced)
        print(f"report for {spec.name} at {point}")
        print(f"  {'formula':24s} {'closed (worst)':>16s} {'oracle (worst)':>16s} {'max abs':>10s}")
        for r in reports:
            print(f"  {r.formula:24s} {r.worst_closed:16.9g} {r.worst_oracle:16.9g} "
                  f"{r.max_abs:10.3e}")
    return 0 if all(r.passed for r in reports) else 1


def _cmd_compare(args) -> int:
    spec = load_manifold(args.manifest)
    kwargs = dict(n_samples=args.samples, seed=args.seed, abs_tol=args.abs_tol,
                  rel_tol=args.rel_tol, force=args.force)
    if args.formula == "all":
        reports = compare_all(spec, **kwargs)
    else:
        reports = [compare(args.formula, spec, **kwargs)]
    forced = any(r.forced for r in reports)
    if args.json:
        doc = {"spec": spec.name, "command": "compare",
               "samples": args.samples, "seed": args.seed,
               "abs_tol": args.abs_tol, "rel_tol": args.rel_tol,
               "results": _report_rows(reports)}
        if forced:
            doc["forced"] = True
        _emit_json(doc)
    else:
        _forced_banner(forced)
        print(f"compare {spec.name}: {args.samples} samples, seed {args.seed}, "
              f"abs {args.abs_tol:g} / rel {args.rel_tol:g}")
        for r in reports:
            status = "pass" if r.passed else "FAIL"
            print(f"  {status}  {r.formula:24s} max_abs {r.max_abs:.3e}  "
                  f"max_rel {r.max_rel:.3e}  worst at {list(r.worst_point)}")
    return 0 if all(r.passed for r in reports) else 1


def _cmd_harmonic(args) -> int:
    spec = load_manifold(args.manifest)
    gate = require_valid(spec, force=args.force)
    _forced_banner(args.force and not gate.passed)
    result = identity_harmonicity(spec, args.direction, args.samples, args.seed, args.tol)
    print(f"harmonic {spec.name} --direction {args.direction}: "
          f"max tension norm {result.residual:.3e} (tol {args.tol:g})")
    if result.harmonic and result.reason:
        print(f"harmonic ({result.reason})")
    else:
        print(result.classification)
    return 0


def _cmd_biharmonic(args) -> int:
    spec = load_manifold(args.manifest)
    gate = require_valid(spec, force=args.force)
    _forced_banner(args.force and not gate.passed)
    result = classify_biharmonic(spec, args.direction, args.samples, args.seed, args.tol)
    print(f"biharmonic {spec.name} --direction {args.direction}: "
          f"tension {result.tension_residual:.3e}, "
          f"bitension {result.bitension_residual:.3e} (tol {args.tol:g})")
    print(result.classification)
    return 0


def _cmd_map_tension(args) -> int:
    mp = load_map(args.map_manifest)
    if mp.deformed == "none":
        print("error: map-tension needs a map with deformed='source' or 'target'",
              file=sys.stderr)
        return 2
    deformed_spec = mp.source if mp.deformed == "source" else mp.target
    gate = require_valid(deformed_spec, force=args.force)
    forced = args.force and not gate.passed
    points = sample_points(mp.source.domain, args.samples, args.seed)
    if mp.deformed == "target":
        closed = tension_map_to_deformed(mp, points)
        formula = "map-tension-to-deformed"
    else:
        closed = tension_map_from_deformed(mp, points)
        formula = "map-tension-from-deformed"
    orac = oracle_tension(mp, points)
    diff = np.abs(closed - orac)
    scale = np.maximum(np.abs(closed), np.abs(orac))
    rel = np.where(scale > 0.0, diff / np.where(scale > 0.0, scale, 1.0), 0.0)
    ok = bool(np.all((diff <= args.abs_tol) | (rel <= args.rel_tol)))
    worst = int(np.argmax(diff.reshape(args.samples, -1).max(axis=1)))
    row = {
        "formula": formula,
        "points": args.samples,
        "max_abs": float(diff.max()),
        "mean_abs": float(diff.mean()),
        "max_rel": float(rel.max()),
        "mean_rel": float(rel.mean()),
        "worst_point": [float(v) for v in points[worst]],
        "pass": ok,
    }
    if args.json:
        doc = {"spec": f"{mp.source.name}->{mp.target.name}", "command": "map-tension",
               "samples": args.samples, "seed": args.seed, "results": [row]}
        if forced:
            doc["forced"] = True
        _emit_json(doc)
    else:
        _forced_banner(forced)
        print(f"map-tension {mp.source.name} -> {mp.target.name} (deformed {mp.deformed})")
        print(f"  {'pass' if ok else 'FAIL'}  max_abs {row['max_abs']:.3e}  "
              f"max_rel {row['max_rel']:.3e}  worst at {row['worst_point']}")
    return 0 if ok else 1


_HANDLERS = {
    "validate": _cmd_validate,
    "report": _cmd_report,
    "compare": _cmd_compare,
    "harmonic": _cmd_harmonic,
    "biharmonic": _cmd_biharmonic,
    "map-tension": _cmd_map_tension,
}


def run_command(args: argparse.Namespace) -> int:
    """Dispatch a parsed command; returns the process exit code."""
    try:
        return _HANDLERS[args.command](args)
    except SpecValidationError as err:
        print(f"refused: {err}", file=sys.stderr)
        return 1
    except (ManifestError, ExpressionError, UnknownFormulaError, ChartDomainError,
            SingularMetricError, FrameError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run_command(args)


if __name__ == "__main__":
    raise SystemExit(main())
