"""Command-line front end.

Exit codes: 0 when the verification passes, 1 when it fails, 2 for usage
or input errors.  ``--json`` emits one sorted JSON document per run, so
equal inputs and seeds give byte-identical output.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Any, Optional, Sequence

import numpy as np

from . import atlas, euclid_maps, finite_topology as ft, tangent, zoo

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
JUMP_LIMIT = 1e-2


class UsageError(Exception):
    pass


class SpaceFileError(UsageError):
    pass


# -- SpaceFile -----------------------------------------------------------------------


def parse_space(text: str, source: str = "<input>") -> tuple[tuple[str, ...], list[int]]:
    """Parse ``{"points": [...], "opens": [[...], ...]}`` into labels and bitmasks."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpaceFileError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(doc, dict) or "points" not in doc or "opens" not in doc:
        raise SpaceFileError(f"{source}: expected an object with 'points' and 'opens'")
    points, opens = doc["points"], doc["opens"]
    if not isinstance(points, list) or not isinstance(opens, list):
        raise SpaceFileError(f"{source}: 'points' and 'opens' must be lists")
    index = {}
    for k, p in enumerate(points):
        if not isinstance(p, str) or not p:
            raise SpaceFileError(f"{source}: points[{k}]: label must be a non-empty string, got {p!r}")
        if p in index:
            raise SpaceFileError(f"{source}: points[{k}]: duplicate label {p!r}")
        index[p] = k
    if len(points) > ft.MAX_POINTS:
        raise SpaceFileError(f"{source}: at most {ft.MAX_POINTS} points are supported")
    family = []
    for k, u in enumerate(opens):
        if not isinstance(u, list):
            raise SpaceFileError(f"{source}: opens[{k}]: expected a list of labels")
        mask = 0
        for m, p in enumerate(u):
            if not isinstance(p, str) or p not in index:
                raise SpaceFileError(f"{source}: opens[{k}][{m}]: unknown label {p!r}")
            mask |= 1 << index[p]
        family.append(mask)
    return tuple(points), family


def load_space(path: str) -> tuple[tuple[str, ...], list[int]]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise SpaceFileError(f"{path}: {e.strerror}") from None
    return parse_space(text, path)


def load_topology(path: str) -> ft.FiniteSpace:
    points, family = load_space(path)
    report = ft.verify_topology(points, family)
    if not report.is_topology:
        raise _NotATopology(path, points, report)
    return ft.FiniteSpace(points, family)


class _NotATopology(Exception):
    def __init__(self, path, points, report):
        self.path, self.points, self.report = path, points, report


# -- output --------------------------------------------------------------------------


def _plain(x: Any) -> Any:
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: _plain(getattr(x, f.name)) for f in dataclasses.fields(x)}
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    return x


def emit(doc: dict, as_json: bool, out=None) -> None:
    out = out or sys.stdout
    doc = _plain(doc)
    if as_json:
        out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return
    for key in sorted(doc):
        val = doc[key]
        if isinstance(val, (dict, list)):
            val = json.dumps(val, sort_keys=True)
        out.write(f"{key}: {val}\n")


def _labels(space: ft.FiniteSpace, mask: int) -> list:
    return list(space.labels(mask))


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


# -- topo ----------------------------------------------------------------------------


def _violation_doc(points, violations):
    out = []
    for axiom, masks in violations:
        sets = [[points[i] for i in ft.bits(m)] for m in masks]
        out.append({"axiom": axiom, "witness": sets})
    return out


def cmd_topo_check(args) -> int:
    points, family = load_space(args.file)
    report = ft.verify_topology(points, family)
    emit({"command": "topo check", "file": args.file, "is_topology": report.is_topology,
          "violations": _violation_doc(points, report.violations)}, args.json)
    return EXIT_PASS if report.is_topology else EXIT_FAIL


def cmd_topo_props(args) -> int:
    try:
        space = load_topology(args.file)
    except _NotATopology as e:
        emit({"command": "topo props", "file": e.path, "is_topology": False,
              "violations": _violation_doc(e.points, e.report.violations)}, args.json)
        return EXIT_FAIL
    w = ft.hausdorff_witness(space)
    clopen = ft.find_clopen(space)
    doc = {
        "command": "topo props",
        "file": args.file,
        "is_topology": True,
        "points": list(space.points),
        "open_sets": len(space.opens),
        "hausdorff": w is None,
        "hausdorff_witness": None if w is None else [space.points[w[0]], space.points[w[1]]],
        "connected": clopen is None,
        "clopen_witness": None if clopen is None else _labels(space, clopen),
    }
    if args.set is not None:
        labels = [t for t in args.set.split(",") if t]
        try:
            a = space.subset(labels)
        except (KeyError, ft.TopologyError) as e:
            raise UsageError(f"--set: {e}") from None
        doc["set"] = _labels(space, a)
        doc["interior"] = _labels(space, ft.interior(space, a))
        doc["closure"] = _labels(space, ft.closure(space, a))
        doc["boundary"] = _labels(space, ft.boundary(space, a))
    emit(doc, args.json)
    return EXIT_PASS


def cmd_topo_enumerate(args) -> int:
    if args.count_only:
        count, spaces = ft.enumerate_topologies(args.n, True), None
    else:
        count, spaces = ft.enumerate_topologies(args.n, False)
    if args.count_only and not args.json:
        print(count)
        return EXIT_PASS
    doc = {"command": "topo enumerate", "n": args.n, "count": count}
    if spaces is not None:
        doc["topologies"] = [[_labels(s, u) for u in s.opens] for s in spaces]
    emit(doc, args.json)
    return EXIT_PASS


def _parse_assignment(text: str) -> dict:
    out = {}
    for item in text.split(","):
        src, sep, dst = item.partition("=")
        if not sep or not src or not dst:
            raise UsageError(f"--assign expects src=dst pairs separated by commas, got {item!r}")
        out[src] = dst
    return out


def cmd_topo_map(args) -> int:
    try:
        s1, s2 = load_topology(args.source), load_topology(args.target)
    except _NotATopology as e:
        raise UsageError(f"{e.path} is not a topology") from None
    try:
        f = ft.FiniteMap.from_labels(s1, s2, _parse_assignment(args.assign))
    except (KeyError, ft.TopologyError) as e:
        raise UsageError(f"--assign: {e}") from None
    cont = ft.is_continuous(f)
    homeo = ft.is_homeomorphism(f)
    doc = {"command": "topo map", "continuous": cont, "open_map": ft.is_open_map(f),
           "closed_map": ft.is_closed_map(f), "bijective": f.is_bijective, "homeomorphism": homeo,
           "image": {p: f(p) for p in s1.points}}
    if args.find:
        g = ft.find_homeomorphism(s1, s2)
        doc["found_homeomorphism"] = None if g is None else {p: g(p) for p in s1.points}
    emit(doc, args.json)
    return EXIT_PASS if (homeo if args.require_homeo else cont) else EXIT_FAIL


# -- atlas -------------------------------------------------------------------------------


def _manifold(name: str) -> atlas.ManifoldSpec:
    try:
        return zoo.builtin(name)
    except zoo.UnknownManifoldError as e:
        raise UsageError(e.args[0]) from None
    except ValueError as e:
        raise UsageError(f"{name}: {e}") from None


def _tolerances(overrides: Optional[Sequence[str]]) -> atlas.Tolerances:
    tol = atlas.DEFAULT_TOL
    known = {f.name: f.type for f in dataclasses.fields(atlas.Tolerances)}
    for item in overrides or ():
        key, sep, val = item.partition("=")
        if not sep or key not in known:
            raise UsageError(f"--tol expects KEY=VALUE with KEY in {', '.join(known)}; got {item!r}")
        try:
            value = int(val) if key == "min_overlap" else float(val)
        except ValueError:
            raise UsageError(f"--tol {key}: not a number: {val!r}") from None
        tol = dataclasses.replace(tol, **{key: value})
    return tol


def cmd_atlas_list(args) -> int:
    doc = {"command": "atlas list", "manifolds": {}}
    for name in zoo.builtin_names():
        m = zoo.builtin(name)
        doc["manifolds"][name] = {"dim": m.n, "ambient_dim": m.ambient_dim, "charts": list(m.chart_ids)}
    emit(doc, args.json)
    return EXIT_PASS


def cmd_atlas_verify(args) -> int:
    m = _manifold(args.name)
    tol = _tolerances(args.tol)
    if args.charts:
        try:
            m = m.with_atlas([c for c in args.charts.split(",") if c])
        except atlas.AtlasError as e:
            raise UsageError(str(e)) from None
    report = atlas.verify_atlas(m, args.samples, args.seed, tol, args.coord_floor)
    doc = {"command": "atlas verify", "report": report}
    failing = report.failures
    if failing and failing[0].witness is not None:
        doc["witness"] = failing[0].witness
    elif not report.covered:
        doc["witness"] = {"kind": "covering", "point": report.cover_witness}
    emit(doc, args.json)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _point(tr: atlas.TransitionFn, text: str) -> np.ndarray:
    c = _floats(text)
    if c.shape != (tr.source.n,):
        raise UsageError(f"--point needs {tr.source.n} coordinates, got {len(c)}")
    return c


def cmd_atlas_transition(args) -> int:
    m = _manifold(args.name)
    try:
        tr = atlas.transition_fn(m, args.to_chart, args.from_chart)
    except atlas.UnknownChartError as e:
        raise UsageError(e.args[0]) from None
    c = _point(tr, args.point)
    try:
        jac = atlas.jacobian(tr, c, args.mode)
    except atlas.DomainError as e:
        emit({"command": "atlas transition", "error": str(e)}, args.json)
        return EXIT_FAIL
    doc = {"command": "atlas transition", "manifold": m.name, "from": args.from_chart, "to": args.to_chart,
           "point": c, "value": tr(c), "jacobian": jac.matrix, "det": float(np.linalg.det(jac.matrix)),
           "jacobian_mode": jac.mode, "richardson_discrepancy": jac.discrepancy,
           "tolerances": atlas.DEFAULT_TOL.to_dict()}
    if tr.analytic is not None:
        doc["closed_form"] = tr.analytic(c)
    emit(doc, args.json)
    return EXIT_PASS


# -- tangent -------------------------------------------------------------------------------


def cmd_tangent_transform(args) -> int:
    m = _manifold(args.name)
    try:
        src = m.chart(args.from_chart)
        m.chart(args.to_chart)
    except atlas.UnknownChartError as e:
        raise UsageError(e.args[0]) from None
    c, w = _floats(args.point), _floats(args.components)
    if c.shape != (src.n,) or w.shape != (src.n,):
        raise UsageError(f"--point and --components need {src.n} entries each")
    try:
        v = tangent.TangentVector.at_coords(m, args.from_chart, c, w)
        out = tangent.change_chart(v, args.to_chart)
    except atlas.DomainError as e:
        emit({"command": "tangent transform", "error": str(e)}, args.json)
        return EXIT_FAIL
    back = tangent.change_chart(out, args.from_chart)
    err = float(np.max(np.abs(back.components - w)))
    doc = {"command": "tangent transform", "manifold": m.name, "from": args.from_chart, "to": args.to_chart,
           "point": c, "ambient_point": v.point, "target_point": out.coords, "components": w,
           "target_components": out.components,
           "jacobian": tangent.chart_change_jacobian(m, args.from_chart, args.to_chart, c),
           "roundtrip_error": err, "tolerances": {"roundtrip": args.tol}}
    emit(doc, args.json)
    return EXIT_PASS if err <= args.tol else EXIT_FAIL


# -- homeo ----------------------------------------------------------------------------------


def cmd_homeo_check(args) -> int:
    try:
        spec = euclid_maps.get(args.map_name)
    except (KeyError, ValueError) as e:
        raise UsageError(e.args[0]) from None
    doc = {"command": "homeo check", "map": spec.name, "note": spec.note,
           "tolerances": {"roundtrip": args.tol, "jump_limit": JUMP_LIMIT}}
    if spec.inverse is None:
        doc.update(passed=False, reason="no inverse")
        emit(doc, args.json)
        return EXIT_FAIL
    rt = euclid_maps.check_round_trip(spec, args.samples, args.seed, args.tol)
    doc["round_trip"] = rt
    passed = rt.passed
    if spec.loop is not None:
        jump = euclid_maps.detect_inverse_jump(spec, 1e-3)
        doc["inverse_jump"] = jump
        passed = passed and jump < JUMP_LIMIT
    doc["passed"] = passed
    emit(doc, args.json)
    return EXIT_PASS if passed else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one machine-readable JSON document")
    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--samples", type=_positive, default=1000)

    p = argparse.ArgumentParser(prog="chartbench", description="Verify finite topologies, charts and atlases.")
    sub = p.add_subparsers(dest="group", required=True)

    topo = sub.add_parser("topo", help="finite topological spaces").add_subparsers(dest="cmd", required=True)
    c = topo.add_parser("check", parents=[common], help="check the topology axioms for a space file")
    c.add_argument("file")
    c.set_defaults(func=cmd_topo_check)
    c = topo.add_parser("props", parents=[common], help="Hausdorff and connectedness, optional set operators")
    c.add_argument("file")
    c.add_argument("--set", help="comma-separated labels; prints interior, closure and boundary")
    c.set_defaults(func=cmd_topo_props)
    c = topo.add_parser("enumerate", parents=[common], help="count topologies on n points (n <= 4)")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--count-only", action="store_true")
    c.set_defaults(func=cmd_topo_enumerate)
    c = topo.add_parser("map", parents=[common], help="continuity and homeomorphism of a map between spaces")
    c.add_argument("source")
    c.add_argument("target")
    c.add_argument("--assign", required=True, help="src=dst pairs, e.g. a=1,b=2")
    c.add_argument("--require-homeo", action="store_true", help="exit 1 unless the map is a homeomorphism")
    c.add_argument("--find", action="store_true", help="also search for any homeomorphism")
    c.set_defaults(func=cmd_topo_map)

    at = sub.add_parser("atlas", help="charts and atlases of builtin manifolds").add_subparsers(dest="cmd", required=True)
    c = at.add_parser("list", parents=[common], help="list the builtin manifolds")
    c.set_defaults(func=cmd_atlas_list)
    c = at.add_parser("verify", parents=[common, run], help="covering and pairwise compatibility")
    c.add_argument("name")
    c.add_argument("--tol", action="append", metavar="KEY=VALUE", help="override a tolerance")
    c.add_argument("--charts", help="comma-separated subset of chart ids")
    c.add_argument("--coord-floor", type=float, help="only use overlap samples with |coordinate| >= this")
    c.set_defaults(func=cmd_atlas_verify)
    c = at.add_parser("transition", parents=[common], help="evaluate a transition and its Jacobian")
    c.add_argument("name")
    c.add_argument("--from", dest="from_chart", required=True)
    c.add_argument("--to", dest="to_chart", required=True)
    c.add_argument("--point", required=True, help="comma-separated source-chart coordinates")
    c.add_argument("--mode", choices=("auto", "analytic", "fd"), default="auto")
    c.set_defaults(func=cmd_atlas_transition)

    tg = sub.add_parser("tangent", help="tangent vectors").add_subparsers(dest="cmd", required=True)
    c = tg.add_parser("transform", parents=[common], help="change the chart of a tangent vector")
    c.add_argument("name")
    c.add_argument("--from", dest="from_chart", required=True)
    c.add_argument("--to", dest="to_chart", required=True)
    c.add_argument("--point", required=True, help="comma-separated source-chart coordinates")
    c.add_argument("--components", required=True)
    c.add_argument("--tol", type=float, default=1e-9, help="round-trip tolerance")
    c.set_defaults(func=cmd_tangent_transform)

    ho = sub.add_parser("homeo", help="Euclidean homeomorphism catalog").add_subparsers(dest="cmd", required=True)
    c = ho.add_parser("check", parents=[common, run], help="round trip and inverse-continuity probe")
    c.add_argument("map_name", help=f"one of {', '.join(euclid_maps.names())} (name:n for dimensions)")
    c.add_argument("--tol", type=float, default=1e-12)
    c.set_defaults(func=cmd_homeo_check, samples=10_000)
    return p


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"chartbench: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ft.CapacityError, ft.DomainError) as e:
        print(f"chartbench: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
