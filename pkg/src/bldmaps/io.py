"""JSON file formats.

Rationals are written as ``"p/q"`` or integer strings and points as
``{"vertex": "a"}`` or ``{"edge": "e1", "offset": "1/2"}``.  Every loader
accepts what the matching dumper writes, so files round-trip exactly.

* ``.mg.json``    graphs, optionally with a ``basepoint``
* ``.gm.json``    maps; ``source``/``target`` are file names (relative to the
  map file) or inline graph objects
* ``.walk.json``  walks
* ``.report.json`` check reports (plain JSON values)
* ``.qi.json``    quasi-isometry witnesses
* ``.cert.json``  self-contained convergence certificates
"""
from __future__ import annotations

import json
import math
from dataclasses import fields, is_dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .graph import (
    GraphError,
    GraphPoint,
    MetricGraph,
    Segment,
    Walk,
    as_rational,
    build_graph,
    format_rational,
    PLUS,
    MINUS,
)
from .graph_map import GraphMap
from .convergence import (
    ConvergenceCertificate,
    MappingPackage,
    PointedSpace,
    QuasiIsometryWitness,
)

__all__ = [
    "FormatError",
    "point_to_json",
    "point_from_json",
    "graph_to_json",
    "graph_from_json",
    "map_to_json",
    "map_from_json",
    "walk_to_json",
    "walk_from_json",
    "witness_to_json",
    "witness_from_json",
    "certificate_to_json",
    "certificate_from_json",
    "to_plain",
    "read_json",
    "write_json",
    "load_graph",
    "load_map",
    "load_walk",
    "load_witness",
    "load_certificate",
]


class FormatError(GraphError):
    """A file does not parse or does not describe a valid object."""


def read_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_json(path, data) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _rat(value) -> Fraction:
    try:
        return as_rational(value)
    except TypeError as exc:
        raise FormatError(str(exc)) from None


# -- points, graphs, walks ------------------------------------------------------


def point_to_json(p: GraphPoint) -> dict:
    if p.vertex is not None:
        return {"vertex": p.vertex}
    return {"edge": p.edge, "offset": format_rational(p.offset)}


def point_from_json(G: MetricGraph, data) -> GraphPoint:
    if isinstance(data, str):
        return G.vertex_point(data)
    if not isinstance(data, Mapping):
        raise FormatError(f"bad point {data!r}")
    if "vertex" in data:
        return G.vertex_point(str(data["vertex"]))
    if "edge" in data and "offset" in data:
        return G.point(str(data["edge"]), _rat(data["offset"]))
    raise FormatError(f"bad point {data!r}")


def graph_to_json(G: MetricGraph, basepoint: GraphPoint | None = None) -> dict:
    out: dict = {
        "vertices": list(G.vertices),
        "edges": [
            {"id": e.id, "from": e.u, "to": e.v, "len": format_rational(e.length)}
            for e in (G.edge(eid) for eid in G.edge_ids)
        ],
    }
    if basepoint is not None:
        out["basepoint"] = point_to_json(basepoint) if basepoint.vertex is None else basepoint.vertex
    return out


def graph_from_json(data) -> tuple[MetricGraph, GraphPoint | None]:
    if not isinstance(data, Mapping):
        raise FormatError("a graph must be an object")
    G = build_graph(data)
    base = data.get("basepoint")
    return G, (None if base is None else point_from_json(G, base))


def _segment_to_json(G: MetricGraph, s: Segment) -> dict:
    e = G.edge(s.edge)
    if s.start == 0 and s.end == e.length:
        return {"edge": s.edge, "dir": PLUS}
    if s.start == e.length and s.end == 0:
        return {"edge": s.edge, "dir": MINUS}
    return {"edge": s.edge, "from": format_rational(s.start), "to": format_rational(s.end)}


def _segment_from_json(G: MetricGraph, data) -> Segment:
    try:
        e = G.edge(str(data["edge"]))
    except KeyError:
        raise FormatError(f"bad segment {data!r}") from None
    if "from" in data or "to" in data:
        return Segment(e.id, _rat(data["from"]), _rat(data["to"]))
    sign = data.get("dir", PLUS)
    if sign not in (PLUS, MINUS):
        raise FormatError(f"bad direction {sign!r}")
    return Segment(e.id, Fraction(0), e.length) if sign == PLUS else Segment(e.id, e.length, Fraction(0))


def walk_to_json(w: Walk) -> dict:
    return {"start": point_to_json(w.start), "segments": [_segment_to_json(w.graph, s) for s in w.segments]}


def walk_from_json(G: MetricGraph, data) -> Walk:
    try:
        start = point_from_json(G, data["start"])
        return Walk(G, start, tuple(_segment_from_json(G, s) for s in data.get("segments", [])))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad walk: {exc}") from None


# -- maps ---------------------------------------------------------------------------


def map_to_json(f: GraphMap, source=None, target=None) -> dict:
    """Map object; ``source``/``target`` default to inline graphs, or pass file names."""
    vm = {}
    for v in f.source.vertices:
        p = f.vertex_map[v]
        vm[v] = p.vertex if p.vertex is not None else point_to_json(p)
    return {
        "source": graph_to_json(f.source) if source is None else source,
        "target": graph_to_json(f.target) if target is None else target,
        "vertex_map": vm,
        "edge_map": {e: [_segment_to_json(f.target, s) for s in f.edge_map[e].segments] for e in f.source.edge_ids},
    }


def _graph_ref(ref, base: Path | None):
    if isinstance(ref, Mapping):
        return graph_from_json(ref)[0]
    if isinstance(ref, str):
        path = Path(ref) if base is None else base / ref
        return load_graph(path)[0]
    raise FormatError(f"bad graph reference {ref!r}")


def map_from_json(data, base: Path | None = None) -> GraphMap:
    try:
        X = _graph_ref(data["source"], base)
        Y = _graph_ref(data["target"], base)
        vm = {str(v): point_from_json(Y, p) for v, p in data["vertex_map"].items()}
        em = {}
        for e, steps in data["edge_map"].items():
            e = str(e)
            u = X.edge(e).u
            if u not in vm:
                raise FormatError(f"vertex {u!r} is not assigned")
            em[e] = Walk(Y, vm[u], tuple(_segment_from_json(Y, s) for s in steps))
    except KeyError as exc:
        raise FormatError(f"map description misses key {exc}") from None
    return GraphMap(X, Y, vm, em)


# -- witnesses and certificates -----------------------------------------------------


def _space_to_json(S: PointedSpace) -> dict:
    return graph_to_json(S.graph, S.basepoint)


def _space_from_json(data) -> PointedSpace:
    G, base = graph_from_json(data)
    if base is None:
        raise FormatError("pointed space needs a basepoint")
    return PointedSpace(G, base)


def witness_to_json(w: QuasiIsometryWitness, spaces: bool = True) -> dict:
    out = {
        "eps": format_rational(w.eps),
        "delta": format_rational(w.delta),
        "radius": None if w.radius is None else format_rational(w.radius),
        "table": [[point_to_json(a), point_to_json(b)] for a, b in w.table],
    }
    if spaces:
        out["source"] = _space_to_json(w.source)
        out["target"] = _space_to_json(w.target)
    return out


def witness_from_json(data, source: PointedSpace | None = None, target: PointedSpace | None = None):
    try:
        source = source or _space_from_json(data["source"])
        target = target or _space_from_json(data["target"])
        table = tuple(
            (point_from_json(source.graph, a), point_from_json(target.graph, b)) for a, b in data["table"]
        )
        radius = data.get("radius")
        return QuasiIsometryWitness(
            source, target, table, _rat(data["delta"]), _rat(data["eps"]), None if radius is None else _rat(radius)
        )
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise FormatError(f"bad witness: {exc}") from None


class _Pool:
    """Deduplicates graphs when writing a certificate."""

    def __init__(self):
        self.graphs: list[MetricGraph] = []

    def name(self, G: MetricGraph) -> str:
        for k, H in enumerate(self.graphs):
            if H == G:
                return f"G{k}"
        self.graphs.append(G)
        return f"G{len(self.graphs) - 1}"


def _package_to_json(pkg: MappingPackage, pool: _Pool) -> dict:
    return {
        "map": map_to_json(pkg.map, pool.name(pkg.map.source), pool.name(pkg.map.target)),
        "source_basepoint": point_to_json(pkg.source.basepoint),
        "target_basepoint": point_to_json(pkg.target.basepoint),
    }


def _package_from_json(data, graphs: dict) -> MappingPackage:
    m = data["map"]
    X, Y = graphs[m["source"]], graphs[m["target"]]
    f = map_from_json(dict(m, source=graph_to_json(X), target=graph_to_json(Y)))
    return MappingPackage(
        PointedSpace(f.source, point_from_json(f.source, data["source_basepoint"])),
        PointedSpace(f.target, point_from_json(f.target, data["target_basepoint"])),
        f,
    )


def certificate_to_json(cert: ConvergenceCertificate) -> dict:
    pool = _Pool()
    packages = {str(i): _package_to_json(p, pool) for i, p in sorted(cert.packages.items())}
    limit = _package_to_json(cert.limit, pool)
    witnesses = []
    for (i, r) in sorted(cert.eps):
        witnesses.append({
            "index": i,
            "radius": format_rational(r),
            "eps": format_rational(cert.eps[(i, r)]),
            "g": witness_to_json(cert.g[(i, r)], spaces=False),
            "h": witness_to_json(cert.h[(i, r)], spaces=False),
        })
    samples = [
        {
            "point": point_to_json(a),
            "radius": format_rational(r),
            "sequence": {str(i): point_to_json(p) for i, p in sorted(seq.items())},
        }
        for a, seq, r in cert.samples
    ]
    return {
        "graphs": {f"G{k}": graph_to_json(G) for k, G in enumerate(pool.graphs)},
        "packages": packages,
        "limit": limit,
        "radii": [format_rational(r) for r in cert.radii],
        "witnesses": witnesses,
        "samples": samples,
        "rate": format_rational(cert.rate),
        "tail_rate": format_rational(cert.tail_rate),
    }


def certificate_from_json(data) -> ConvergenceCertificate:
    try:
        graphs = {k: graph_from_json(v)[0] for k, v in data["graphs"].items()}
        packages = {int(i): _package_from_json(p, graphs) for i, p in data["packages"].items()}
        limit = _package_from_json(data["limit"], graphs)
        radii = tuple(_rat(r) for r in data["radii"])
        g, h, eps = {}, {}, {}
        for w in data["witnesses"]:
            i, r = int(w["index"]), _rat(w["radius"])
            if i not in packages:
                raise FormatError(f"witness for unknown package {i}")
            pkg = packages[i]
            eps[(i, r)] = _rat(w["eps"])
            g[(i, r)] = witness_from_json(w["g"], pkg.source, limit.source)
            h[(i, r)] = witness_from_json(w["h"], pkg.target, limit.target)
        samples = []
        for s in data.get("samples", []):
            seq = {int(i): point_from_json(packages[int(i)].source.graph, p) for i, p in s["sequence"].items()}
            samples.append((point_from_json(limit.source.graph, s["point"]), seq, _rat(s["radius"])))
        return ConvergenceCertificate(
            packages, limit, radii, g, h, eps, samples,
            _rat(data.get("rate", "1")), _rat(data.get("tail_rate", "1")),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"bad certificate: {exc!r}") from None


# -- reports ----------------------------------------------------------------------


def to_plain(obj) -> Any:
    """Turn report values into JSON values: rationals to strings, points to point objects."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return repr(float(obj))
    if isinstance(obj, GraphPoint):
        return point_to_json(obj)
    if isinstance(obj, Segment):
        return {"edge": obj.edge, "from": format_rational(obj.start), "to": format_rational(obj.end)}
    if isinstance(obj, Walk):
        return walk_to_json(obj)
    if isinstance(obj, Mapping):
        if all(isinstance(k, str) for k in obj):
            return {k: to_plain(v) for k, v in obj.items()}
        return [[to_plain(k), to_plain(v)] for k, v in obj.items()]
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj, key=repr) if isinstance(obj, (set, frozenset)) else obj
        return [to_plain(x) for x in items]
    if is_dataclass(obj):
        return {fl.name: to_plain(getattr(obj, fl.name)) for fl in fields(obj)}
    if hasattr(obj, "item"):  # numpy scalars
        return to_plain(obj.item())
    return repr(obj)


# -- file loaders -------------------------------------------------------------------


def load_graph(path) -> tuple[MetricGraph, GraphPoint | None]:
    return graph_from_json(read_json(path))


def load_map(path) -> GraphMap:
    return map_from_json(read_json(path), Path(path).parent)


def load_walk(path, G: MetricGraph) -> Walk:
    return walk_from_json(G, read_json(path))


def load_witness(path) -> QuasiIsometryWitness:
    return witness_from_json(read_json(path))


def load_certificate(path) -> ConvergenceCertificate:
    return certificate_from_json(read_json(path))
