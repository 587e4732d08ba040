"""Canonical graphs and maps used throughout the tests and the CLI.

``C_n(l)`` is a cycle of ``n`` edges of length ``l`` (vertices ``v0..``,
edge ``ei`` from ``vi`` to ``v(i+1)``), ``I_n`` a path of ``n`` unit edges.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .graph import Edge, GraphPoint, MetricGraph, Segment, Walk, PLUS, MINUS, as_rational
from .graph_map import GraphMap

__all__ = [
    "cycle",
    "path",
    "one_point",
    "identity",
    "winding",
    "tent",
    "fold",
    "speed2",
    "const",
    "corpus",
    "cover_corpus",
    "random_branched_cover",
    "random_point",
    "random_walk",
]


def cycle(n: int, length=1) -> MetricGraph:
    length = as_rational(length)
    if n < 1:
        raise ValueError("a cycle needs at least one edge")
    vs = [f"v{i}" for i in range(n)]
    return MetricGraph(vs, [Edge(f"e{i}", vs[i], vs[(i + 1) % n], length) for i in range(n)])


def path(n: int, length=1) -> MetricGraph:
    length = as_rational(length)
    vs = [f"v{i}" for i in range(n + 1)]
    return MetricGraph(vs, [Edge(f"e{i + 1}", vs[i], vs[i + 1], length) for i in range(n)])


def one_point(name: str = "o") -> MetricGraph:
    return MetricGraph([name], [])


def _i2() -> MetricGraph:
    # a - m - b, the two-edge path used by TENT, FOLD and SPEED2
    return MetricGraph(["a", "m", "b"], [Edge("e1", "a", "m", Fraction(1)), Edge("e2", "m", "b", Fraction(1))])


def identity(G: MetricGraph) -> GraphMap:
    return GraphMap.from_traversals(G, G, {v: v for v in G.vertices}, {e: [(e, PLUS)] for e in G.edge_ids})


def winding(k: int, n: int = 3) -> GraphMap:
    """``C_{kn}(1) -> C_n(1)`` wrapping ``k`` times at speed one."""
    X, Y = cycle(k * n), cycle(n)
    return GraphMap.from_traversals(
        X, Y,
        {f"v{i}": f"v{i % n}" for i in range(k * n)},
        {f"e{i}": [(f"e{i % n}", PLUS)] for i in range(k * n)},
    )


def tent() -> GraphMap:
    """``I_2 -> I_1`` folding ``m`` onto the far end ``w``."""
    Y = MetricGraph(["u", "w"], [Edge("f1", "u", "w", Fraction(1))])
    return GraphMap.from_traversals(
        _i2(), Y, {"a": "u", "m": "w", "b": "u"}, {"e1": [("f1", PLUS)], "e2": [("f1", MINUS)]}
    )


def fold() -> GraphMap:
    """``I_2 -> I_2`` folding the second half onto the first (radial, not open)."""
    return GraphMap.from_traversals(
        _i2(), _i2(), {"a": "a", "m": "m", "b": "a"}, {"e1": [("e1", PLUS)], "e2": [("e1", MINUS)]}
    )


def speed2() -> GraphMap:
    """One unit edge stretched over ``I_2`` at speed 2."""
    X = MetricGraph(["p", "q"], [Edge("e", "p", "q", Fraction(1))])
    return GraphMap.from_traversals(X, _i2(), {"p": "a", "q": "b"}, {"e": [("e1", PLUS), ("e2", PLUS)]})


def const() -> GraphMap:
    X, Y = cycle(3), one_point()
    return GraphMap.from_traversals(X, Y, {v: "o" for v in X.vertices}, {e: [] for e in X.edge_ids})


def corpus() -> dict[str, GraphMap]:
    """Named fixture maps, branched covers and counterexamples alike."""
    return {
        "id_I3": identity(path(3)),
        "id_C4": identity(cycle(4)),
        "W2": winding(2),
        "W3": winding(3),
        "TENT": tent(),
        "SPEED2": speed2(),
        "FOLD": fold(),
        "CONST": const(),
    }


def cover_corpus() -> dict[str, GraphMap]:
    return {k: v for k, v in corpus().items() if k not in ("FOLD", "CONST")}


# -- random branched covers ----------------------------------------------------

_SPEEDS = (Fraction(1, 2), Fraction(1), Fraction(2))


def _random_target(rng: random.Random) -> MetricGraph:
    while True:
        nv = rng.randint(1, 4)
        ne = rng.randint(max(1, nv - 1), nv + 1)
        vs = [f"y{i}" for i in range(nv)]
        edges = []
        for j in range(ne):
            if j < nv - 1:
                u, v = vs[rng.randrange(j + 1)], vs[j + 1]  # spanning tree first
            else:
                u, v = rng.choice(vs), rng.choice(vs)
            edges.append(Edge(f"g{j}", u, v, Fraction(rng.randint(1, 8), rng.choice((1, 2, 4)))))
        return MetricGraph(vs, edges)


def _connected(vertices, edges) -> bool:
    parent = {v: v for v in vertices}

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for _, u, v in edges:
        parent[find(u)] = find(v)
    return len({find(v) for v in vertices}) == 1


def random_branched_cover(rng: random.Random, max_vertices: int = 8) -> GraphMap:
    """A random PL branched cover with at most ``max_vertices`` source vertices.

    The source is a permutation cover of a small random target, with some
    fiber-mate vertices glued together (creating branch points), random
    per-edge speeds, and occasionally an edge split at an interior point.
    All edge lengths have denominators at most 8.
    """
    while True:
        Y = _random_target(rng)
        nv = len(Y.vertices)
        d = rng.randint(1, max(1, min(3, max_vertices // nv)))
        sheet = {(v, i): f"{v}.{i}" for v in Y.vertices for i in range(d)}
        # glue some fiber-mates
        for v in Y.vertices:
            if d > 1 and rng.random() < 0.4:
                i, j = rng.sample(range(d), 2)
                sheet[(v, j)] = sheet[(v, i)]
        lifts = []
        for gid in Y.edge_ids:
            g = Y.edge(gid)
            perm = list(range(d))
            rng.shuffle(perm)
            for i in range(d):
                lifts.append((f"{gid}.{i}", sheet[(g.u, i)], sheet[(g.v, perm[i])], gid))
        xv = sorted(set(sheet.values()))
        if not _connected(xv, [(n, a, b) for n, a, b, _ in lifts]):
            continue
        vmap = {name: GraphPoint(vertex=v) for (v, _), name in sheet.items()}
        edges, emap = [], {}
        for name, a, b, gid in lifts:
            g = Y.edge(gid)
            full = Segment(gid, Fraction(0), g.length)
            if len(xv) < max_vertices and rng.random() < 0.25:
                # split at an interior point of the image edge
                cut = g.length * Fraction(rng.randint(1, 3), 4)
                mid = f"{name}.m"
                xv.append(mid)
                vmap[mid] = Y.point(gid, cut)
                s1, s2 = rng.choice(_SPEEDS), rng.choice(_SPEEDS)
                edges.append(Edge(f"{name}a", a, mid, cut / s1))
                edges.append(Edge(f"{name}b", mid, b, (g.length - cut) / s2))
                emap[f"{name}a"] = Walk(Y, vmap[a], (Segment(gid, Fraction(0), cut),))
                emap[f"{name}b"] = Walk(Y, vmap[mid], (Segment(gid, cut, g.length),))
            else:
                edges.append(Edge(name, a, b, g.length / rng.choice(_SPEEDS)))
                emap[name] = Walk(Y, vmap[a], (full,))
        if len(xv) > max_vertices or any(e.length.denominator > 8 for e in edges):
            continue
        X = MetricGraph(xv, edges)
        return GraphMap(X, Y, {v: vmap[v] for v in xv}, emap)


def random_point(rng: random.Random, G: MetricGraph) -> GraphPoint:
    """A vertex, or a point at a multiple of 1/8 of an edge."""
    if not G.edge_ids or rng.random() < 0.3:
        return GraphPoint(vertex=rng.choice(G.vertices))
    eid = rng.choice(G.edge_ids)
    return G.point(eid, G.edge(eid).length * Fraction(rng.randint(0, 8), 8))


def random_walk(rng: random.Random, G: MetricGraph, steps: int = 6, start: GraphPoint | None = None) -> Walk:
    """Random rectifiable walk: straight moves of random rational length, turning anywhere."""
    p = random_point(rng, G) if start is None else start
    first = p
    segs = []
    for _ in range(rng.randint(0, steps) if G.edge_ids else 0):
        d = rng.choice(G.directions(p))
        t, room = G.step(p, d)
        travel = room * Fraction(rng.randint(1, 8), 8)
        end = t + travel if d[1] == PLUS else t - travel
        segs.append(Segment(d[0], t, end))
        p = G.point(d[0], end)
    return Walk(G, first, tuple(segs))
