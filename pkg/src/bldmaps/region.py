"""Finite unions of vertices and partial-edge intervals.

A :class:`Region` stores a set of vertices together with, for every edge, a
sorted list of disjoint intervals inside the *open* edge ``(0, length)``.
Each interval carries its own open/closed flags, so open balls, closed
balls, preimages and their boundaries are all represented exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .graph import GraphPoint, MetricGraph, GraphError, PLUS, as_rational

__all__ = ["Interval", "Region", "ball", "sphere", "components", "boundary"]

# (lo, hi, lo_closed, hi_closed)
Interval = tuple


def _nonempty(iv) -> bool:
    lo, hi, lc, hc = iv
    return lo < hi or (lo == hi and lc and hc)


def normalize_intervals(ivs: Iterable[Interval], length: Fraction) -> tuple:
    """Clip to the open edge, drop empties, sort and merge."""
    clipped = []
    for lo, hi, lc, hc in ivs:
        if lo <= 0:
            lo, lc = Fraction(0), False
        if hi >= length:
            hi, hc = Fraction(length), False
        iv = (lo, hi, lc, hc)
        if _nonempty(iv):
            clipped.append(iv)
    clipped.sort(key=lambda iv: (iv[0], not iv[2]))
    out: list[list] = []
    for lo, hi, lc, hc in clipped:
        if out:
            cur = out[-1]
            if lo < cur[1] or (lo == cur[1] and (cur[3] or lc)):
                if hi > cur[1]:
                    cur[1], cur[3] = hi, hc
                elif hi == cur[1]:
                    cur[3] = cur[3] or hc
                continue
        out.append([lo, hi, lc, hc])
    return tuple(tuple(iv) for iv in out)


def complement_intervals(ivs, length: Fraction) -> tuple:
    gaps = []
    lo, lc = Fraction(0), False
    for a, b, ac, bc in ivs:
        gaps.append((lo, a, lc, not ac))
        lo, lc = b, not bc
    gaps.append((lo, Fraction(length), lc, False))
    return normalize_intervals(gaps, length)


def intersect_intervals(s, t, length: Fraction) -> tuple:
    out = []
    for a, b, ac, bc in s:
        for c, d, cc, dc in t:
            if a > c:
                lo, lc = a, ac
            elif c > a:
                lo, lc = c, cc
            else:
                lo, lc = a, ac and cc
            if b < d:
                hi, hc = b, bc
            elif d < b:
                hi, hc = d, dc
            else:
                hi, hc = b, bc and dc
            out.append((lo, hi, lc, hc))
    return normalize_intervals(out, length)


def _contains(iv, t) -> bool:
    lo, hi, lc, hc = iv
    return (lo < t or (lc and lo == t)) and (t < hi or (hc and t == hi))


@dataclass(frozen=True)
class Region:
    """Exact subset of a metric graph realization.

    ``intervals`` maps edge ids to normalized interval tuples; edges whose
    interior misses the region are omitted so that equality is structural.
    """

    graph: MetricGraph = field(compare=False, repr=False)
    vertices: frozenset = frozenset()
    intervals: tuple = ()  # sorted tuple of (edge id, interval tuple)

    @classmethod
    def make(cls, graph: MetricGraph, vertices: Iterable[str] = (), intervals: Mapping | None = None) -> "Region":
        vs = frozenset(vertices)
        for v in vs:
            graph.vertex_point(v)
        items = []
        for eid, ivs in sorted((intervals or {}).items()):
            norm = normalize_intervals(ivs, graph.edge(eid).length)
            if norm:
                items.append((eid, norm))
        return cls(graph, vs, tuple(items))

    @classmethod
    def empty(cls, graph: MetricGraph) -> "Region":
        return cls(graph)

    @classmethod
    def whole(cls, graph: MetricGraph) -> "Region":
        return cls.make(
            graph,
            graph.vertices,
            {eid: [(Fraction(0), graph.edge(eid).length, False, False)] for eid in graph.edge_ids},
        )

    @classmethod
    def point(cls, graph: MetricGraph, p: GraphPoint) -> "Region":
        graph.check_point(p)
        if p.vertex is not None:
            return cls.make(graph, [p.vertex])
        return cls.make(graph, (), {p.edge: [(p.offset, p.offset, True, True)]})

    @classmethod
    def from_points(cls, graph: MetricGraph, points: Iterable[GraphPoint]) -> "Region":
        out = cls.empty(graph)
        for p in points:
            out = out | cls.point(graph, p)
        return out

    @classmethod
    def from_interval(cls, graph: MetricGraph, edge: str, lo, hi, closed: bool = True) -> "Region":
        """The sub-segment ``[lo, hi]`` (or ``(lo, hi)``) of one edge, vertices included as needed."""
        e = graph.edge(edge)
        lo, hi = as_rational(lo), as_rational(hi)
        if not 0 <= lo <= hi <= e.length:
            raise GraphError(f"bad interval [{lo}, {hi}] on edge {edge!r}")
        vs = set()
        if closed and lo == 0:
            vs.add(e.u)
        if closed and hi == e.length:
            vs.add(e.v)
        return cls.make(graph, vs, {edge: [(lo, hi, closed, closed)]})

    # -- queries -----------------------------------------------------------

    def edge_intervals(self, eid: str) -> tuple:
        for k, ivs in self.intervals:
            if k == eid:
                return ivs
        return ()

    def _as_dict(self) -> dict:
        return dict(self.intervals)

    def contains(self, p: GraphPoint) -> bool:
        if p.vertex is not None:
            return p.vertex in self.vertices
        return any(_contains(iv, p.offset) for iv in self.edge_intervals(p.edge))

    __contains__ = contains

    def is_empty(self) -> bool:
        return not self.vertices and not self.intervals

    def is_finite(self) -> bool:
        return all(lo == hi for _, ivs in self.intervals for lo, hi, _, _ in ivs)

    def points(self) -> list[GraphPoint]:
        """Isolated points of a finite region, sorted."""
        if not self.is_finite():
            raise GraphError("region is not finite")
        pts = [GraphPoint(vertex=v) for v in self.vertices]
        pts += [GraphPoint(edge=eid, offset=lo) for eid, ivs in self.intervals for lo, _, _, _ in ivs]
        return sorted(pts)

    def sample_points(self) -> list[GraphPoint]:
        """One point per vertex and per interval (its midpoint), sorted."""
        pts = [GraphPoint(vertex=v) for v in self.vertices]
        for eid, ivs in self.intervals:
            for lo, hi, _, _ in ivs:
                pts.append(GraphPoint(edge=eid, offset=(lo + hi) / 2))
        return sorted(pts)

    # -- set algebra -------------------------------------------------------

    def _combine(self, other: "Region", op) -> "Region":
        G = self.graph
        a, b = self._as_dict(), other._as_dict()
        out = {}
        for eid in set(a) | set(b):
            out[eid] = op(a.get(eid, ()), b.get(eid, ()), G.edge(eid).length)
        return Region.make(G, (), out)

    def union(self, other: "Region") -> "Region":
        r = self._combine(other, lambda s, t, n: normalize_intervals(list(s) + list(t), n))
        return Region(self.graph, self.vertices | other.vertices, r.intervals)

    def intersection(self, other: "Region") -> "Region":
        r = self._combine(other, intersect_intervals)
        return Region(self.graph, self.vertices & other.vertices, r.intervals)

    def complement(self) -> "Region":
        G = self.graph
        a = self._as_dict()
        out = {eid: complement_intervals(a.get(eid, ()), G.edge(eid).length) for eid in G.edge_ids}
        return Region.make(G, set(G.vertices) - self.vertices, out)

    def difference(self, other: "Region") -> "Region":
        return self.intersection(other.complement())

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other: "Region") -> bool:
        return self.difference(other).is_empty()

    __le__ = issubset

    # -- topology ----------------------------------------------------------

    def closure(self) -> "Region":
        G = self.graph
        vs = set(self.vertices)
        out = {}
        for eid, ivs in self.intervals:
            e = G.edge(eid)
            closed = []
            for lo, hi, _, _ in ivs:
                if lo == 0:
                    vs.add(e.u)
                if hi == e.length:
                    vs.add(e.v)
                closed.append((lo, hi, True, True))
            out[eid] = closed
        return Region.make(G, vs, out)

    def _touches(self, eid: str, sign: str) -> bool:
        ivs = self.edge_intervals(eid)
        if not ivs:
            return False
        if sign == PLUS:
            return ivs[0][0] == 0
        return ivs[-1][1] == self.graph.edge(eid).length

    def interior(self) -> "Region":
        G = self.graph
        vs = {v for v in self.vertices if all(self._touches(eid, s) for eid, s in G.ends(v))}
        out = {eid: [(lo, hi, False, False) for lo, hi, _, _ in ivs] for eid, ivs in self.intervals}
        return Region.make(G, vs, out)

    def is_open(self) -> bool:
        return self.interior() == self

    def boundary_points(self) -> list[GraphPoint]:
        return (self.closure() - self.interior()).points()

    def components(self) -> list["Region"]:
        G = self.graph
        parent: dict = {}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def join(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb, key=str)] = min(ra, rb, key=str)

        for v in self.vertices:
            parent[("v", v)] = ("v", v)
        for eid, ivs in self.intervals:
            e = G.edge(eid)
            for k, (lo, hi, _, _) in enumerate(ivs):
                node = ("e", eid, k)
                parent[node] = node
                if lo == 0 and e.u in self.vertices:
                    join(node, ("v", e.u))
                if hi == e.length and e.v in self.vertices:
                    join(node, ("v", e.v))
        groups: dict = {}
        for node in parent:
            groups.setdefault(find(node), []).append(node)
        regions = []
        for nodes in groups.values():
            vs = [n[1] for n in nodes if n[0] == "v"]
            ivs: dict = {}
            for n in nodes:
                if n[0] == "e":
                    ivs.setdefault(n[1], []).append(self.edge_intervals(n[1])[n[2]])
            regions.append(Region.make(G, vs, ivs))
        regions.sort(key=lambda r: r.sample_points()[0].sort_key())
        return regions

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def __repr__(self) -> str:
        parts = sorted(self.vertices)
        for eid, ivs in self.intervals:
            for lo, hi, lc, hc in ivs:
                parts.append(f"{eid}{'[' if lc else '('}{lo},{hi}{']' if hc else ')'}")
        return "Region{" + ", ".join(parts) + "}"


def ball(G: MetricGraph, x: GraphPoint, r, closed: bool = False) -> Region:
    """Open ball ``{d(x, .) < r}``, or the closed ball when ``closed`` is set."""
    r = as_rational(r)
    if r <= 0:
        raise GraphError("ball radius must be positive")
    G.check_point(x)
    dv = G.distances_to_vertices(x)
    vs = [w for w, d in dv.items() if (d <= r if closed else d < r)]
    out = {}
    for eid in G.edge_ids:
        e = G.edge(eid)
        ivs = []
        reach_u, reach_v = r - dv[e.u], r - dv[e.v]
        if reach_u > 0:
            ivs.append((Fraction(0), reach_u, False, closed))
        if reach_v > 0:
            ivs.append((e.length - reach_v, e.length, closed, False))
        if x.vertex is None and x.edge == eid:
            ivs.append((x.offset - r, x.offset + r, closed, closed))
        out[eid] = ivs
    return Region.make(G, vs, out)


def sphere(G: MetricGraph, x: GraphPoint, r) -> list[GraphPoint]:
    """The finite distance sphere ``{d(x, .) = r}``, sorted."""
    return (ball(G, x, r, closed=True) - ball(G, x, r)).points()


def components(G: MetricGraph, A: Region) -> list[Region]:
    return A.components()


def boundary(G: MetricGraph, A: Region) -> list[GraphPoint]:
    return A.boundary_points()
