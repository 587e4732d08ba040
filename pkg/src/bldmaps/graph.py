"""Finite metric graphs with exact rational edge lengths.

A :class:`MetricGraph` stands for its geodesic realization: every edge is a
segment of the given length and the distance between two points is the length
of a shortest walk joining them.  Points are :class:`GraphPoint` values and
walks are :class:`Walk` values; both are immutable.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "GraphError",
    "Edge",
    "GraphPoint",
    "Segment",
    "Walk",
    "MetricGraph",
    "Subdivision",
    "as_rational",
    "format_rational",
    "build_graph",
    "distance",
    "geodesic",
    "walk_length",
    "subdivide",
    "critical_radii",
]

PLUS = "+"
MINUS = "-"


class GraphError(ValueError):
    """Raised for malformed graphs, points or walks."""


def as_rational(value) -> Fraction:
    """Convert ``int``, ``Fraction`` or a ``"p/q"`` string to a Fraction.

    Floats are refused: every quantity in this package is exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GraphError(f"not a rational: {value!r}") from exc
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: Fraction

    @property
    def is_loop(self) -> bool:
        return self.u == self.v


@dataclass(frozen=True)
class GraphPoint:
    """A point of a metric graph: a vertex, or an edge id with an interior offset.

    Offsets are measured from the ``u`` end of the edge.  Use
    :meth:`MetricGraph.point` to build canonical points; it turns offsets 0
    and ``length`` into the corresponding vertex.
    """

    vertex: str | None = None
    edge: str | None = None
    offset: Fraction | None = None

    @classmethod
    def at(cls, vertex: str) -> "GraphPoint":
        return cls(vertex=vertex)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def sort_key(self):
        if self.vertex is not None:
            return (0, self.vertex, Fraction(0))
        return (1, self.edge, self.offset)

    def __lt__(self, other: "GraphPoint") -> bool:
        return self.sort_key() < other.sort_key()

    def __repr__(self) -> str:
        if self.vertex is not None:
            return f"<{self.vertex}>"
        return f"<{self.edge}@{self.offset}>"


@dataclass(frozen=True)
class Segment:
    """Straight piece of a walk: edge ``edge`` from offset ``start`` to ``end``."""

    edge: str
    start: Fraction
    end: Fraction

    @property
    def direction(self) -> str:
        return PLUS if self.end >= self.start else MINUS

    @property
    def length(self) -> Fraction:
        return abs(self.end - self.start)

    def reversed(self) -> "Segment":
        return Segment(self.edge, self.end, self.start)

    def at(self, s: Fraction) -> Fraction:
        """Offset reached after travelling ``s`` along the segment."""
        return self.start + s if self.end >= self.start else self.start - s


class MetricGraph:
    """Connected finite multigraph with positive rational edge lengths.

    Self-loops and parallel edges are allowed.  All-pairs vertex distances
    are computed once at construction.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]):
        vertices = tuple(vertices)
        if not vertices:
            raise GraphError("a metric graph needs at least one vertex")
        if len(set(vertices)) != len(vertices):
            raise GraphError("duplicate vertex ids")
        vset = set(vertices)
        emap: dict[str, Edge] = {}
        for e in edges:
            if e.id in emap:
                raise GraphError(f"duplicate edge id {e.id!r}")
            if e.u not in vset or e.v not in vset:
                raise GraphError(f"edge {e.id!r} has an unknown endpoint")
            length = as_rational(e.length)
            if length <= 0:
                raise GraphError(f"edge {e.id!r} has nonpositive length {length}")
            emap[e.id] = Edge(e.id, e.u, e.v, length)
        self._vertices = vertices
        self._edges = emap
        self._edge_ids = tuple(sorted(emap))
        ends: dict[str, list[tuple[str, str]]] = {v: [] for v in vertices}
        for e in emap.values():
            ends[e.u].append((e.id, PLUS))
            ends[e.v].append((e.id, MINUS))
        self._ends = {v: tuple(sorted(d)) for v, d in ends.items()}
        self._dist = {v: self._dijkstra(v) for v in vertices}
        if any(math.isinf(d) for d in self._dist[vertices[0]].values()):
            raise GraphError("metric graph is not connected")

    def _dijkstra(self, source: str) -> dict[str, Fraction]:
        dist: dict[str, Fraction | float] = {v: math.inf for v in self._vertices}
        dist[source] = Fraction(0)
        heap = [(Fraction(0), source)]
        while heap:
            d, w = heapq.heappop(heap)
            if d > dist[w]:
                continue
            for eid, sign in self._ends[w]:
                e = self._edges[eid]
                other = e.v if sign == PLUS else e.u
                nd = d + e.length
                if nd < dist[other]:
                    dist[other] = nd
                    heapq.heappush(heap, (nd, other))
        return dist

    # -- structure ---------------------------------------------------------

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Mapping[str, Edge]:
        return self._edges

    @property
    def edge_ids(self) -> tuple[str, ...]:
        """Edge ids in sorted order (the deterministic iteration order)."""
        return self._edge_ids

    def edge(self, eid: str) -> Edge:
        try:
            return self._edges[eid]
        except KeyError:
            raise GraphError(f"unknown edge {eid!r}") from None

    def ends(self, vertex: str) -> tuple[tuple[str, str], ...]:
        """Edge ends at ``vertex`` as ``(edge id, sign)``; ``+`` leaves from ``u``."""
        return self._ends[vertex]

    def degree(self, vertex: str) -> int:
        return len(self._ends[vertex])

    @property
    def min_edge_length(self) -> Fraction | None:
        return min((e.length for e in self._edges.values()), default=None)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return set(self._vertices) == set(other._vertices) and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((frozenset(self._vertices), frozenset(self._edges.items())))

    def __repr__(self) -> str:
        return f"MetricGraph({len(self._vertices)} vertices, {len(self._edges)} edges)"

    # -- points ------------------------------------------------------------

    def point(self, edge: str, offset) -> GraphPoint:
        """Canonical point at ``offset`` from the ``u`` end of ``edge``."""
        e = self.edge(edge)
        t = as_rational(offset)
        if t < 0 or t > e.length:
            raise GraphError(f"offset {t} outside edge {edge!r} of length {e.length}")
        if t == 0:
            return GraphPoint(vertex=e.u)
        if t == e.length:
            return GraphPoint(vertex=e.v)
        return GraphPoint(edge=edge, offset=t)

    def vertex_point(self, vertex: str) -> GraphPoint:
        if vertex not in self._ends:
            raise GraphError(f"unknown vertex {vertex!r}")
        return GraphPoint(vertex=vertex)

    def check_point(self, p: GraphPoint) -> GraphPoint:
        if p.vertex is not None:
            if p.vertex not in self._ends:
                raise GraphError(f"point {p!r} is not on this graph")
            return p
        if p.edge not in self._edges:
            raise GraphError(f"point {p!r} is not on this graph")
        canon = self.point(p.edge, p.offset)
        if canon != p:
            raise GraphError(f"point {p!r} is not canonical")
        return p

    def directions(self, p: GraphPoint) -> tuple[tuple[str, str], ...]:
        """Local directions at ``p`` as ``(edge id, sign)`` pairs."""
        if p.vertex is not None:
            return self._ends[p.vertex]
        return ((p.edge, PLUS), (p.edge, MINUS))

    def step(self, p: GraphPoint, direction: tuple[str, str]) -> tuple[Fraction, Fraction]:
        """Offset of ``p`` on the direction's edge and the room left before the edge ends."""
        eid, sign = direction
        e = self.edge(eid)
        if p.vertex is not None:
            t = Fraction(0) if sign == PLUS else e.length
        else:
            t = p.offset
        room = e.length - t if sign == PLUS else t
        return t, room

    def _anchors(self, p: GraphPoint) -> list[tuple[str, Fraction]]:
        if p.vertex is not None:
            return [(p.vertex, Fraction(0))]
        e = self._edges[p.edge]
        return [(e.u, p.offset), (e.v, e.length - p.offset)]

    # -- distances ---------------------------------------------------------

    def vertex_distance(self, a: str, b: str) -> Fraction:
        return self._dist[a][b]

    def distance(self, p: GraphPoint, q: GraphPoint) -> Fraction:
        best = None
        for a, da in self._anchors(p):
            row = self._dist[a]
            for b, db in self._anchors(q):
                d = da + row[b] + db
                if best is None or d < best:
                    best = d
        if p.vertex is None and q.vertex is None and p.edge == q.edge:
            best = min(best, abs(p.offset - q.offset))
        return best

    def distances_to_vertices(self, p: GraphPoint) -> dict[str, Fraction]:
        out = {}
        for w in self._vertices:
            out[w] = min(da + self._dist[a][w] for a, da in self._anchors(p))
        return out

    def eccentricity(self, p: GraphPoint) -> Fraction:
        """Largest distance from ``p`` to a point of the graph."""
        dv = self.distances_to_vertices(p)
        best = max(dv.values())
        for e in self._edges.values():
            for lo_d, hi_d, length in self._subedges(p, e, dv):
                best = max(best, (lo_d + length + hi_d) / 2)
        return best

    def diameter(self) -> Fraction:
        best = Fraction(0)
        for v in self._vertices:
            best = max(best, self.eccentricity(GraphPoint(vertex=v)))
        return best

    def _subedges(self, p: GraphPoint, e: Edge, dv: Mapping[str, Fraction]):
        """Pieces of ``e`` with end distances, splitting at ``p`` when p lies inside e."""
        if p.vertex is None and p.edge == e.id:
            yield dv[e.u], Fraction(0), p.offset
            yield Fraction(0), dv[e.v], e.length - p.offset
        else:
            yield dv[e.u], dv[e.v], e.length

    def critical_radii(self, p: GraphPoint) -> list[Fraction]:
        """Radii at which the combinatorics of the spheres around ``p`` change."""
        dv = self.distances_to_vertices(p)
        radii = {d for d in dv.values() if d > 0}
        for e in self._edges.values():
            for lo_d, hi_d, length in self._subedges(p, e, dv):
                r = (lo_d + length + hi_d) / 2
                if r > 0:
                    radii.add(r)
        return sorted(radii)

    # -- walks -------------------------------------------------------------

    def walk(self, start: GraphPoint, segments: Iterable[Segment] = ()) -> "Walk":
        return Walk(self, start, tuple(segments))


@dataclass(frozen=True)
class Walk:
    """Finite concatenation of straight segments, with exact length.

    The start point is stored so that constant walks (no segments) still
    know where they are.
    """

    graph: MetricGraph = field(compare=False, repr=False)
    start: GraphPoint
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        G = self.graph
        G.check_point(self.start)
        here = self.start
        for seg in self.segments:
            e = G.edge(seg.edge)
            for t in (seg.start, seg.end):
                if t < 0 or t > e.length:
                    raise GraphError(f"segment {seg} leaves edge {seg.edge!r}")
            if G.point(seg.edge, seg.start) != here:
                raise GraphError(f"segment {seg} does not start at {here!r}")
            here = G.point(seg.edge, seg.end)
        object.__setattr__(self, "_end", here)

    @property
    def end(self) -> GraphPoint:
        return self._end  # type: ignore[attr-defined]

    @property
    def length(self) -> Fraction:
        return sum((s.length for s in self.segments), Fraction(0))

    def breaks(self) -> list[Fraction]:
        """Cumulative arclength at each segment boundary, starting at 0."""
        out = [Fraction(0)]
        for s in self.segments:
            out.append(out[-1] + s.length)
        return out

    def point_at(self, s) -> GraphPoint:
        s = as_rational(s)
        if s < 0 or s > self.length:
            raise GraphError(f"arclength {s} outside walk of length {self.length}")
        acc = Fraction(0)
        for seg in self.segments:
            if s <= acc + seg.length:
                return self.graph.point(seg.edge, seg.at(s - acc))
            acc += seg.length
        return self.end

    def subwalk(self, s0, s1) -> "Walk":
        """Part of the walk between arclengths ``s0`` and ``s1`` (reversed if s1 < s0)."""
        s0, s1 = as_rational(s0), as_rational(s1)
        if s1 < s0:
            return self.subwalk(s1, s0).reversed()
        pieces = []
        acc = Fraction(0)
        for seg in self.segments:
            a, b = max(s0, acc), min(s1, acc + seg.length)
            if a < b:
                pieces.append(Segment(seg.edge, seg.at(a - acc), seg.at(b - acc)))
            acc += seg.length
        return Walk(self.graph, self.point_at(s0), tuple(pieces))

    def reversed(self) -> "Walk":
        return Walk(self.graph, self.end, tuple(s.reversed() for s in reversed(self.segments)))

    def concat(self, other: "Walk") -> "Walk":
        if other.start != self.end:
            raise GraphError(f"cannot concatenate: {self.end!r} != {other.start!r}")
        return Walk(self.graph, self.start, self.segments + other.segments)

    def normalized(self) -> "Walk":
        """Drop zero-length segments and merge collinear neighbours."""
        out: list[Segment] = []
        for seg in self.segments:
            if seg.length == 0:
                continue
            if out:
                prev = out[-1]
                if prev.edge == seg.edge and prev.end == seg.start and prev.direction == seg.direction:
                    out[-1] = Segment(prev.edge, prev.start, seg.end)
                    continue
            out.append(seg)
        return Walk(self.graph, self.start, tuple(out))

    def direction_after(self, s) -> tuple[str, str] | None:
        """Direction in which the walk leaves the point at arclength ``s``."""
        acc = Fraction(0)
        for seg in self.segments:
            if seg.length > 0 and acc <= s < acc + seg.length:
                return (seg.edge, seg.direction)
            acc += seg.length
        return None

    def direction_before(self, s) -> tuple[str, str] | None:
        """Direction pointing back along the walk from the point at arclength ``s``."""
        acc = Fraction(0)
        for seg in self.segments:
            if seg.length > 0 and acc < s <= acc + seg.length:
                return (seg.edge, MINUS if seg.direction == PLUS else PLUS)
            acc += seg.length
        return None

    def edge_lengths(self) -> dict[str, Fraction]:
        out: dict[str, Fraction] = {}
        for seg in self.segments:
            out[seg.edge] = out.get(seg.edge, Fraction(0)) + seg.length
        return out


# -- module-level operations ------------------------------------------------


def build_graph(spec: Mapping) -> MetricGraph:
    """Build a graph from ``{"vertices": [...], "edges": [{"id", "from", "to", "len"}]}``."""
    try:
        vertices = [str(v) for v in spec["vertices"]]
        edges = [
            Edge(str(e["id"]), str(e["from"]), str(e["to"]), as_rational(e["len"]))
            for e in spec.get("edges", [])
        ]
    except KeyError as exc:
        raise GraphError(f"graph description misses key {exc}") from None
    return MetricGraph(vertices, edges)


def distance(G: MetricGraph, p: GraphPoint, q: GraphPoint) -> Fraction:
    G.check_point(p)
    G.check_point(q)
    return G.distance(p, q)


def walk_length(G: MetricGraph, w: Walk) -> Fraction:
    return w.length


def geodesic(G: MetricGraph, p: GraphPoint, q: GraphPoint) -> Walk:
    """A shortest walk from ``p`` to ``q``.

    Among all shortest walks the one whose sequence of ``(edge id, sign)``
    steps is lexicographically smallest is returned.
    """
    G.check_point(p)
    G.check_point(q)
    total = G.distance(p, q)
    segments: list[Segment] = []
    here = p
    remaining = total
    while here != q:
        best = None
        for direction in G.directions(here):
            eid, sign = direction
            e = G.edge(eid)
            t, room = G.step(here, direction)
            if q.vertex is None and q.edge == eid:
                gap = q.offset - t if sign == PLUS else t - q.offset
                if 0 < gap <= room and gap == remaining:
                    cand = (direction, Segment(eid, t, q.offset), q, gap)
                    if best is None or cand[0] < best[0]:
                        best = cand
                    continue
            far = GraphPoint(vertex=e.v if sign == PLUS else e.u)
            if room + G.distance(far, q) == remaining:
                end = e.length if sign == PLUS else Fraction(0)
                cand = (direction, Segment(eid, t, end), far, room)
                if best is None or cand[0] < best[0]:
                    best = cand
        assert best is not None, "distance table inconsistent"
        _, seg, here, used = best
        segments.append(seg)
        remaining -= used
    return Walk(G, p, tuple(segments))


def critical_radii(G: MetricGraph, p: GraphPoint) -> list[Fraction]:
    return G.critical_radii(G.check_point(p))


class Subdivision:
    """Isometric correspondence between a graph and its subdivision."""

    def __init__(self, original: MetricGraph, refined: MetricGraph, pieces: Mapping[str, int]):
        self.original = original
        self.refined = refined
        self.pieces = dict(pieces)

    @staticmethod
    def piece_id(eid: str, k: int, n: int) -> str:
        return eid if n == 1 else f"{eid}.{k}"

    def forward(self, p: GraphPoint) -> GraphPoint:
        if p.vertex is not None:
            return p
        e = self.original.edge(p.edge)
        n = self.pieces[p.edge]
        step = e.length / n
        k = min(int(p.offset // step), n - 1)
        return self.refined.point(self.piece_id(p.edge, k, n), p.offset - k * step)

    def backward(self, p: GraphPoint) -> GraphPoint:
        if p.vertex is not None:
            if p.vertex in set(self.original.vertices):
                return p
            eid, _, k = p.vertex.rpartition(".")
            e = self.original.edge(eid)
            return self.original.point(eid, int(k) * e.length / self.pieces[eid])
        base, _, k = p.edge.rpartition(".")
        if p.edge in self.original.edges and self.pieces[p.edge] == 1:
            return self.original.point(p.edge, p.offset)
        e = self.original.edge(base)
        return self.original.point(base, int(k) * e.length / self.pieces[base] + p.offset)


def subdivide(G: MetricGraph, delta) -> tuple[MetricGraph, Subdivision]:
    """Split every edge into equal pieces of length at most ``delta``."""
    delta = as_rational(delta)
    if delta <= 0:
        raise GraphError("subdivision step must be positive")
    vertices = list(G.vertices)
    edges: list[Edge] = []
    pieces: dict[str, int] = {}
    for eid in G.edge_ids:
        e = G.edge(eid)
        n = math.ceil(e.length / delta)
        pieces[eid] = n
        if n == 1:
            edges.append(e)
            continue
        step = e.length / n
        names = [e.u] + [f"{eid}.{k}" for k in range(1, n)] + [e.v]
        vertices.extend(names[1:-1])
        for k in range(n):
            edges.append(Edge(f"{eid}.{k}", names[k], names[k + 1], step))
    refined = MetricGraph(vertices, edges)
    return refined, Subdivision(G, refined, pieces)
