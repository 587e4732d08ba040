"""Piecewise-linear maps between metric graphs.

Every source edge is sent at constant speed along a finite walk in the
target.  All topological notions needed for branched covers (openness,
discreteness, branch set, fibers, normal domains) are decided exactly from
this finite description.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .graph import (
    GraphError,
    GraphPoint,
    MetricGraph,
    Segment,
    Walk,
    PLUS,
    MINUS,
    as_rational,
)
from .region import Region, ball, intersect_intervals

__all__ = [
    "GraphMap",
    "DirectionProfile",
    "Fiber",
    "NotBranchedCover",
    "build_map",
    "evaluate",
    "image_walk",
    "is_discrete",
    "is_open",
    "is_branched_cover",
    "branch_set",
    "fiber",
    "multiplicity",
    "max_multiplicity",
    "preimage_region",
    "image_region",
    "u_component",
    "is_normal_domain",
    "is_normal_neighbourhood",
    "max_normal_radius",
    "vaisala_decomposition",
    "connected_preimage_check",
]


class NotBranchedCover(GraphError):
    """An operation that needs a branched cover got some other map."""


@dataclass(frozen=True)
class DirectionProfile:
    """Local directions at a source point with their image directions and speeds.

    ``entries`` holds ``(source direction, image direction or None, speed)``.
    """

    point: GraphPoint
    image: GraphPoint
    entries: tuple

    def image_directions(self) -> set:
        return {img for _, img, sp in self.entries if sp > 0}


@dataclass(frozen=True)
class Fiber:
    point: GraphPoint
    discrete: bool
    points: tuple = ()
    region: Region | None = None

    def __len__(self) -> int:
        if not self.discrete:
            raise GraphError("fiber is not discrete")
        return len(self.points)


class GraphMap:
    """Continuous piecewise-linear map ``source -> target``.

    ``vertex_map`` sends source vertices to target points and ``edge_map``
    sends each source edge to a walk from the image of its ``u`` end to the
    image of its ``v`` end, traversed at constant speed.
    """

    def __init__(
        self,
        source: MetricGraph,
        target: MetricGraph,
        vertex_map: Mapping[str, GraphPoint | str],
        edge_map: Mapping[str, Walk],
    ):
        self.source = source
        self.target = target
        vm = {}
        for v in source.vertices:
            if v not in vertex_map:
                raise GraphError(f"vertex {v!r} is not assigned")
            img = vertex_map[v]
            if isinstance(img, str):
                img = target.vertex_point(img)
            vm[v] = target.check_point(img)
        extra = set(vertex_map) - set(source.vertices)
        if extra:
            raise GraphError(f"unknown source vertices {sorted(extra)}")
        em = {}
        for eid in source.edge_ids:
            if eid not in edge_map:
                raise GraphError(f"edge {eid!r} is not assigned")
            e = source.edge(eid)
            w = edge_map[eid]
            if w.graph is not target and w.graph != target:
                raise GraphError(f"image of {eid!r} is not a walk in the target")
            if w.start != vm[e.u] or w.end != vm[e.v]:
                raise GraphError(
                    f"discontinuous at edge {eid!r}: walk runs {w.start!r}->{w.end!r}, "
                    f"ends map to {vm[e.u]!r}->{vm[e.v]!r}"
                )
            em[eid] = w.normalized()
        extra = set(edge_map) - set(source.edge_ids)
        if extra:
            raise GraphError(f"unknown source edges {sorted(extra)}")
        self.vertex_map = vm
        self.edge_map = em
        self.speed = {eid: em[eid].length / source.edge(eid).length for eid in source.edge_ids}
        self._breaks = {eid: em[eid].breaks() for eid in source.edge_ids}

    @classmethod
    def from_traversals(cls, source, target, vertex_map, edge_map) -> "GraphMap":
        """Build from full-edge traversals: ``edge_map[e] = [(target edge, '+'|'-'), ...]``."""
        vm = {v: (target.vertex_point(p) if isinstance(p, str) else p) for v, p in vertex_map.items()}
        em = {}
        for eid, steps in edge_map.items():
            e = source.edge(eid)
            segs = []
            for tid, sign in steps:
                t = target.edge(tid)
                segs.append(Segment(tid, Fraction(0), t.length) if sign == PLUS else Segment(tid, t.length, Fraction(0)))
            em[eid] = Walk(target, vm[e.u], tuple(segs))
        return cls(source, target, vm, em)

    def __repr__(self) -> str:
        return f"GraphMap({self.source!r} -> {self.target!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, GraphMap):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.vertex_map == other.vertex_map
            and {e: (w.start, w.segments) for e, w in self.edge_map.items()}
            == {e: (w.start, w.segments) for e, w in other.edge_map.items()}
        )

    def __hash__(self) -> int:
        return hash((self.source, self.target))

    # -- evaluation --------------------------------------------------------

    def __call__(self, p: GraphPoint) -> GraphPoint:
        return self.evaluate(p)

    def evaluate(self, p: GraphPoint) -> GraphPoint:
        self.source.check_point(p)
        if p.vertex is not None:
            return self.vertex_map[p.vertex]
        return self.edge_map[p.edge].point_at(p.offset * self.speed[p.edge])

    def param(self, eid: str, t: Fraction) -> Fraction:
        return t * self.speed[eid]

    def joints(self, eid: str) -> list[Fraction]:
        """Source offsets inside ``eid`` where the image walk changes segment."""
        sp = self.speed[eid]
        if sp == 0:
            return []
        return [b / sp for b in self._breaks[eid][1:-1]]

    def breakpoints(self) -> list[GraphPoint]:
        pts = [GraphPoint(vertex=v) for v in self.source.vertices]
        for eid in self.source.edge_ids:
            pts += [GraphPoint(edge=eid, offset=t) for t in self.joints(eid)]
        return sorted(pts)

    def regime_segments(self) -> list[tuple[str, Fraction, Fraction]]:
        """Maximal source pieces ``(edge, lo, hi)`` on which the map is affine."""
        out = []
        for eid in self.source.edge_ids:
            cuts = [Fraction(0)] + self.joints(eid) + [self.source.edge(eid).length]
            out += [(eid, a, b) for a, b in zip(cuts, cuts[1:])]
        return out

    def regime_samples(self) -> list[GraphPoint]:
        return [GraphPoint(edge=eid, offset=(a + b) / 2) for eid, a, b in self.regime_segments()]

    def min_speed(self) -> Fraction | None:
        return min(self.speed.values(), default=None)

    def max_speed(self) -> Fraction | None:
        return max(self.speed.values(), default=None)

    def direction_profile(self, p: GraphPoint) -> DirectionProfile:
        X = self.source
        X.check_point(p)
        entries = []
        for d in X.directions(p):
            eid, sign = d
            sp = self.speed[eid]
            if sp == 0:
                entries.append((d, None, sp))
                continue
            t, _ = X.step(p, d)
            w = self.edge_map[eid]
            s = t * sp
            img = w.direction_after(s) if sign == PLUS else w.direction_before(s)
            entries.append((d, img, sp))
        return DirectionProfile(p, self.evaluate(p), tuple(entries))

    # -- walks -------------------------------------------------------------

    def image_walk(self, w: Walk) -> Walk:
        Y = self.target
        out = Walk(Y, self.evaluate(w.start))
        for seg in w.segments:
            sp = self.speed[seg.edge]
            if sp == 0:
                continue
            piece = self.edge_map[seg.edge].subwalk(seg.start * sp, seg.end * sp)
            out = out.concat(piece)
        return out.normalized()

    # -- regions -----------------------------------------------------------

    def preimage(self, B: Region) -> Region:
        X, Y = self.source, self.target
        vs = [v for v in X.vertices if B.contains(self.vertex_map[v])]
        out: dict = {}
        for eid in X.edge_ids:
            e = X.edge(eid)
            sp = self.speed[eid]
            w = self.edge_map[eid]
            ivs = []
            if sp == 0:
                if B.contains(w.start):
                    ivs.append((Fraction(0), e.length, False, False))
                out[eid] = ivs
                continue
            breaks = self._breaks[eid]
            for k, seg in enumerate(w.segments):
                t0 = breaks[k] / sp
                if k > 0 and B.contains(Y.point(seg.edge, seg.start)):
                    ivs.append((t0, t0, True, True))
                lo_y, hi_y = min(seg.start, seg.end), max(seg.start, seg.end)
                inside = ((lo_y, hi_y, False, False),)
                for a, b, ac, bc in intersect_intervals(B.edge_intervals(seg.edge), inside, Y.edge(seg.edge).length):
                    if seg.direction == PLUS:
                        ivs.append((t0 + (a - seg.start) / sp, t0 + (b - seg.start) / sp, ac, bc))
                    else:
                        ivs.append((t0 + (seg.start - b) / sp, t0 + (seg.start - a) / sp, bc, ac))
            out[eid] = ivs
        return Region.make(X, vs, out)

    def image(self, A: Region) -> Region:
        X, Y = self.source, self.target
        vs: set = set()
        ivs: dict = {}

        def add_point(q: GraphPoint):
            if q.vertex is not None:
                vs.add(q.vertex)
            else:
                ivs.setdefault(q.edge, []).append((q.offset, q.offset, True, True))

        for v in A.vertices:
            add_point(self.vertex_map[v])
        for eid, pieces in A.intervals:
            sp = self.speed[eid]
            w = self.edge_map[eid]
            if sp == 0:
                add_point(w.start)
                continue
            breaks = self._breaks[eid]
            for lo, hi, lc, hc in pieces:
                s_lo, s_hi = lo * sp, hi * sp
                for k, seg in enumerate(w.segments):
                    b0, b1 = breaks[k], breaks[k + 1]
                    a = max(s_lo, b0)
                    b = min(s_hi, b1)
                    if a > b:
                        continue
                    ac = lc if a == s_lo else True
                    bc = hc if b == s_hi else True
                    if a == b and not (ac and bc):
                        continue
                    ya, yb = seg.at(a - b0), seg.at(b - b0)
                    if ya > yb:
                        ya, yb, ac, bc = yb, ya, bc, ac
                    g = Y.edge(seg.edge)
                    if ya == 0 and ac:
                        vs.add(g.u)
                    if yb == g.length and bc:
                        vs.add(g.v)
                    ivs.setdefault(seg.edge, []).append((ya, yb, ac, bc))
        return Region.make(Y, vs, ivs)


# -- construction and evaluation ------------------------------------------------


def build_map(X: MetricGraph, Y: MetricGraph, spec: Mapping) -> GraphMap:
    """Build from ``{"vertex_map": {...}, "edge_map": {e: [{"edge", "dir"}, ...]}}``."""
    try:
        vm = {str(v): Y.vertex_point(str(w)) for v, w in spec["vertex_map"].items()}
        em = {
            str(e): [(str(step["edge"]), str(step.get("dir", PLUS))) for step in steps]
            for e, steps in spec["edge_map"].items()
        }
    except KeyError as exc:
        raise GraphError(f"map description misses key {exc}") from None
    return GraphMap.from_traversals(X, Y, vm, em)


def evaluate(f: GraphMap, p: GraphPoint) -> GraphPoint:
    return f.evaluate(p)


def image_walk(f: GraphMap, w: Walk) -> Walk:
    return f.image_walk(w)


def preimage_region(f: GraphMap, B: Region) -> Region:
    return f.preimage(B)


def image_region(f: GraphMap, A: Region) -> Region:
    return f.image(A)


# -- topology ----------------------------------------------------------------


def is_discrete(f: GraphMap):
    """``(True, None)`` or ``(False, collapsed edge id)``."""
    for eid in f.source.edge_ids:
        if f.speed[eid] == 0:
            return False, eid
    return True, None


def is_open(f: GraphMap):
    """``(True, None)`` or ``(False, (point, uncovered target direction))``."""
    X, Y = f.source, f.target
    if Y.edge_ids:
        for eid in X.edge_ids:
            if f.speed[eid] == 0:
                mid = X.point(eid, X.edge(eid).length / 2)
                return False, (mid, Y.directions(f.evaluate(mid))[0])
    for p in f.breakpoints():
        prof = f.direction_profile(p)
        covered = prof.image_directions()
        for d in Y.directions(prof.image):
            if d not in covered:
                return False, (p, d)
    return True, None


def is_branched_cover(f: GraphMap) -> bool:
    return is_discrete(f)[0] and is_open(f)[0]


def _require_cover(f: GraphMap):
    if not is_discrete(f)[0]:
        raise NotBranchedCover("map is not discrete")
    ok, wit = is_open(f)
    if not ok:
        raise NotBranchedCover(f"map is not open at {wit[0]!r}")


def branch_set(f: GraphMap, require_cover: bool = True) -> list[GraphPoint]:
    """Points near which ``f`` is not injective."""
    if require_cover:
        _require_cover(f)
    out = []
    for p in f.breakpoints():
        imgs = [img for _, img, sp in f.direction_profile(p).entries if sp > 0]
        if len(imgs) != len(set(imgs)):
            out.append(p)
    return out


def fiber(f: GraphMap, y: GraphPoint) -> Fiber:
    pre = f.preimage(Region.point(f.target, y))
    if pre.is_finite():
        return Fiber(y, True, tuple(pre.points()), pre)
    return Fiber(y, False, (), pre)


def multiplicity(f: GraphMap, y: GraphPoint, A: Region | None = None):
    """``#(A ∩ f^-1{y})``; ``math.inf`` when that set is infinite."""
    pre = f.preimage(Region.point(f.target, y))
    if A is not None:
        pre = pre & A
    return len(pre.points()) if pre.is_finite() else math.inf


def max_multiplicity(f: GraphMap, A: Region | None = None):
    """``sup_y #(A ∩ f^-1{y})`` computed over every combinatorial regime of ``y``."""
    X, Y = f.source, f.target
    if A is None:
        A = Region.whole(X)
    marks = {f.evaluate(p) for p in f.breakpoints()}
    for p in A.closure().points() if A.is_finite() else _interval_ends(A):
        marks.add(f.evaluate(p))
    cands = set(marks) | {GraphPoint(vertex=v) for v in Y.vertices}
    for eid in Y.edge_ids:
        g = Y.edge(eid)
        cuts = sorted({Fraction(0), g.length} | {q.offset for q in marks if q.edge == eid})
        cands |= {Y.point(eid, (a + b) / 2) for a, b in zip(cuts, cuts[1:])}
    best = 0
    for y in sorted(cands):
        best = max(best, multiplicity(f, y, A))
    return best


def _interval_ends(A: Region) -> list[GraphPoint]:
    G = A.graph
    pts = [GraphPoint(vertex=v) for v in A.vertices]
    for eid, ivs in A.intervals:
        for lo, hi, _, _ in ivs:
            pts.append(G.point(eid, lo))
            pts.append(G.point(eid, hi))
    return pts


# -- components and normal domains --------------------------------------------


def u_component(f: GraphMap, x: GraphPoint, r) -> Region:
    """Component containing ``x`` of the preimage of the open ball ``B(f(x), r)``."""
    r = as_rational(r)
    f.source.check_point(x)
    pre = f.preimage(ball(f.target, f.evaluate(x), r))
    for comp in pre.components():
        if comp.contains(x):
            return comp
    raise AssertionError("x must lie in its own preimage component")


def is_normal_domain(f: GraphMap, U: Region) -> bool:
    if U.is_empty() or not U.is_open() or not U.is_connected():
        raise GraphError("a normal domain must be a nonempty open connected region")
    image_boundary = set(f.image(U).boundary_points())
    boundary_image = {f.evaluate(b) for b in U.boundary_points()}
    return image_boundary == boundary_image


def is_normal_neighbourhood(f: GraphMap, U: Region, x: GraphPoint) -> bool:
    if not U.contains(x) or not is_normal_domain(f, U):
        return False
    hits = U.closure() & f.preimage(Region.point(f.target, f.evaluate(x)))
    return hits.is_finite() and hits.points() == [x]


def _scan_radius(test, radii: Iterable[Fraction], cap: Fraction) -> Fraction:
    """Largest ``R <= cap`` with ``test(r)`` true for all ``0 < r < R``.

    ``test`` is assumed constant on each open gap between consecutive radii.
    """
    cuts = sorted({r for r in radii if 0 < r < cap} | {cap})
    prev = Fraction(0)
    for c in cuts:
        if not test((prev + c) / 2):
            return prev
        if c < cap and not test(c):
            return c
        prev = c
    return cap


def _radius_schedule(f: GraphMap, y: GraphPoint, targets: Iterable[GraphPoint]) -> set:
    Y = f.target
    radii = set(Y.critical_radii(y))
    for q in targets:
        radii.add(Y.distance(y, q))
    return radii


def max_normal_radius(f: GraphMap, x: GraphPoint):
    """Supremum of radii ``R`` such that ``U(x, f, r)`` is a normal neighbourhood for ``r < R``.

    Radii past the eccentricity of ``f(x)`` all give the same open ball (the
    whole target), so the result is capped there.  Returns ``None`` when the
    target is a single point.
    """
    _require_cover(f)
    Y = f.target
    y = f.evaluate(x)
    cap = Y.eccentricity(y)
    if cap == 0:
        return None
    radii = _radius_schedule(f, y, [f.evaluate(b) for b in f.breakpoints()])

    def test(r):
        return is_normal_neighbourhood(f, u_component(f, x, r), x)

    return _scan_radius(test, radii, cap)


@dataclass(frozen=True)
class Decomposition:
    radius: Fraction
    witness_radius: Fraction
    centers: tuple
    pieces: tuple


def _decompose(f: GraphMap, U: Region, y: GraphPoint, r: Fraction):
    """Pieces ``U(z, f, r)`` over the fiber points ``z`` in ``U``, or ``None`` if they do not tile."""
    whole = U & f.preimage(ball(f.target, y, r))
    centers = [z for z in f.preimage(Region.point(f.target, y)).points() if U.contains(z)]
    pieces = [u_component(f, z, r) for z in centers]
    for z, piece in zip(centers, pieces):
        if not piece.issubset(U) or not is_normal_neighbourhood(f, piece, z):
            return None
    for i, a in enumerate(pieces):
        for b in pieces[i + 1:]:
            if not (a & b).is_empty():
                return None
    union = Region.empty(f.source)
    for piece in pieces:
        union = union | piece
    if union != whole:
        return None
    return centers, pieces


def vaisala_decomposition(f: GraphMap, U: Region, y: GraphPoint, r=None) -> Decomposition:
    """Split ``U ∩ f^-1 B(y, r)`` into disjoint normal neighbourhoods of the fiber points.

    Returns the largest admissible radius together with the pieces at the
    witness radius ``r`` (half the admissible radius by default).
    """
    _require_cover(f)
    if not is_normal_domain(f, U):
        raise GraphError("U is not a normal domain")
    if not f.image(U).contains(y):
        raise GraphError("y is not in f(U)")
    Y = f.target
    cap = Y.eccentricity(y)
    if cap == 0:
        raise GraphError("target is a single point")
    targets = [f.evaluate(b) for b in f.breakpoints()] + [f.evaluate(b) for b in U.boundary_points()]
    radii = _radius_schedule(f, y, targets)
    r_y = _scan_radius(lambda s: _decompose(f, U, y, s) is not None, radii, cap)
    if r_y == 0:
        raise GraphError("no admissible decomposition radius")
    r = r_y / 2 if r is None else as_rational(r)
    if not 0 < r < r_y and not (r == r_y == cap):
        raise GraphError(f"witness radius {r} outside (0, {r_y})")
    found = _decompose(f, U, y, r)
    if found is None:
        raise AssertionError(f"decomposition failed at r = {r}")
    centers, pieces = found
    return Decomposition(r_y, r, tuple(centers), tuple(pieces))


def connected_preimage_check(f: GraphMap, x: GraphPoint, U: Region, W: Region) -> bool:
    """Connectivity of ``U ∩ f^-1 W`` for a normal neighbourhood ``U`` of ``x``."""
    if not is_normal_neighbourhood(f, U, x):
        raise GraphError("U is not a normal neighbourhood of x")
    if W.is_empty() or not W.is_open() or not W.is_connected():
        raise GraphError("W must be a nonempty connected open region")
    if not W.contains(f.evaluate(x)) or not W.issubset(f.image(U)):
        raise GraphError("W must contain f(x) and lie inside f(U)")
    return (U & f.preimage(W)).is_connected()
