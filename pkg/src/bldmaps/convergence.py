"""Pointed mapping packages and their convergence.

A quasi-isometry witness is a finite table defined on a ``delta``-net of a
ball; it is extended to the whole ball by sending each point to the image
of its nearest net point.  Convergence of a sequence of packages is
certified over a finite schedule of indices, radii and sample sequences
together with a declared ``c / i`` rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .graph import GraphError, GraphPoint, MetricGraph, as_rational, subdivide
from .graph_map import GraphMap, is_discrete
from .region import Region, ball
from .checkers import check_bld, check_lq
from . import fixtures

__all__ = [
    "PointedSpace",
    "MappingPackage",
    "QuasiIsometryWitness",
    "QICheck",
    "ConvergenceCertificate",
    "ConvergenceReport",
    "BudgetExceeded",
    "NetTooCoarse",
    "make_net",
    "check_quasi_isometry",
    "min_qi_epsilon",
    "search_quasi_isometry",
    "check_package_convergence",
    "lq_limit_harness",
    "bld_limit_harness",
    "constant_certificate",
    "winding_demo",
]


class BudgetExceeded(RuntimeError):
    pass


class NetTooCoarse(GraphError):
    pass


@dataclass(frozen=True)
class PointedSpace:
    graph: MetricGraph
    basepoint: GraphPoint

    def __post_init__(self):
        self.graph.check_point(self.basepoint)


@dataclass(frozen=True)
class MappingPackage:
    source: PointedSpace
    target: PointedSpace
    map: GraphMap

    def __post_init__(self):
        if self.map.evaluate(self.source.basepoint) != self.target.basepoint:
            raise GraphError("package map must send basepoint to basepoint")

    @classmethod
    def of(cls, f: GraphMap, x0: GraphPoint) -> "MappingPackage":
        return cls(PointedSpace(f.source, x0), PointedSpace(f.target, f.evaluate(x0)), f)


def make_net(G: MetricGraph, x0: GraphPoint, radius, delta) -> list[GraphPoint]:
    """Points within ``delta`` of every point of ``B(x0, radius)``, basepoint first."""
    radius, delta = as_rational(radius), as_rational(delta)
    refined, corr = subdivide(G, 2 * delta)
    pts = {corr.backward(GraphPoint(vertex=v)) for v in refined.vertices}
    pts = {p for p in pts if G.distance(x0, p) <= radius + delta}
    pts.discard(x0)
    return [x0] + sorted(pts, key=lambda p: (G.distance(x0, p), p.sort_key()))


@dataclass(frozen=True)
class QuasiIsometryWitness:
    """A map given on a finite net of ``B(x0, radius)``; ``radius`` defaults to ``1/eps``."""

    source: PointedSpace
    target: PointedSpace
    table: tuple  # ((net point, image), ...)
    delta: Fraction
    eps: Fraction
    radius: Fraction | None = None

    def __post_init__(self):
        for a, b in self.table:
            self.source.graph.check_point(a)
            self.target.graph.check_point(b)

    @property
    def domain_radius(self) -> Fraction:
        return 1 / self.eps if self.radius is None else self.radius

    @property
    def net(self) -> list[GraphPoint]:
        return [a for a, _ in self.table]

    def as_dict(self) -> dict:
        return dict(self.table)

    def __call__(self, p: GraphPoint) -> GraphPoint:
        X = self.source.graph
        best = min(self.table, key=lambda row: (X.distance(p, row[0]), row[0].sort_key()))
        return best[1]

    def with_eps(self, eps) -> "QuasiIsometryWitness":
        return QuasiIsometryWitness(self.source, self.target, self.table, self.delta, as_rational(eps), self.radius)

    @classmethod
    def from_function(cls, source, target, phi: Callable, eps, delta, radius=None) -> "QuasiIsometryWitness":
        eps, delta = as_rational(eps), as_rational(delta)
        R = 1 / eps if radius is None else as_rational(radius)
        net = make_net(source.graph, source.basepoint, R, delta)
        return cls(source, target, tuple((a, phi(a)) for a in net), delta, eps, None if radius is None else R)


@dataclass
class QICheck:
    ok: bool
    condition: str | None = None
    witness: dict | None = None
    distortion: Fraction = Fraction(0)

    def __bool__(self) -> bool:
        return self.ok


def _distortion(w: QuasiIsometryWitness):
    """Largest ``|d(phi a, phi b) - d(a, b)|`` over net pairs, with the worst pair."""
    X, Y = w.source.graph, w.target.graph
    rows = w.table
    worst, pair = Fraction(0), None
    for i, (a, fa) in enumerate(rows):
        for b, fb in rows[i + 1:]:
            gap = abs(Y.distance(fa, fb) - X.distance(a, b))
            if gap > worst:
                worst, pair = gap, (a, b)
    return worst, pair


def _inclusion_radii(w: QuasiIsometryWitness, eps: Fraction) -> list[Fraction]:
    X = w.source.graph
    top = min(1 / eps, w.domain_radius) if eps > 0 else w.domain_radius
    radii = {top}
    for a in w.net:
        r = X.distance(w.source.basepoint, a) - w.delta
        if eps < r < top:
            radii.add(r)
    return sorted(r for r in radii if r >= eps)


def _covered(w: QuasiIsometryWitness, eps: Fraction, r: Fraction, closed: bool = False):
    """``N_{eps+delta}(phi(net ∩ B(x0, r + delta))) ⊇ B(y0, r - eps)``; returns an uncovered point or None.

    ``closed`` uses closed neighbourhoods, which decides the condition for
    every small positive ``eps`` at once when ``eps`` is 0.
    """
    X, Y = w.source.graph, w.target.graph
    need = r - eps
    if need <= 0:
        return None
    images = {fa for a, fa in w.table if X.distance(w.source.basepoint, a) < r + w.delta}
    cover = Region.empty(Y)
    for q in sorted(images):
        cover = cover | ball(Y, q, eps + w.delta, closed=closed)
    gap = ball(Y, w.target.basepoint, need) - cover
    if gap.is_empty():
        return None
    return gap.sample_points()[0]


def _condition_ii(w: QuasiIsometryWitness, eps: Fraction, closed: bool = False):
    for r in _inclusion_radii(w, eps):
        miss = _covered(w, eps, r, closed)
        if miss is not None:
            return r, miss
    return None


def check_quasi_isometry(w: QuasiIsometryWitness) -> QICheck:
    """Basepoint, condition (i) on net pairs, condition (ii) at every radius where it can change.

    Condition (i) is the strict inequality over pairs of net points.
    Condition (ii) uses the net points within ``r + delta`` of the basepoint
    and neighbourhoods of radius ``eps + delta`` to account for the mesh.
    """
    eps = w.eps
    if w.delta > eps / 4:
        raise NetTooCoarse(f"net mesh {w.delta} exceeds eps/4 = {eps / 4}")
    table = w.as_dict()
    x0, y0 = w.source.basepoint, w.target.basepoint
    if table.get(x0) != y0:
        return QICheck(False, "basepoint", {"image": table.get(x0), "expected": y0})
    X = w.source.graph
    for a in w.net:
        if X.distance(x0, a) > w.domain_radius + w.delta:
            return QICheck(False, "domain", {"point": a})
    worst, pair = _distortion(w)
    if worst >= eps:
        a, b = pair
        return QICheck(False, "i", {"pair": pair, "source distance": X.distance(a, b),
                                    "target distance": w.target.graph.distance(table[a], table[b])}, worst)
    bad = _condition_ii(w, eps)
    if bad is not None:
        return QICheck(False, "ii", {"radius": bad[0], "uncovered": bad[1]}, worst)
    return QICheck(True, None, None, worst)


def min_qi_epsilon(w: QuasiIsometryWitness, steps: int = 40):
    """Infimum of ``eps`` for which the table satisfies (i) and (ii).

    Returns ``(value, attained)``.  Condition (i) is strict, so the
    distortion is never attained; the threshold of (ii) is located by
    bisection and reported as attained.
    """
    dist, _ = _distortion(w)
    if _condition_ii(w, Fraction(0), closed=True) is None:
        return dist, False
    lo, hi = Fraction(0), max(Fraction(1), w.domain_radius)
    while _condition_ii(w, hi) is not None:
        hi *= 2
    for _ in range(steps):
        mid = (lo + hi) / 2
        if _condition_ii(w, mid) is None:
            hi = mid
        else:
            lo = mid
    if dist >= hi:
        return dist, False
    return hi, True


def search_quasi_isometry(source: PointedSpace, target: PointedSpace, eps, delta, budget: int = 200_000):
    """Depth-first search for a table on the source net with images in a target net.

    Returns ``(witness or None, reason)``.  ``None`` only says that no
    assignment between these two nets works.
    """
    eps, delta = as_rational(eps), as_rational(delta)
    if delta > eps / 4:
        raise NetTooCoarse(f"net mesh {delta} exceeds eps/4 = {eps / 4}")
    X, Y = source.graph, target.graph
    x0, y0 = source.basepoint, target.basepoint
    R = 1 / eps
    snet = make_net(X, x0, R, delta)
    tnet = make_net(Y, y0, R + eps, delta)
    # images of (i)-respecting maps stay within max distance + eps of y0
    for r in sorted({R} | {X.distance(x0, a) - delta for a in snet if eps < X.distance(x0, a) - delta < R}):
        reach = max(X.distance(x0, a) for a in snet if X.distance(x0, a) < r + delta)
        far = reach + 2 * eps + delta
        if far < r - eps and Y.eccentricity(y0) >= far:
            return None, f"condition (ii) cannot hold at r = {r}: images stay within {reach + eps} of the basepoint"
    dx = {(a, b): X.distance(a, b) for a in snet for b in snet}
    dy = {(p, q): Y.distance(p, q) for p in tnet for q in tnet}
    assign = {x0: y0}
    nodes = 0
    order = snet[1:]

    def rec(k):
        nonlocal nodes
        if k == len(order):
            w = QuasiIsometryWitness(source, target, tuple((a, assign[a]) for a in snet), delta, eps)
            return w if _condition_ii(w, eps) is None else None
        a = order[k]
        target_d = dx[(x0, a)]
        cands = sorted(tnet, key=lambda q: (abs(dy[(y0, q)] - target_d), q.sort_key()))
        for q in cands:
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded(f"quasi-isometry search exceeded {budget} nodes")
            if all(abs(dy[(assign[b], q)] - dx[(b, a)]) < eps for b in assign):
                assign[a] = q
                found = rec(k + 1)
                if found is not None:
                    return found
                del assign[a]
        return None

    found = rec(0)
    return found, ("found" if found is not None else "no assignment between the nets satisfies both conditions")


# -- convergence certificates ---------------------------------------------------------


@dataclass
class ConvergenceCertificate:
    """Finite evidence that ``packages[i]`` converge to ``limit``.

    ``g[(i, r)]`` and ``h[(i, r)]`` are quasi-isometry witnesses from the balls
    of radius ``r`` in the i-th source and target to the limit spaces,
    ``eps[(i, r)]`` their common accuracy.  ``samples`` lists
    ``(a, {i: a_i}, r)``: a limit source point with an approximating sequence.
    The declared rates promise ``eps <= rate / i`` and sample tails ``<= tail_rate / i``.
    """

    packages: dict
    limit: MappingPackage
    radii: tuple
    g: dict
    h: dict
    eps: dict
    samples: list = field(default_factory=list)
    rate: Fraction = Fraction(1)
    tail_rate: Fraction = Fraction(1)

    @property
    def indices(self) -> list[int]:
        return sorted(self.packages)

    def restrict(self, indices: Iterable[int]) -> "ConvergenceCertificate":
        keep = set(indices)
        return ConvergenceCertificate(
            {i: p for i, p in self.packages.items() if i in keep},
            self.limit,
            self.radii,
            {k: v for k, v in self.g.items() if k[0] in keep},
            {k: v for k, v in self.h.items() if k[0] in keep},
            {k: v for k, v in self.eps.items() if k[0] in keep},
            [(a, {i: p for i, p in seq.items() if i in keep}, r) for a, seq, r in self.samples],
            self.rate,
            self.tail_rate,
        )


@dataclass
class ConvergenceReport:
    ok: bool
    failures: list
    eps_table: dict
    worst_tail: Fraction
    checked: int

    def __bool__(self) -> bool:
        return self.ok


class ScheduleIncomplete(GraphError):
    pass


def check_package_convergence(cert: ConvergenceCertificate) -> ConvergenceReport:
    failures = []
    checked = 0
    lim = cert.limit
    for i in cert.indices:
        for r in cert.radii:
            if (i, r) not in cert.g or (i, r) not in cert.h or (i, r) not in cert.eps:
                raise ScheduleIncomplete(f"no witnesses for index {i}, radius {r}")
    for r in cert.radii:
        prev = None
        for i in cert.indices:
            e = cert.eps[(i, r)]
            if e <= 0 or e > cert.rate / i:
                failures.append(("rate", i, r, e))
            if prev is not None and e > prev:
                failures.append(("monotone", i, r, e))
            prev = e
            pkg = cert.packages[i]
            for name, w, here, there in (("g", cert.g[(i, r)], pkg.source, lim.source),
                                         ("h", cert.h[(i, r)], pkg.target, lim.target)):
                checked += 1
                if w.source != here or w.target != there:
                    failures.append((name, i, r, "wrong spaces"))
                    continue
                if w.eps != e or w.domain_radius != r:
                    failures.append((name, i, r, "witness accuracy or radius differs from the schedule"))
                    continue
                try:
                    res = check_quasi_isometry(w)
                except NetTooCoarse as exc:
                    failures.append((name, i, r, "net too coarse", str(exc)))
                    continue
                if not res.ok:
                    failures.append((name, i, r, res.condition, res.witness))
                    continue
                miss = _covered(w, e, r)
                if miss is not None:
                    failures.append((name, i, r, "ball inclusion", miss))
    worst = Fraction(0)
    for a, seq, r in cert.samples:
        if not lim.source.graph.distance(lim.source.basepoint, a) < r:
            failures.append(("sample radius", a, r))
            continue
        for i, ai in sorted(seq.items()):
            g, h = cert.g[(i, r)], cert.h[(i, r)]
            f_i = cert.packages[i].map
            near = lim.source.graph.distance(g(ai), a)
            tail = lim.target.graph.distance(h(f_i(ai)), lim.map(a))
            worst = max(worst, tail)
            if near > cert.tail_rate / i:
                failures.append(("sample sequence", a, i, near))
            if tail > cert.tail_rate / i:
                failures.append(("GH-ii", a, i, tail))
    return ConvergenceReport(not failures, failures, dict(cert.eps), worst, checked)


@dataclass
class HarnessReport:
    applicable: bool
    verdict: bool | None
    message: str
    sequence_ok: bool
    limit_report: object = None


def lq_limit_harness(cert: ConvergenceCertificate, L) -> HarnessReport:
    L = as_rational(L)
    seq_ok = all(check_lq(p.map, L).verdict for p in cert.packages.values())
    conv = check_package_convergence(cert)
    if not seq_ok or not conv.ok:
        return HarnessReport(False, None, "hypotheses fail: sequence not LQ or not convergent", seq_ok)
    rep = check_lq(cert.limit.map, L)
    msg = f"limit is {L}-LQ" if rep.verdict else f"limit fails {L}-LQ"
    return HarnessReport(True, rep.verdict, msg, seq_ok, rep)


def bld_limit_harness(cert: ConvergenceCertificate, L) -> HarnessReport:
    L = as_rational(L)
    seq_ok = all(check_bld(p.map, L).verdict for p in cert.packages.values())
    conv = check_package_convergence(cert)
    if not seq_ok or not conv.ok:
        return HarnessReport(False, None, "hypotheses fail: sequence not BLD or not convergent", seq_ok)
    f = cert.limit.map
    rep = check_bld(f, L)
    if not is_discrete(f)[0]:
        return HarnessReport(False, rep.verdict,
                             "discreteness hypothesis fails: BLD conclusion not applicable", seq_ok, rep)
    msg = f"limit is {L}-BLD" if rep.verdict else f"limit fails {L}-BLD"
    return HarnessReport(True, rep.verdict, msg, seq_ok, rep)


def constant_certificate(pkg: MappingPackage, indices: Sequence[int], radii: Sequence) -> ConvergenceCertificate:
    """The constant sequence with identity witnesses and ``eps_i = 1/i``."""
    radii = tuple(as_rational(r) for r in radii)
    g, h, eps = {}, {}, {}
    for i in indices:
        e = Fraction(1, i)
        for r in radii:
            eps[(i, r)] = e
            g[(i, r)] = QuasiIsometryWitness.from_function(pkg.source, pkg.source, lambda p: p, e, e / 4, r)
            h[(i, r)] = QuasiIsometryWitness.from_function(pkg.target, pkg.target, lambda p: p, e, e / 4, r)
    X = pkg.source.graph
    samples = []
    for v in X.vertices:
        a = GraphPoint(vertex=v)
        r = min((r for r in radii if X.distance(pkg.source.basepoint, a) < r), default=None)
        if r is not None:
            samples.append((a, {i: a for i in indices}, r))
    return ConvergenceCertificate({i: pkg for i in indices}, pkg, radii, g, h, eps, samples)


def _arclength(G: MetricGraph, p: GraphPoint) -> Fraction:
    """Position of ``p`` along a fixture cycle, measured from ``v0``."""
    if p.vertex is not None:
        idx = int(p.vertex[1:])
        return sum((G.edge(f"e{j}").length for j in range(idx)), Fraction(0))
    idx = int(p.edge[1:])
    return sum((G.edge(f"e{j}").length for j in range(idx)), Fraction(0)) + p.offset


def _at_arclength(G: MetricGraph, s: Fraction) -> GraphPoint:
    total = sum((e.length for e in G.edges.values()), Fraction(0))
    s = s % total
    for j in range(len(G.edges)):
        e = G.edge(f"e{j}")
        if s < e.length:
            return G.point(f"e{j}", s)
        s -= e.length
    return GraphPoint(vertex="v0")


def winding_demo(k_max: int, m: int = 4, radii: Sequence = (Fraction(1, 4), Fraction(1, 2))) -> ConvergenceCertificate:
    """Unit-circumference circles wound ``k`` times onto circles of circumference ``1/k``.

    The i-th package is ``C_{im}(1/(im)) -> C_m(1/(im))`` at speed one; the
    limit is ``C_m(1/m)`` collapsed to a point.  The source witnesses are
    arclength identifications, the target witnesses collapse, and
    ``eps_i = 3/(4i)``: above the target diameter ``1/(2i)``.
    """
    if k_max < 1 or m < 1:
        raise ValueError("k_max and m must be positive")
    radii = tuple(as_rational(r) for r in radii)
    X = fixtures.cycle(m, Fraction(1, m))
    pt = fixtures.one_point()
    limit_map = GraphMap.from_traversals(X, pt, {v: "o" for v in X.vertices}, {e: [] for e in X.edge_ids})
    x0, o = GraphPoint(vertex="v0"), GraphPoint(vertex="o")
    limit = MappingPackage(PointedSpace(X, x0), PointedSpace(pt, o), limit_map)
    packages, g, h, eps = {}, {}, {}, {}
    for i in range(1, k_max + 1):
        Xi = fixtures.cycle(i * m, Fraction(1, i * m))
        Yi = fixtures.cycle(m, Fraction(1, i * m))
        fi = GraphMap.from_traversals(
            Xi, Yi,
            {f"v{j}": f"v{j % m}" for j in range(i * m)},
            {f"e{j}": [(f"e{j % m}", "+")] for j in range(i * m)},
        )
        pkg = MappingPackage(PointedSpace(Xi, x0), PointedSpace(Yi, x0), fi)
        packages[i] = pkg
        e = Fraction(3, 4 * i)
        for r in radii:
            eps[(i, r)] = e
            g[(i, r)] = QuasiIsometryWitness.from_function(
                pkg.source, limit.source, lambda p, Xi=Xi: _at_arclength(X, _arclength(Xi, p)), e, e / 4, r)
            h[(i, r)] = QuasiIsometryWitness.from_function(pkg.target, limit.target, lambda p: o, e, e / 4, r)
    samples = []
    for j in range(m):
        a = GraphPoint(vertex=f"v{j}")
        r = min((r for r in radii if X.distance(x0, a) < r), default=None)
        if r is not None:
            samples.append((a, {i: GraphPoint(vertex=f"v{j * i}") for i in packages}, r))
    return ConvergenceCertificate(packages, limit, radii, g, h, eps, samples, Fraction(1), Fraction(1))
