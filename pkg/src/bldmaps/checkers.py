"""Exact checks of the four BLD-type conditions and their minimal constants.

Conditions:

* BLD: branched cover whose edge speeds all lie in ``[1/L, L]``.
* LQ: ``B(f(x), r/L) ⊆ f(B(x, r)) ⊆ B(f(x), L r)`` for every ``x`` and ``r``.
* RADIAL: sphere image distances between ``r/L`` and ``L r`` for small ``r``.
* CORADIAL: boundary of ``U(x, f, r)`` at distances between ``r/L`` and
  ``L r`` for small ``r`` (branched covers only).

Every check is carried out with rational arithmetic.  Universal statements
over points are evaluated at :func:`centers`, a finite set containing a
point of every affine regime of the map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .graph import GraphPoint, MetricGraph, PLUS, as_rational
from .graph_map import (
    GraphMap,
    NotBranchedCover,
    is_discrete,
    is_open,
    u_component,
)
from .region import Region, ball, sphere

__all__ = [
    "BLD",
    "LQ",
    "RADIAL",
    "RADIAL_POINTWISE",
    "CORADIAL",
    "LIPSCHITZ",
    "LocalIndices",
    "PropertyReport",
    "Characterization",
    "centers",
    "stable_radius",
    "local_indices",
    "topology",
    "check_bld",
    "min_bld_constant",
    "check_lipschitz",
    "check_lq",
    "check_lq_local",
    "colipschitz_sup",
    "check_radial",
    "check_radial_pointwise",
    "check_coradial",
    "check",
    "min_constant",
    "characterize",
]

BLD = "BLD"
LQ = "LQ"
RADIAL = "RADIAL"
RADIAL_POINTWISE = "RADIAL_POINTWISE"
CORADIAL = "CORADIAL"
LIPSCHITZ = "LIPSCHITZ"
INF = math.inf


@dataclass(frozen=True)
class LocalIndices:
    center: GraphPoint
    radius: Fraction
    L: Any  # sup of image distances over the sphere (0 when the sphere is empty)
    l: Any  # inf, +inf when the sphere is empty
    L_star: Any
    l_star: Any


@dataclass
class PropertyReport:
    prop: str
    constant: Fraction | None
    verdict: bool
    witness: dict | None = None
    minimal: Fraction | None = None
    topology: dict = field(default_factory=dict)
    failed: str | None = None
    r0: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict


def topology(f: GraphMap) -> dict:
    disc, _ = is_discrete(f)
    op, _ = is_open(f)
    return {"discrete": disc, "open": op, "branched_cover": disc and op}


# -- sample points and radii ---------------------------------------------------


def centers(f: GraphMap) -> list[GraphPoint]:
    """Breakpoints, preimages of target vertices, and one point inside every piece between them."""
    X, Y = f.source, f.target
    pts = {GraphPoint(vertex=v) for v in X.vertices}
    over_vertices = f.preimage(Region.make(Y, Y.vertices))
    for eid in X.edge_ids:
        e = X.edge(eid)
        cuts = {Fraction(0), e.length} | set(f.joints(eid))
        if f.speed[eid] > 0:
            cuts |= {lo for lo, *_ in over_vertices.edge_intervals(eid)}
        cuts = sorted(cuts)
        for t in cuts[1:-1]:
            pts.add(X.point(eid, t))
        for a, b in zip(cuts, cuts[1:]):
            pts.add(X.point(eid, (a + b) / 2))
    return sorted(pts)


def stable_radius(f: GraphMap, x: GraphPoint) -> Fraction:
    """A radius below which balls around ``x`` and ``f(x)`` are plain stars of straight arcs.

    Below it, each direction at ``x`` is mapped linearly onto a geodesic arc
    from ``f(x)``, so every local index is linear in ``r``.
    """
    X, Y = f.source, f.target
    bounds = []
    cx = X.critical_radii(x)
    if cx:
        bounds.append(cx[0])
    for b in f.breakpoints():
        if b != x:
            bounds.append(X.distance(x, b))
    cy = Y.critical_radii(f.evaluate(x))
    top = f.max_speed()
    if cy and top:
        bounds.append(cy[0] / max(Fraction(1), top))
    return min(bounds) if bounds else Fraction(1)


def local_indices(f: GraphMap, x: GraphPoint, r) -> LocalIndices:
    r = as_rational(r)
    X, Y = f.source, f.target
    fx = f.evaluate(x)
    dists = [Y.distance(fx, f.evaluate(y)) for y in sphere(X, x, r)]
    U = u_component(f, x, r)
    bdist = [X.distance(x, b) for b in U.boundary_points()]
    return LocalIndices(
        x, r,
        max(dists, default=Fraction(0)), min(dists, default=INF),
        max(bdist, default=Fraction(0)), min(bdist, default=INF),
    )


def _ratio_const(upper, lower, r) -> Any:
    """Least L with ``upper <= L r`` and ``lower >= r / L``."""
    a = upper / r
    b = INF if lower == 0 else (r / lower if lower != INF else Fraction(0))
    return max(Fraction(1), a, b)


# -- BLD and Lipschitz -----------------------------------------------------------


def min_bld_constant(f: GraphMap) -> Fraction:
    topo = topology(f)
    if not topo["branched_cover"]:
        raise NotBranchedCover("BLD constants are defined for branched covers only")
    best = Fraction(1)
    for s in f.speed.values():
        best = max(best, s, 1 / s)
    return best


def check_bld(f: GraphMap, L) -> PropertyReport:
    L = as_rational(L)
    topo = topology(f)
    rep = PropertyReport(BLD, L, True, topology=topo)
    if not topo["branched_cover"]:
        rep.verdict = False
        if not topo["discrete"]:
            rep.failed = "discrete"
            rep.witness = {"edge": is_discrete(f)[1], "inequality": "edge collapsed to a point"}
        else:
            p, d = is_open(f)[1]
            rep.failed = "open"
            rep.witness = {"point": p, "direction": d, "inequality": "target direction not covered"}
        return rep
    rep.minimal = min_bld_constant(f)
    for eid in f.source.edge_ids:
        s = f.speed[eid]
        if s > L or s * L < 1:
            rep.verdict = False
            rep.failed = "length distortion"
            rep.witness = {
                "edge": eid,
                "speed": s,
                "inequality": f"speed {s} outside [1/{L}, {L}]",
            }
            break
    return rep


def check_lipschitz(f: GraphMap, L) -> PropertyReport:
    L = as_rational(L)
    X, Y = f.source, f.target
    rep = PropertyReport(LIPSCHITZ, L, True, topology=topology(f), minimal=f.max_speed() or Fraction(0))
    for eid, lo, hi in f.regime_segments():
        if f.speed[eid] > L:
            p = X.point(eid, (lo + hi) / 2)
            delta = (hi - lo) / 4
            while True:
                q = X.point(eid, p.offset + delta)
                if Y.distance(f(p), f(q)) > L * X.distance(p, q):
                    break
                delta /= 2
            rep.verdict = False
            rep.failed = "speed"
            rep.witness = {
                "points": [p, q],
                "inequality": f"d(f(p), f(q)) = {Y.distance(f(p), f(q))} > {L} * {X.distance(p, q)}",
            }
            return rep
    for a in X.vertices:
        for b in X.vertices:
            pa, pb = GraphPoint(vertex=a), GraphPoint(vertex=b)
            if Y.distance(f(pa), f(pb)) > L * X.distance(pa, pb):
                rep.verdict = False
                rep.failed = "vertex pair"
                rep.witness = {"points": [pa, pb]}
                return rep
    return rep


# -- LQ ---------------------------------------------------------------------------
#
# The left inclusion B(f(x), r/L) ⊆ f(B(x, r)) for all r is the same as
# dist(x, f^-1{y}) <= L d(f(x), y) for every target point y.  Along a target
# edge both sides are minima of finitely many affine functions of the edge
# offset, so the supremum of their ratio is found exactly by splitting the
# edge at all crossings and evaluating one-sided limits at the pieces' ends.


def _cross(a, b, lo, hi):
    (a0, a1), (b0, b1) = a, b
    if a1 == b1:
        return None
    s = (b0 - a0) / (a1 - b1)
    return s if lo < s < hi else None


def _dist_pieces(dv, length, u, v, here):
    """Distance from a fixed point to the point at offset ``s`` of an edge, as affine pieces.

    ``here`` is the offset of the fixed point when it lies inside the edge.
    Returns ``[(lo, hi, [(c0, c1), ...])]`` with distance ``min(c0 + c1 s)`` on ``[lo, hi]``.
    """
    fu, fv = (dv[u], Fraction(1)), (dv[v] + length, Fraction(-1))
    if here is None:
        return [(Fraction(0), length, [fu, fv])]
    return [
        (Fraction(0), here, [fu, (here, Fraction(-1))]),
        (here, length, [(-here, Fraction(1)), fv]),
    ]


def _branches(f: GraphMap):
    """Per target edge: source pieces ``(edge, t0, speed, segment)`` mapped onto it."""
    out: dict = {}
    for eid in f.source.edge_ids:
        sp = f.speed[eid]
        if sp == 0:
            continue
        breaks = f.edge_map[eid].breaks()
        for k, seg in enumerate(f.edge_map[eid].segments):
            out.setdefault(seg.edge, []).append((eid, breaks[k] / sp, sp, seg))
    return out


def _eval(forms, s):
    return min(c0 + c1 * s for c0, c1 in forms)


def colipschitz_sup(f: GraphMap, x: GraphPoint, branches=None):
    """``sup_y dist(x, f^-1{y}) / d(f(x), y)`` and a point where the ratio is near the sup.

    Returns ``(value, worst)`` where ``worst`` is ``(target edge, interval, endpoint)``
    locating the sup, or ``None`` when the target has no edges.
    """
    X, Y = f.source, f.target
    if branches is None:
        branches = _branches(f)
    fx = f.evaluate(x)
    dx = X.distances_to_vertices(x)
    dy = Y.distances_to_vertices(fx)
    best, worst = Fraction(0), None
    for gid in Y.edge_ids:
        g = Y.edge(gid)
        here_y = fx.offset if fx.edge == gid else None
        dpieces = _dist_pieces(dy, g.length, g.u, g.v, here_y)
        fpieces = []
        for eid, t0, sp, seg in branches.get(gid, ()):
            e = X.edge(eid)
            sigma = 1 if seg.direction == PLUS else -1
            c1 = Fraction(sigma) / sp
            c0 = t0 - sigma * seg.start / sp
            s_lo, s_hi = min(seg.start, seg.end), max(seg.start, seg.end)
            here_x = x.offset if x.edge == eid else None
            for lo_t, hi_t, forms in _dist_pieces(dx, e.length, e.u, e.v, here_x):
                # compose with t = c0 + c1 s and restrict to the segment
                ends = sorted(((lo_t - c0) / c1, (hi_t - c0) / c1))
                lo, hi = max(s_lo, ends[0]), min(s_hi, ends[1])
                if lo < hi:
                    fpieces.append((lo, hi, [(a0 + a1 * c0, a1 * c1) for a0, a1 in forms]))
        cuts = {Fraction(0), g.length}
        allforms = []
        for lo, hi, forms in dpieces + fpieces:
            cuts |= {lo, hi}
            allforms += forms
        for i, a in enumerate(allforms):
            for b in allforms[i + 1:]:
                s = _cross(a, b, Fraction(0), g.length)
                if s is not None:
                    cuts.add(s)
        cuts = sorted(cuts)
        for s0, s1 in zip(cuts, cuts[1:]):
            mid = (s0 + s1) / 2
            active = [fm for lo, hi, fm in fpieces if lo <= s0 and s1 <= hi]
            dforms = [fm for lo, hi, fm in dpieces if lo <= s0 and s1 <= hi][0]
            if not active:
                return INF, (gid, (s0, s1), mid)
            fform = [c for fm in active for c in fm]
            for end in (s0, s1):
                F, D = _eval(fform, end), _eval(dforms, end)
                if D > 0:
                    ratio = F / D
                elif F > 0:
                    ratio = INF
                else:
                    ratio = _eval(fform, mid) / _eval(dforms, mid)
                if ratio > best:
                    best, worst = ratio, (gid, (s0, s1), end)
    return best, worst


def _colip_witness(f: GraphMap, x: GraphPoint, worst, L, branches):
    """Concrete target point ``y`` with ``dist(x, f^-1 y) > L d(f(x), y)``."""
    X, Y = f.source, f.target
    gid, (s0, s1), end = worst
    other = s1 if end == s0 else s0
    fx = f.evaluate(x)
    s = (end + other) / 2
    for _ in range(200):
        y = Y.point(gid, s)
        d = Y.distance(fx, y)
        pre = f.preimage(Region.point(Y, y))
        F = min((X.distance(x, p) for p in pre.points()), default=INF) if pre.is_finite() else INF
        if d > 0 and F > L * d:
            r = (L * d + F) / 2 if F != INF else L * d + 1
            return {"center": x, "point": y, "radius": r,
                    "inequality": f"B(f(x), r/L) not inside f(B(x, r)): dist to fiber {F} > {L} * {d}"}
        s = (s + end) / 2
    return {"center": x, "inequality": "co-Lipschitz ratio exceeds L in the limit"}


def check_lq(f: GraphMap, L) -> PropertyReport:
    L = as_rational(L)
    rep = PropertyReport(LQ, L, True, topology=topology(f))
    lip = check_lipschitz(f, L)
    branches = _branches(f)
    sup = Fraction(0)
    fail = None
    for x in centers(f):
        val, worst = colipschitz_sup(f, x, branches)
        if val > sup:
            sup = val
        if fail is None and val > L:
            fail = (x, worst)
    minimal = max(Fraction(1), f.max_speed() or Fraction(0), sup)
    rep.minimal = None if minimal == INF else minimal
    if not lip.verdict:
        rep.verdict, rep.failed, rep.witness = False, "right inclusion", lip.witness
    elif fail is not None:
        rep.verdict, rep.failed = False, "left inclusion"
        rep.witness = _colip_witness(f, fail[0], fail[1], L, branches)
    return rep


def check_lq_local(f: GraphMap, L) -> PropertyReport:
    """Both inclusions at every center for radii below its stable radius.

    Inside the stable radius balls are stars of straight arcs scaling
    linearly with ``r``, so testing at half that radius decides every smaller one.
    """
    L = as_rational(L)
    X, Y = f.source, f.target
    rep = PropertyReport(LQ, L, True, topology=topology(f))
    for x in centers(f):
        r0 = stable_radius(f, x)
        rep.r0[x] = r0
        r = r0 / 2
        fx = f.evaluate(x)
        img = f.image(ball(X, x, r))
        if not ball(Y, fx, r / L).issubset(img):
            rep.verdict, rep.failed = False, "left inclusion"
        elif not img.issubset(ball(Y, fx, L * r)):
            rep.verdict, rep.failed = False, "right inclusion"
        if not rep.verdict:
            rep.witness = {"center": x, "radius": r}
            return rep
    return rep


# -- radial and coradial ------------------------------------------------------------


def check_radial(f: GraphMap, L) -> PropertyReport:
    L = as_rational(L)
    rep = PropertyReport(RADIAL, L, True, topology=topology(f))
    worst = Fraction(1)
    for x in centers(f):
        r0 = stable_radius(f, x)
        rep.r0[x] = r0
        r = r0 / 2
        X, Y = f.source, f.target
        fx = f.evaluate(x)
        dists = [Y.distance(fx, f.evaluate(y)) for y in sphere(X, x, r)]
        big, small = max(dists, default=Fraction(0)), min(dists, default=INF)
        worst = max(worst, _ratio_const(big, small, r))
        if rep.verdict and (big > L * r or small * L < r):
            rep.verdict = False
            rep.failed = "upper" if big > L * r else "lower"
            rep.witness = {"center": x, "radius": r, "L(x,f,r)": big, "l(x,f,r)": small}
    rep.minimal = None if worst == INF else worst
    return rep


def check_radial_pointwise(f: GraphMap, L) -> PropertyReport:
    """The two-sided pointwise bound ``d/L <= d(f(x), f(y)) <= L d`` near every center.

    Inside the stable radius each ray from ``x`` is mapped linearly, so two
    points per ray decide every ``y`` in the ball.
    """
    L = as_rational(L)
    X, Y = f.source, f.target
    rep = PropertyReport(RADIAL_POINTWISE, L, True, topology=topology(f))
    for x in centers(f):
        r0 = stable_radius(f, x)
        rep.r0[x] = r0
        fx = f.evaluate(x)
        for d in X.directions(x):
            eid, sign = d
            t, _ = X.step(x, d)
            for dist in (r0 / 2, r0 / 4):
                y = X.point(eid, t + dist if sign == PLUS else t - dist)
                dy = Y.distance(fx, f.evaluate(y))
                if dy > L * dist or dy * L < dist:
                    rep.verdict = False
                    rep.failed = "upper" if dy > L * dist else "lower"
                    rep.witness = {"center": x, "point": y, "inequality": f"{dy} vs {dist} with L = {L}"}
                    return rep
    return rep


def check_coradial(f: GraphMap, L) -> PropertyReport:
    L = as_rational(L)
    topo = topology(f)
    if not topo["branched_cover"]:
        raise NotBranchedCover("coradiality is defined for branched covers only")
    X, Y = f.source, f.target
    rep = PropertyReport(CORADIAL, L, True, topology=topo)
    low = f.min_speed()
    worst = Fraction(1)
    for x in centers(f):
        rx = stable_radius(f, x)
        cy = Y.critical_radii(f.evaluate(x))
        r0 = min([low * rx] + cy[:1])
        rep.r0[x] = r0
        r = r0 / 2
        U = u_component(f, x, r)
        bd = [X.distance(x, b) for b in U.boundary_points()]
        big, small = max(bd, default=Fraction(0)), min(bd, default=INF)
        worst = max(worst, _ratio_const(big, small, r))
        if rep.verdict and (big > L * r or small * L < r):
            rep.verdict = False
            rep.failed = "upper" if big > L * r else "lower"
            rep.witness = {"center": x, "radius": r, "L*(x,f,r)": big, "l*(x,f,r)": small}
    rep.minimal = worst
    return rep


_CHECKS = {
    BLD: check_bld,
    LQ: check_lq,
    RADIAL: check_radial,
    RADIAL_POINTWISE: check_radial_pointwise,
    CORADIAL: check_coradial,
    LIPSCHITZ: check_lipschitz,
}


def check(f: GraphMap, prop: str, L) -> PropertyReport:
    return _CHECKS[prop.upper()](f, L)


def min_constant(f: GraphMap, prop: str):
    """Least ``L >= 1`` passing the check; ``None`` when no finite constant exists.

    Raises :class:`NotBranchedCover` for BLD and CORADIAL on other maps.
    """
    prop = prop.upper()
    if prop == BLD:
        return min_bld_constant(f)
    if prop in (LQ, RADIAL, CORADIAL):
        return _CHECKS[prop](f, 1).minimal
    raise ValueError(f"no minimal constant for {prop}")


@dataclass
class Characterization:
    topology: dict
    constants: dict
    status: str  # "certified", "mismatch" or "not applicable"
    violated_hypotheses: list
    notes: list = field(default_factory=list)


def characterize(f: GraphMap) -> Characterization:
    """All topological checks and the four minimal constants side by side."""
    topo = topology(f)
    consts: dict = {}
    for prop in (BLD, LQ, RADIAL, CORADIAL):
        try:
            consts[prop] = min_constant(f, prop)
        except NotBranchedCover:
            consts[prop] = None
    violated = [k for k in ("discrete", "open") if not topo[k]]
    notes = []
    if topo["branched_cover"]:
        values = set(consts.values())
        status = "certified" if len(values) == 1 and None not in values else "mismatch"
    else:
        status = "not applicable"
        for prop in (LQ, RADIAL):
            if consts[prop] is not None:
                notes.append(f"{prop} holds with constant {consts[prop]} although the map is not a branched cover")
    return Characterization(topo, consts, status, violated, notes)
