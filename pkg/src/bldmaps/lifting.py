"""Path lifting through PL branched covers and fiber transport.

On a piecewise-linear branched cover a lift is built step by step: inside an
affine regime the local inverse is linear, and at a breakpoint the lift
continues along a source direction whose image is the direction the target
path leaves in.  Openness guarantees such a direction always exists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .graph import as_rational, GraphError, GraphPoint, Segment, Walk, geodesic, PLUS, MINUS
from .graph_map import GraphMap, NotBranchedCover, branch_set, fiber, is_branched_cover
from .region import Region
from .checkers import check_bld

__all__ = [
    "Lift",
    "FiberTransport",
    "LiftError",
    "total_lift",
    "all_maximal_lifts",
    "fiber_transport",
    "verify_lift",
]


class LiftError(GraphError):
    pass


@dataclass(frozen=True)
class Lift:
    base: Walk
    walk: Walk
    start: GraphPoint
    total: bool = True
    choices: tuple = ()  # (point, chosen direction, alternatives) at every branching

    @property
    def end(self) -> GraphPoint:
        return self.walk.end


def _flip(d):
    return (d[0], MINUS if d[1] == PLUS else PLUS)


def _candidates(f: GraphMap, p: GraphPoint, want, arrived):
    """Source directions at ``p`` mapping onto target direction ``want``, preferred first.

    Directions that do not turn back along the way the lift arrived come
    first, then ties are broken by ``(edge id, sign)``.
    """
    cands = [d for d, img, sp in f.direction_profile(p).entries if sp > 0 and img == want]
    return sorted(cands, key=lambda d: (d == arrived, d))


def _advance(f: GraphMap, p: GraphPoint, d, budget: Fraction):
    """Move from ``p`` along direction ``d`` until the next joint, edge end, or image length ``budget``."""
    X = f.source
    eid, sign = d
    sp = f.speed[eid]
    e = X.edge(eid)
    t, _ = X.step(p, d)
    cuts = [Fraction(0)] + f.joints(eid) + [e.length]
    if sign == PLUS:
        room = min(c for c in cuts if c > t) - t
    else:
        room = t - max(c for c in cuts if c < t)
    travel = min(room, budget / sp)
    end = t + travel if sign == PLUS else t - travel
    return Segment(eid, t, end), X.point(eid, end), travel * sp


def _stays_in(f: GraphMap, p, d, budget, region: Region) -> bool:
    piece, end, _ = _advance(f, p, d, budget)
    mid = f.source.point(piece.edge, (piece.start + piece.end) / 2)
    return region.contains(mid) and region.contains(end)


def _lift_steps(f: GraphMap, beta: Walk, x0: GraphPoint, within: Region | None, pick):
    """Shared driver: ``pick(point, candidates)`` returns the direction to take."""
    X = f.source
    segs: list[Segment] = []
    choices = []
    p, arrived = x0, None
    for seg in beta.normalized().segments:
        remaining = seg.length
        want = (seg.edge, seg.direction)
        while remaining > 0:
            cands = _candidates(f, p, want, arrived)
            if within is not None:
                cands = [d for d in cands if _stays_in(f, p, d, remaining, within)]
            if not cands:
                raise LiftError(f"no lift of direction {want} at {p!r}")
            d = pick(p, cands)
            if len(cands) > 1:
                choices.append((p, d, tuple(cands)))
            piece, p, used = _advance(f, p, d, remaining)
            segs.append(piece)
            arrived = _flip(d)
            remaining -= used
    return Walk(X, x0, tuple(segs)).normalized(), tuple(choices)


def _require(f: GraphMap, beta: Walk, x0: GraphPoint):
    if not is_branched_cover(f):
        raise NotBranchedCover("lifting needs a branched cover")
    f.source.check_point(x0)
    if f.evaluate(x0) != beta.start:
        raise LiftError(f"f({x0!r}) = {f.evaluate(x0)!r} is not the start {beta.start!r} of the path")


def total_lift(f: GraphMap, beta: Walk, x0: GraphPoint, within: Region | None = None) -> Lift:
    """Deterministic total lift of ``beta`` starting at ``x0``.

    With ``within`` the lift is confined to that region and fails if it
    would have to leave it.
    """
    _require(f, beta, x0)
    walk, choices = _lift_steps(f, beta, x0, within, lambda p, cands: cands[0])
    return Lift(beta, walk, x0, True, choices)


def all_maximal_lifts(
    f: GraphMap,
    beta: Walk,
    starts: Iterable[GraphPoint] | None = None,
    enumerate_all: bool = False,
    budget: int = 10_000,
) -> list[Lift]:
    """Lifts of ``beta`` from every point of the starting fiber.

    By default one deterministic lift per starting point; with
    ``enumerate_all`` every distinct total lift obtainable by branching at
    breakpoints (at most ``budget`` of them).
    """
    if starts is None:
        fb = fiber(f, beta.start)
        if not fb.discrete:
            raise NotBranchedCover("starting fiber is not discrete")
        starts = fb.points
    out: list[Lift] = []
    for x0 in starts:
        _require(f, beta, x0)
        if not enumerate_all:
            out.append(total_lift(f, beta, x0))
            continue
        found: dict = {}
        stack = [()]
        while stack:
            plan = stack.pop()
            branched = []

            def pick(p, cands, plan=plan, branched=branched):
                k = len(branched)
                branched.append(cands)
                return cands[plan[k]] if k < len(plan) else cands[0]

            walk, choices = _lift_steps(f, beta, x0, None, pick)
            key = (walk.start, walk.segments)
            if key not in found:
                found[key] = Lift(beta, walk, x0, True, choices)
                if len(found) > budget:
                    raise LiftError("lift enumeration budget exceeded")
            for k in range(len(plan), len(branched)):
                prefix = plan + (0,) * (k - len(plan))
                stack.extend(prefix + (alt,) for alt in range(1, len(branched[k])))
        out.extend(found[k] for k in sorted(found, key=lambda k: repr(k)))
    return out


def verify_lift(f: GraphMap, alpha: Walk, beta: Walk) -> bool:
    """``f ∘ alpha`` equals ``beta`` and the lengths agree through the edge speeds."""
    img = f.image_walk(alpha)
    target = beta.normalized()
    if img.start != target.start or img.segments != target.segments:
        return False
    return sum((f.speed[s.edge] * s.length for s in alpha.segments), Fraction(0)) == beta.length


@dataclass(frozen=True)
class FiberTransport:
    x: GraphPoint
    y: GraphPoint
    bound: Fraction
    pairs: tuple  # (a, psi(a), d(a, psi(a)))
    bijective: bool
    within_bound: bool


def _match(options: dict) -> dict | None:
    """Perfect matching by augmenting paths; ``options`` maps each left point to its reachable ends."""
    owner: dict = {}

    def augment(a, seen):
        for b in options[a]:
            if b in seen:
                continue
            seen.add(b)
            if b not in owner or augment(owner[b], seen):
                owner[b] = a
                return True
        return False

    for a in options:
        if not augment(a, set()):
            return None
    return {a: b for b, a in owner.items()}


def fiber_transport(f: GraphMap, x: GraphPoint, y: GraphPoint, L) -> FiberTransport:
    """Bijection between the fibers over ``x`` and ``y`` moving points at most ``L d(x, y)``."""
    L = as_rational(L)
    if not check_bld(f, L).verdict:
        raise LiftError(f"map is not {L}-BLD")
    Y, X = f.target, f.source
    branch_images = {f.evaluate(b) for b in branch_set(f)}
    for q in (x, y):
        if q in branch_images:
            raise LiftError(f"{q!r} is the image of a branch point")
    beta = geodesic(Y, x, y)
    fx, fy = fiber(f, x).points, fiber(f, y).points
    ends = {a: total_lift(f, beta, a).end for a in fx}
    if len(set(ends.values())) != len(fx):
        options = {a: sorted({l.end for l in all_maximal_lifts(f, beta, [a], enumerate_all=True)}) for a in fx}
        ends = _match(options) or ends
    bijective = len(set(ends.values())) == len(fx) == len(fy) and set(ends.values()) == set(fy)
    bound = L * Y.distance(x, y)
    pairs = tuple((a, ends[a], X.distance(a, ends[a])) for a in fx)
    return FiberTransport(x, y, bound, pairs, bijective, all(d <= bound for _, _, d in pairs))
