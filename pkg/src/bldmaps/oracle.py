"""Brute-force grid oracle for the exact checkers.

Both graphs are replaced by fine grids: the target grid has step ``h`` (at
most 1/64 of its shortest edge) and each source edge is cut so that grid
points land exactly on target grid points.  All distances come from
``scipy.sparse.csgraph.shortest_path`` in float64, which is exact for the
dyadic fixtures.  Nothing here reuses the exact geometry code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .graph import MetricGraph
from .graph_map import GraphMap

__all__ = ["Grid", "OracleReport", "oracle"]

TOL = 1e-9


def _frac_gcd(values) -> Fraction:
    def g(a: Fraction, b: Fraction) -> Fraction:
        den = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
        return Fraction(math.gcd(int(a * den), int(b * den)), den)

    return reduce(g, values)


class Grid:
    """Grid nodes of a metric graph: vertices plus equally spaced interior points per edge."""

    def __init__(self, G: MetricGraph, steps: dict):
        self.graph = G
        self.index: dict = {}
        for v in G.vertices:
            self.index[("v", v)] = len(self.index)
        self.steps = steps
        rows, cols, wts = [], [], []
        self.adj_pairs = []
        for eid in G.edge_ids:
            e = G.edge(eid)
            n = steps[eid]
            for k in range(1, n):
                self.index[("e", eid, k)] = len(self.index)
            for k in range(n):
                a, b = self.node(eid, k), self.node(eid, k + 1)
                w = float(e.length / n)
                rows += [a, b]
                cols += [b, a]
                wts += [w, w]
                self.adj_pairs.append((a, b, eid))
        size = len(self.index)
        # parallel edges collapse to the shortest in a sparse matrix, which is what we want
        mat = {}
        for r, c, w in zip(rows, cols, wts):
            if r != c:
                mat[(r, c)] = min(w, mat.get((r, c), math.inf))
        if mat:
            rr, cc = zip(*mat)
            m = csr_matrix((list(mat.values()), (rr, cc)), shape=(size, size))
            self.dist = shortest_path(m, method="D", directed=False)
        else:
            self.dist = np.zeros((size, size))
        self.neighbours = [set() for _ in range(size)]
        for a, b, _ in self.adj_pairs:
            if a != b:
                self.neighbours[a].add(b)
                self.neighbours[b].add(a)

    def node(self, eid: str, k: int) -> int:
        e = self.graph.edge(eid)
        if k == 0:
            return self.index[("v", e.u)]
        if k == self.steps[eid]:
            return self.index[("v", e.v)]
        return self.index[("e", eid, k)]

    def node_at(self, eid: str, offset: Fraction) -> int:
        k = offset * self.steps[eid] / self.graph.edge(eid).length
        if k.denominator != 1:
            raise ValueError("point is not on the grid")
        return self.node(eid, int(k))

    def __len__(self) -> int:
        return len(self.index)


@dataclass
class OracleReport:
    discrete: bool
    open: bool
    lipschitz: float
    colipschitz: float
    bld: float
    lq: float
    radial: float
    coradial: float
    edge_speeds: dict = field(default_factory=dict)

    @property
    def branched_cover(self) -> bool:
        return self.discrete and self.open

    def constant(self, prop: str):
        """Oracle estimate of the minimal constant, ``None`` when the check cannot pass."""
        prop = prop.upper()
        if prop in ("BLD", "CORADIAL") and not self.branched_cover:
            return None
        value = {"BLD": self.bld, "LQ": self.lq, "RADIAL": self.radial, "CORADIAL": self.coradial}[prop]
        return None if math.isinf(value) else value

    def image_length(self, walk) -> float:
        """Length of ``f`` composed with a source walk, from the grid speeds."""
        return sum(self.edge_speeds[s.edge] * float(s.length) for s in walk.segments)

    def passes(self, prop: str, L) -> bool:
        c = self.constant(prop)
        return c is not None and c <= float(L) + TOL


def _image_node(f: GraphMap, ygrid: Grid, eid: str, k: int, n: int) -> int:
    """Grid node of the image of the k-th of n grid points on a source edge."""
    w = f.edge_map[eid]
    s = w.length * Fraction(k, n)
    if not w.segments:
        p = w.start
        return ygrid.index[("v", p.vertex)] if p.vertex is not None else ygrid.node_at(p.edge, p.offset)
    for seg in w.segments:
        if s <= seg.length:
            off = seg.start + s if seg.end >= seg.start else seg.start - s
            return ygrid.node_at(seg.edge, off)
        s -= seg.length
    raise AssertionError("parameter past the end of the walk")


def oracle(f: GraphMap, fine: int = 64, max_nodes: int = 6000) -> OracleReport:
    """Grid estimates of the verdicts and minimal constants of ``f``.

    Raises ``ValueError`` when the aligned grids would exceed ``max_nodes``
    points; dense all-pairs distances grow quadratically.
    """
    X, Y = f.source, f.target
    lengths = [Y.edge(g).length for g in Y.edge_ids]
    walks = [f.edge_map[e].length for e in X.edge_ids if f.edge_map[e].length > 0]
    if lengths:
        h = min(_frac_gcd(lengths + walks), min(lengths)) / fine
        # walk pieces with partial segments also have to land on the grid
        extra = [seg.start for e in X.edge_ids for seg in f.edge_map[e].segments]
        extra += [p.offset for p in f.vertex_map.values() if p.vertex is None]
        if extra and any(x for x in extra):
            h = _frac_gcd([h] + [x for x in extra if x])
        # source grid steps h / speed must also be fine enough for the source
        min_x = min(X.edge(e).length for e in X.edge_ids)
        while any(f.speed[e] > 0 and h / f.speed[e] > min_x / fine for e in X.edge_ids):
            h /= 2
        ysteps = {g: int(Y.edge(g).length / h) for g in Y.edge_ids}
    else:
        h = None
        ysteps = {}
    xsteps = {}
    min_x = min((X.edge(e).length for e in X.edge_ids), default=Fraction(1))
    for eid in X.edge_ids:
        lam = f.edge_map[eid].length
        xsteps[eid] = int(lam / h) if lam > 0 else fine * max(1, math.ceil(X.edge(eid).length / min_x))
    if sum(ysteps.values()) + sum(xsteps.values()) > max_nodes:
        raise ValueError("grid too large for the brute-force oracle")
    ygrid = Grid(Y, ysteps)
    xgrid = Grid(X, xsteps)
    img = np.zeros(len(xgrid), dtype=int)
    for v in X.vertices:
        p = f.vertex_map[v]
        img[xgrid.index[("v", v)]] = ygrid.index[("v", p.vertex)] if p.vertex is not None else ygrid.node_at(p.edge, p.offset)
    for eid in X.edge_ids:
        n = xsteps[eid]
        for k in range(1, n):
            img[xgrid.index[("e", eid, k)]] = _image_node(f, ygrid, eid, k, n)
    DX, DY = xgrid.dist, ygrid.dist
    DYf = DY[np.ix_(img, img)]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(DX > 0, DYf / np.where(DX > 0, DX, 1), 0.0)
    lip = float(ratio.max()) if ratio.size else 0.0

    # fibers over target grid nodes, then sup of dist(x, fiber) / d(f x, y)
    colip = 0.0
    if len(ygrid) > 1:
        fibers = [np.flatnonzero(img == y) for y in range(len(ygrid))]
        for y, fb in enumerate(fibers):
            d = DY[img, y]
            if fb.size == 0:
                colip = math.inf
                break
            F = DX[:, fb].min(axis=1)
            mask = d > 0
            if mask.any():
                colip = max(colip, float((F[mask] / d[mask]).max()))

    adj = xgrid.adj_pairs
    step_ratios = []
    discrete = True
    edge_speeds: dict = {}
    for a, b, eid in adj:
        r = DY[img[a], img[b]] / DX[a, b]
        step_ratios.append(r)
        edge_speeds[eid] = max(edge_speeds.get(eid, 0.0), float(r))
        if img[a] == img[b]:
            discrete = False
    opened = True
    if len(ygrid) > 1:
        for x in range(len(xgrid)):
            reach = {img[n] for n in xgrid.neighbours[x]}
            if not ygrid.neighbours[img[x]] <= reach:
                opened = False
                break

    def spread(values):
        if not values:
            return 1.0
        lo, hi = min(values), max(values)
        return max(1.0, hi, math.inf if lo <= 0 else 1.0 / lo)

    # radial: ratio of image distance to source distance between grid neighbours
    radial = spread(step_ratios) if len(ygrid) > 1 else (1.0 if not adj else math.inf)
    bld = spread(step_ratios) if discrete and opened else math.inf
    lq = max(1.0, lip, colip)

    coradial = math.inf
    if discrete and opened and len(ygrid) > 1:
        coradial = 1.0
        vnodes = np.array([xgrid.index[("v", v)] for v in X.vertices])
        for x in range(len(xgrid)):
            # radius at most 4 target steps and no further than the image of the nearest other vertex
            others = vnodes[vnodes != x]
            r = 4 * float(h)
            if others.size:
                near = others[np.argmin(DX[x, others])]
                r = min(r, max(float(h), DY[img[x], img[near]]))
            inside = DY[img, img[x]] < r - TOL
            comp, stack = {x}, [x]
            while stack:
                a = stack.pop()
                for b in xgrid.neighbours[a]:
                    if b not in comp and inside[b]:
                        comp.add(b)
                        stack.append(b)
            edge_nodes = {b for a in comp for b in xgrid.neighbours[a] if b not in comp}
            ds = [DX[x, b] for b in edge_nodes]
            if ds:
                coradial = max(coradial, max(ds) / r, r / min(ds))
    values = (float(v) for v in (lip, colip, bld, lq, radial, coradial))
    return OracleReport(discrete, opened, *values, edge_speeds=edge_speeds)
