"""Acceptance suite: one test group per criterion.

Each test carries a ``criterion`` marker; conftest prints a PASS/FAIL line per
criterion at the end of the run.  All comparisons against the library are
exact rational ones; only the grid oracle (criterion 9) works in floats.
"""
from __future__ import annotations

import random
from fractions import Fraction as F

import pytest

from bldmaps import fixtures
from bldmaps.checkers import (
    BLD,
    CORADIAL,
    LQ,
    RADIAL,
    check_bld,
    check_lq,
    check_lq_local,
    check_radial,
    check_radial_pointwise,
    min_bld_constant,
    min_constant,
)
from bldmaps.convergence import (
    MappingPackage,
    bld_limit_harness,
    check_package_convergence,
    constant_certificate,
    winding_demo,
)
from bldmaps.graph import GraphPoint, Segment, Walk
from bldmaps.graph_map import (
    branch_set,
    connected_preimage_check,
    fiber,
    is_discrete,
    is_open,
    max_normal_radius,
    u_component,
    vaisala_decomposition,
)
from bldmaps.lifting import all_maximal_lifts, fiber_transport, total_lift, verify_lift
from bldmaps.oracle import oracle
from bldmaps.region import Region, ball

V = GraphPoint.at
SEED = 20240611
PROPS = (BLD, LQ, RADIAL, CORADIAL)
L_GRID = (F(1), F(9, 8), F(3, 2), F(2), F(3))

CORPUS = fixtures.corpus()
COVERS = fixtures.cover_corpus()


def _random_covers(n=50):
    rng = random.Random(SEED)
    return [fixtures.random_branched_cover(rng) for _ in range(n)]


RANDOM_COVERS = _random_covers()


def _lq_local_levels(f):
    return [L for L in L_GRID if check_lq_local(f, L).verdict]


def _radial_levels(f):
    return [L for L in L_GRID if check_radial(f, L).verdict]


# -- 1 ---------------------------------------------------------------------------------------

C1 = (1, "four minimal constants agree on fixture covers and 50 random covers")


@pytest.mark.criterion(*C1)
@pytest.mark.parametrize("name", sorted(COVERS))
def test_c1_fixture_constants_agree(name):
    f = COVERS[name]
    values = {p: min_constant(f, p) for p in PROPS}
    assert len(set(values.values())) == 1, values
    assert all(isinstance(v, (int, F)) for v in values.values())


@pytest.mark.criterion(*C1)
@pytest.mark.parametrize("index", range(len(RANDOM_COVERS)))
def test_c1_random_constants_agree(index):
    f = RANDOM_COVERS[index]
    assert len(f.source.vertices) <= 8
    values = {p: min_constant(f, p) for p in PROPS}
    assert len(set(values.values())) == 1, values


# -- 2 ---------------------------------------------------------------------------------------

C2 = (2, "FOLD and CONST show the open and discrete hypotheses are needed")


@pytest.mark.criterion(*C2)
def test_c2_fold():
    f = CORPUS["FOLD"]
    assert check_radial(f, 1).verdict
    assert not is_open(f)[0]
    assert not check_bld(f, 1).verdict and not check_bld(f, 100).verdict


@pytest.mark.criterion(*C2)
def test_c2_const():
    f = CORPUS["CONST"]
    assert check_lq(f, 1).verdict
    assert not is_discrete(f)[0]
    assert not check_bld(f, 1).verdict and not check_bld(f, 100).verdict


# -- 3 ---------------------------------------------------------------------------------------

C3 = (3, "local LQ at L implies global LQ at L")


@pytest.mark.criterion(*C3)
@pytest.mark.parametrize("name", sorted(CORPUS))
def test_c3_local_lq_implies_lq(name):
    f = CORPUS[name]
    levels = _lq_local_levels(f)
    minimal = check_lq_local(f, 1).minimal
    if minimal is not None:
        levels.append(minimal)
    for L in levels:
        assert check_lq(f, L).verdict, L


@pytest.mark.criterion(*C3)
def test_c3_exercised():
    # the implication is not vacuous on the corpus
    assert sum(bool(_lq_local_levels(f)) for f in CORPUS.values()) >= 6


# -- 4 ---------------------------------------------------------------------------------------

C4 = (4, "radial and pointwise radial agree over the L grid")


@pytest.mark.criterion(*C4)
@pytest.mark.parametrize("name", sorted(CORPUS))
def test_c4_radial_forms_agree(name):
    f = CORPUS[name]
    for L in L_GRID:
        assert check_radial(f, L).verdict == check_radial_pointwise(f, L).verdict, L


# -- 5 ---------------------------------------------------------------------------------------

C5 = (5, "radial maps bound walk lengths by L in both directions")
RADIAL_MAPS = sorted(name for name, f in CORPUS.items() if _radial_levels(f))


@pytest.mark.criterion(*C5)
@pytest.mark.parametrize("name", RADIAL_MAPS)
def test_c5_walk_length_bounds(name):
    f = CORPUS[name]
    levels = _radial_levels(f)
    rng = random.Random(SEED + 5)
    walks = [fixtures.random_walk(rng, f.source) for _ in range(100)]
    for L in levels:
        for w in walks:
            image = f.image_walk(w).length
            assert w.length / L <= image <= L * w.length


@pytest.mark.criterion(*C5)
def test_c5_const_is_not_radial():
    # the point target has empty spheres, so CONST escapes the statement
    f = CORPUS["CONST"]
    assert not check_radial(f, 1).verdict and not check_radial(f, 3).verdict
    assert set(CORPUS) - set(RADIAL_MAPS) == {"CONST"}


# -- 6 ---------------------------------------------------------------------------------------

C6 = (6, "random walks lift totally with BLD length bounds; W_k loops have k lifts")


@pytest.mark.criterion(*C6)
@pytest.mark.parametrize("name", sorted(COVERS))
def test_c6_random_walks_lift(name):
    f = COVERS[name]
    L = min_bld_constant(f)
    rng = random.Random(SEED + 6)
    for _ in range(100):
        beta = fixtures.random_walk(rng, f.target)
        starts = fiber(f, beta.start).points
        x0 = starts[rng.randrange(len(starts))]
        lift = total_lift(f, beta, x0)
        assert lift.total and lift.start == x0
        assert verify_lift(f, lift.walk, beta)
        assert beta.length / L <= lift.walk.length <= L * beta.length


@pytest.mark.criterion(*C6)
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_c6_winding_loop_lifts(k):
    f = fixtures.winding(k)
    Y = f.target
    beta = Walk(Y, V("v0"), tuple(Segment(e, F(0), Y.edge(e).length) for e in ("e0", "e1", "e2")))
    lifts = all_maximal_lifts(f, beta)
    assert len(lifts) == k
    assert len({l.walk.segments for l in lifts}) == k
    assert sorted(l.start for l in lifts) == sorted(fiber(f, V("v0")).points)
    assert all(verify_lift(f, l.walk, beta) for l in lifts)


# -- 7 ---------------------------------------------------------------------------------------

C7 = (7, "fiber transport is a bijection moving points at most L d(x, y)")


@pytest.mark.criterion(*C7)
@pytest.mark.parametrize("name", ["W2", "W3", "TENT"])
def test_c7_fiber_transport(name):
    f = CORPUS[name]
    L = min_bld_constant(f)
    branch_images = {f(b) for b in branch_set(f)}
    rng = random.Random(SEED + 7)
    done = 0
    while done < 30:
        x, y = fixtures.random_point(rng, f.target), fixtures.random_point(rng, f.target)
        if x in branch_images or y in branch_images:
            continue
        t = fiber_transport(f, x, y, L)
        assert t.bijective and t.within_bound
        fx, fy = fiber(f, x).points, fiber(f, y).points
        assert sorted(a for a, _, _ in t.pairs) == sorted(fx)
        assert sorted(b for _, b, _ in t.pairs) == sorted(fy)
        bound = L * f.target.distance(x, y)
        for a, b, d in t.pairs:
            assert d == f.source.distance(a, b) <= bound
        done += 1


# -- 8 ---------------------------------------------------------------------------------------

C8 = (8, "winding sequence converges to CONST; harness flags the BLD limit")


@pytest.fixture(scope="module")
def winding_cert():
    return winding_demo(10, 4)


@pytest.mark.criterion(*C8)
def test_c8_winding_demo_converges(winding_cert):
    cert = winding_cert
    assert sorted(cert.packages) == list(range(1, 11))
    assert check_package_convergence(cert).ok
    for (i, r), eps in cert.eps.items():
        assert eps <= F(1, i)


@pytest.mark.criterion(*C8)
def test_c8_every_term_is_1_bld(winding_cert):
    assert all(check_bld(p.map, 1).verdict for p in winding_cert.packages.values())


@pytest.mark.criterion(*C8)
def test_c8_limit_is_const(winding_cert):
    limit = winding_cert.limit.map
    assert len(limit.target.vertices) == 1 and not limit.target.edge_ids
    assert check_lq(limit, 1).verdict
    assert not is_discrete(limit)[0]
    h = bld_limit_harness(winding_cert, 1)
    assert not h.applicable and "discreteness" in h.message


@pytest.mark.criterion(*C8)
def test_c8_constant_w2_sequence_has_bld_limit():
    pkg = MappingPackage.of(fixtures.winding(2), V("v0"))
    cert = constant_certificate(pkg, range(1, 6), [F(1, 2), 1, 2])
    assert check_package_convergence(cert).ok
    h = bld_limit_harness(cert, 1)
    assert h.applicable and h.verdict


# -- 9 ---------------------------------------------------------------------------------------

C9 = (9, "exact verdicts match the dyadic grid oracle on the corpus")
TOL = 1e-9


@pytest.fixture(scope="module")
def oracles():
    return {name: oracle(f) for name, f in CORPUS.items()}


def _float(v):
    return None if v is None else float(v)


def _exact_constant(f, prop):
    if prop in (BLD, CORADIAL) and not (is_open(f)[0] and is_discrete(f)[0]):
        return None
    return _float(min_constant(f, prop))


@pytest.mark.criterion(*C9)
@pytest.mark.parametrize("name", sorted(CORPUS))
def test_c9_constants_and_topology(name, oracles):
    f, o = CORPUS[name], oracles[name]
    assert o.open == is_open(f)[0]
    assert o.discrete == is_discrete(f)[0]
    for prop in PROPS:
        exact, approx = _exact_constant(f, prop), o.constant(prop)
        if exact is None:
            assert approx is None, prop
        else:
            assert approx == pytest.approx(exact, abs=TOL), prop


@pytest.mark.criterion(*C9)
@pytest.mark.parametrize("name", sorted(CORPUS))
def test_c9_verdicts_on_grid(name, oracles):
    f, o = CORPUS[name], oracles[name]
    for L in L_GRID:
        assert check_lq(f, L).verdict == o.passes(LQ, L), ("LQ", L)
        assert check_radial(f, L).verdict == o.passes(RADIAL, L), ("RADIAL", L)
        assert check_radial_pointwise(f, L).verdict == o.passes(RADIAL, L), ("RADIAL_POINTWISE", L)
        assert check_bld(f, L).verdict == o.passes(BLD, L), ("BLD", L)
        if check_lq_local(f, L).verdict:
            assert o.passes(LQ, L)


@pytest.mark.criterion(*C9)
@pytest.mark.parametrize("name", sorted(CORPUS))
def test_c9_walk_lengths(name, oracles):
    f, o = CORPUS[name], oracles[name]
    rng = random.Random(SEED + 9)
    for _ in range(100):
        w = fixtures.random_walk(rng, f.source)
        assert o.image_length(w) == pytest.approx(float(f.image_walk(w).length), abs=TOL)


# -- 10 --------------------------------------------------------------------------------------

C10 = (10, "normal radii, Vaisala decomposition and connected preimages")


@pytest.mark.criterion(*C10)
def test_c10_max_normal_radius_values():
    # frozen from the grid oracle run recorded in the decisions ledger
    assert max_normal_radius(fixtures.identity(fixtures.cycle(3)), V("v0")) == F(3, 2)
    assert max_normal_radius(fixtures.winding(2), V("v0")) == F(3, 2)
    assert max_normal_radius(fixtures.tent(), V("m")) == 1


@pytest.mark.criterion(*C10)
@pytest.mark.parametrize("name", sorted(COVERS))
def test_c10_vaisala_exact(name):
    f = COVERS[name]
    rng = random.Random(SEED + 10)
    X = Region.whole(f.source)
    for _ in range(5):
        y = fixtures.random_point(rng, f.target)
        dec = vaisala_decomposition(f, X, y)
        pieces = dec.pieces
        assert sorted(dec.centers) == sorted(fiber(f, y).points)
        union = Region.empty(f.source)
        for i, P in enumerate(pieces):
            union = union | P
            for Q in pieces[i + 1:]:
                assert (P & Q).is_empty()
        assert union == f.preimage(ball(f.target, y, dec.witness_radius))


@pytest.mark.criterion(*C10)
def test_c10_connected_preimage_random_triples():
    rng = random.Random(SEED + 11)
    maps = list(COVERS.values())
    checked = 0
    while checked < 50:
        f = maps[rng.randrange(len(maps))]
        x = fixtures.random_point(rng, f.source)
        R = max_normal_radius(f, x)
        r = R * F(rng.randint(1, 7), 8)
        U = u_component(f, x, r)
        fx = f(x)
        z = fixtures.random_point(rng, f.target)
        s = F(rng.randint(1, 16), 8)
        parts = [c for c in (ball(f.target, z, s) & ball(f.target, fx, r)).components() if c.contains(fx)]
        if not parts:
            continue
        assert connected_preimage_check(f, x, U, parts[0])
        checked += 1
