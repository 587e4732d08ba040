from __future__ import annotations

import random
from fractions import Fraction as F

import pytest

from bldmaps import fixtures
from bldmaps.graph import GraphError, GraphPoint, Segment, Walk, PLUS, MINUS
from bldmaps.graph_map import (
    GraphMap,
    NotBranchedCover,
    branch_set,
    build_map,
    connected_preimage_check,
    fiber,
    image_region,
    is_branched_cover,
    is_discrete,
    is_normal_domain,
    is_normal_neighbourhood,
    is_open,
    max_multiplicity,
    max_normal_radius,
    multiplicity,
    preimage_region,
    u_component,
    vaisala_decomposition,
)
from bldmaps.region import Region, ball

V = GraphPoint.at


# -- construction and evaluation ------------------------------------------------------


def test_w2_builds_with_unit_speeds():
    f = fixtures.winding(2)
    assert set(f.speed.values()) == {1}
    assert f.evaluate(V("v4")) == V("v1")


def test_build_map_from_spec():
    X, Y = fixtures.cycle(6), fixtures.cycle(3)
    spec = {
        "vertex_map": {f"v{i}": f"v{i % 3}" for i in range(6)},
        "edge_map": {f"e{i}": [{"edge": f"e{i % 3}", "dir": "+"}] for i in range(6)},
    }
    assert build_map(X, Y, spec) == fixtures.winding(2)


def test_discontinuous_map_rejected():
    X, Y = fixtures.path(1), fixtures.path(2)
    with pytest.raises(GraphError):
        GraphMap.from_traversals(X, Y, {"v0": "v0", "v1": "v1"}, {"e1": [("e2", PLUS)]})


def test_unknown_ids_rejected():
    X = fixtures.path(1)
    with pytest.raises(GraphError):
        GraphMap.from_traversals(X, X, {"v0": "v0", "v1": "v1", "zz": "v0"}, {"e1": [("e1", PLUS)]})


def test_identity_speeds():
    f = fixtures.identity(fixtures.cycle(4))
    assert set(f.speed.values()) == {1}


def test_evaluate_examples():
    f = fixtures.speed2()
    assert f.evaluate(f.source.point("e", F(1, 2))) == V("m")
    assert f.evaluate(f.source.point("e", F(1, 4))) == f.target.point("e1", F(1, 2))
    assert f.evaluate(V("q")) == V("b")
    c = fixtures.const()
    assert c.evaluate(c.source.point("e1", F(1, 3))) == V("o")


def test_image_walk_examples():
    f = fixtures.winding(2)
    w = Walk(f.source, V("v1"), tuple(Segment(f"e{i}", F(0), F(1)) for i in (1, 2, 3)))
    assert f.image_walk(w).length == 3
    t = fixtures.tent()
    w = Walk(t.source, V("a"), (Segment("e1", F(0), F(1)), Segment("e2", F(0), F(1))))
    img = t.image_walk(w)
    assert img.start == V("u") and img.point_at(1) == V("w") and img.end == V("u") and img.length == 2
    p = t.source.point("e1", F(1, 3))
    assert t.image_walk(Walk(t.source, p)).length == 0


def test_image_walk_length_is_speed_weighted():
    rng = random.Random(7)
    for f in fixtures.corpus().values():
        for _ in range(20):
            w = fixtures.random_walk(rng, f.source)
            expected = sum((f.speed[e] * l for e, l in w.edge_lengths().items()), F(0))
            assert f.image_walk(w).length == expected


def test_image_walk_of_concatenation():
    rng = random.Random(3)
    f = fixtures.tent()
    for _ in range(20):
        a = fixtures.random_walk(rng, f.source)
        b = fixtures.random_walk(rng, f.source, start=a.end)
        lhs = f.image_walk(a.concat(b)).normalized()
        rhs = f.image_walk(a).concat(f.image_walk(b)).normalized()
        assert lhs.start == rhs.start and lhs.segments == rhs.segments


# -- topology ----------------------------------------------------------------------------


def test_discreteness():
    assert is_discrete(fixtures.winding(2))[0]
    ok, edge = is_discrete(fixtures.const())
    assert not ok and edge in fixtures.const().source.edge_ids
    assert is_discrete(fixtures.tent())[0]


def test_openness():
    ok, (p, d) = is_open(fixtures.fold())
    assert not ok and p == V("m")
    assert d == ("e2", PLUS)
    assert is_open(fixtures.tent())[0]
    assert is_open(fixtures.identity(fixtures.path(3)))[0]


def test_branched_cover_examples():
    assert is_branched_cover(fixtures.winding(2)) and is_branched_cover(fixtures.winding(3))
    assert not is_branched_cover(fixtures.fold())
    assert not is_branched_cover(fixtures.const())


def test_branch_set_examples():
    assert branch_set(fixtures.identity(fixtures.cycle(3))) == []
    assert branch_set(fixtures.tent()) == [V("m")]
    assert branch_set(fixtures.winding(3)) == []
    with pytest.raises(NotBranchedCover):
        branch_set(fixtures.fold())


def test_fibers_and_multiplicity():
    f = fixtures.winding(2)
    for y in (V("v0"), f.target.point("e1", F(1, 3))):
        assert len(fiber(f, y)) == 2
    t = fixtures.tent()
    assert multiplicity(t, t.target.point("f1", F(1, 2))) == 2
    assert multiplicity(t, V("w")) == 1
    assert max_multiplicity(t) == 2
    i = fixtures.identity(fixtures.cycle(3))
    assert max_multiplicity(i) == 1
    A = ball(t.source, V("a"), F(1, 2))
    assert multiplicity(t, t.target.point("f1", F(1, 4)), A) == 1


def test_winding_fiber_size_is_degree():
    for k in (1, 2, 3):
        f = fixtures.winding(k)
        for y in (V("v1"), f.target.point("e2", F(1, 2))):
            assert len(fiber(f, y)) == k


def test_fiber_over_collapsed_edge_is_a_region():
    fb = fiber(fixtures.const(), V("o"))
    assert not fb.discrete and fb.region == Region.whole(fixtures.const().source)


# -- preimages and components --------------------------------------------------------------


def test_preimage_examples():
    i = fixtures.identity(fixtures.path(2))
    B = ball(i.target, V("v1"), F(1, 3))
    assert preimage_region(i, B) == B
    s = fixtures.speed2()
    pre = preimage_region(s, ball(s.target, V("m"), F(1, 2)))
    assert pre == Region.from_interval(s.source, "e", F(1, 4), F(3, 4), closed=False)
    c = fixtures.const()
    assert preimage_region(c, Region.whole(c.target)) == Region.whole(c.source)


def test_image_region_of_ball():
    f = fixtures.winding(2)
    img = image_region(f, ball(f.source, V("v0"), F(1, 2)))
    assert img == ball(f.target, V("v0"), F(1, 2))


def test_u_component_examples():
    t = fixtures.tent()
    U = u_component(t, V("m"), F(1, 2))
    assert U == ball(t.source, V("m"), F(1, 2))
    i = fixtures.identity(fixtures.cycle(3))
    assert u_component(i, V("v1"), F(2, 3)) == ball(i.source, V("v1"), F(2, 3))
    w = fixtures.winding(2)
    U = u_component(w, V("v0"), F(1, 2))
    assert U == ball(w.source, V("v0"), F(1, 2))
    assert not U.contains(V("v3"))


def test_u_component_restricts():
    # U(x, f, r) = U(x, f, r0) ∩ f^-1 B(f(x), r) for r < r0
    for f, x in ((fixtures.tent(), V("m")), (fixtures.winding(2), V("v1")), (fixtures.speed2(), V("p"))):
        r0 = F(3, 4)
        for r in (F(1, 8), F(1, 3), F(1, 2)):
            lhs = u_component(f, x, r)
            rhs = u_component(f, x, r0) & f.preimage(ball(f.target, f.evaluate(x), r))
            assert lhs == rhs


def test_normal_neighbourhood_examples():
    t = fixtures.tent()
    U = u_component(t, V("m"), F(1, 2))
    assert is_normal_neighbourhood(t, U, V("m"))
    edge_of_u = Region.from_points(t.source, U.boundary_points())
    assert t.image(edge_of_u).points() == [t.target.point("f1", F(1, 2))]
    i = fixtures.identity(fixtures.cycle(3))
    B = ball(i.source, V("v0"), 1)
    assert is_normal_domain(i, B)
    w = fixtures.winding(2)
    X = Region.whole(w.source)
    assert is_normal_domain(w, X)
    assert not is_normal_neighbourhood(w, X, V("v0"))


def test_normal_domain_requires_open_connected():
    t = fixtures.tent()
    with pytest.raises(GraphError):
        is_normal_domain(t, ball(t.source, V("m"), F(1, 2), closed=True))


def test_max_normal_radius_examples():
    assert max_normal_radius(fixtures.identity(fixtures.cycle(3)), V("v0")) == F(3, 2)
    assert max_normal_radius(fixtures.winding(2), V("v0")) == F(3, 2)
    assert max_normal_radius(fixtures.tent(), V("m")) == 1
    with pytest.raises(NotBranchedCover):
        max_normal_radius(fixtures.fold(), V("m"))


def test_vaisala_decomposition_examples():
    w = fixtures.winding(2)
    dec = vaisala_decomposition(w, Region.whole(w.source), V("v0"), F(1, 2))
    assert dec.radius == F(3, 2)
    assert len(dec.pieces) == 2 and (dec.pieces[0] & dec.pieces[1]).is_empty()
    assert dec.pieces[0] | dec.pieces[1] == w.preimage(ball(w.target, V("v0"), F(1, 2)))

    i = fixtures.identity(fixtures.path(2))
    U = ball(i.source, V("v1"), 1)
    dec = vaisala_decomposition(i, U, V("v1"))
    assert len(dec.pieces) == 1 and dec.pieces[0] == U & i.preimage(ball(i.target, V("v1"), dec.witness_radius))

    t = fixtures.tent()
    y = t.target.point("f1", F(1, 2))
    dec = vaisala_decomposition(t, Region.whole(t.source), y)
    assert len(dec.pieces) == 2 and (dec.pieces[0] & dec.pieces[1]).is_empty()
    assert dec.pieces[0] | dec.pieces[1] == t.preimage(ball(t.target, y, dec.witness_radius))


def test_connected_preimage_examples():
    t = fixtures.tent()
    U = u_component(t, V("m"), F(1, 2))
    assert connected_preimage_check(t, V("m"), U, ball(t.target, V("w"), F(1, 4)))
    i = fixtures.identity(fixtures.cycle(3))
    U = u_component(i, V("v0"), 1)
    assert connected_preimage_check(i, V("v0"), U, ball(i.target, V("v0"), F(1, 2)))
    w = fixtures.winding(2)
    U = u_component(w, V("v0"), 1)
    assert connected_preimage_check(w, V("v0"), U, ball(w.target, V("v0"), F(3, 4)))


def test_connected_preimage_rejects_bad_w():
    t = fixtures.tent()
    U = u_component(t, V("m"), F(1, 2))
    with pytest.raises(GraphError):
        connected_preimage_check(t, V("m"), U, ball(t.target, V("w"), F(3, 4)))
