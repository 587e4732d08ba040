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
    characterize,
    check,
    check_bld,
    check_coradial,
    check_lipschitz,
    check_lq,
    check_lq_local,
    check_radial,
    check_radial_pointwise,
    local_indices,
    min_bld_constant,
    min_constant,
)
from bldmaps.graph import GraphPoint
from bldmaps.graph_map import NotBranchedCover
from bldmaps.region import ball

V = GraphPoint.at


def test_local_indices_examples():
    t = fixtures.tent()
    li = local_indices(t, V("m"), F(1, 2))
    assert (li.L, li.l, li.L_star, li.l_star) == (F(1, 2),) * 4
    i = fixtures.identity(fixtures.cycle(4))
    li = local_indices(i, V("v0"), F(3, 4))
    assert li.L == li.l == F(3, 4)
    s = fixtures.speed2()
    li = local_indices(s, V("p"), F(1, 4))
    assert li.L == li.l == F(1, 2)
    assert li.L_star == li.l_star == F(1, 8)


def test_local_indices_empty_sphere_convention():
    i = fixtures.identity(fixtures.path(1))
    li = local_indices(i, V("v0"), 5)
    assert li.L == 0 and li.l == float("inf")


def test_bld_examples():
    w = fixtures.winding(2)
    assert check_bld(w, 1).verdict and min_bld_constant(w) == 1
    s = fixtures.speed2()
    rep = check_bld(s, 1)
    assert not rep.verdict and rep.failed == "length distortion"
    assert min_bld_constant(s) == 2
    rep = check_bld(fixtures.fold(), 10)
    assert not rep.verdict and rep.failed == "open" and rep.witness["point"] == V("m")


def test_lipschitz_examples():
    assert check_lipschitz(fixtures.const(), 1).verdict
    assert check_lipschitz(fixtures.const(), 0).verdict
    s = fixtures.speed2()
    assert check_lipschitz(s, 2).verdict
    rep = check_lipschitz(s, F(3, 2))
    assert not rep.verdict
    p, q = rep.witness["points"]
    assert s.target.distance(s(p), s(q)) > F(3, 2) * s.source.distance(p, q)
    assert check_lipschitz(fixtures.identity(fixtures.cycle(3)), 1).verdict


def test_lq_examples():
    assert check_lq(fixtures.const(), 1).verdict
    assert check_lq(fixtures.winding(2), 1).verdict
    rep = check_lq(fixtures.fold(), 1)
    assert not rep.verdict and rep.failed == "left inclusion"
    # the reported witness really violates the inclusion
    f = fixtures.fold()
    x, r = rep.witness["center"], rep.witness["radius"]
    assert not ball(f.target, f(x), r).issubset(f.image(ball(f.source, x, r)))


def test_lq_local_examples():
    w = fixtures.winding(2)
    assert check_lq_local(w, 1).verdict and check_lq(w, 1).verdict
    rep = check_lq_local(fixtures.fold(), 1)
    assert not rep.verdict and rep.witness["center"] == V("m")
    i = fixtures.identity(fixtures.path(3))
    assert all(check_lq_local(i, L).verdict for L in (1, F(3, 2), 4))


def test_radial_examples():
    assert check_radial(fixtures.fold(), 1).verdict
    s = fixtures.speed2()
    assert check_radial(s, 2).verdict
    assert not check_radial(s, F(3, 2)).verdict
    assert not check_radial_pointwise(s, F(3, 2)).verdict
    assert check_radial(fixtures.identity(fixtures.cycle(3)), 1).verdict


def test_coradial_examples():
    assert check_coradial(fixtures.tent(), 1).verdict
    assert check_coradial(fixtures.speed2(), 2).verdict
    assert not check_coradial(fixtures.speed2(), F(3, 2)).verdict
    for k in (2, 3):
        assert check_coradial(fixtures.winding(k), 1).verdict
    with pytest.raises(NotBranchedCover):
        check_coradial(fixtures.const(), 1)


def test_min_constant_examples():
    for prop in (BLD, LQ, RADIAL, CORADIAL):
        assert min_constant(fixtures.winding(2), prop) == 1
        assert min_constant(fixtures.speed2(), prop) == 2
        assert min_constant(fixtures.identity(fixtures.cycle(3)), prop) == 1


def test_characterize_examples():
    ch = characterize(fixtures.winding(2))
    assert ch.status == "certified" and set(ch.constants.values()) == {1}
    ch = characterize(fixtures.fold())
    assert ch.status == "not applicable" and ch.violated_hypotheses == ["open"]
    assert ch.constants[RADIAL] == 1 and ch.constants[LQ] is None
    ch = characterize(fixtures.const())
    assert ch.violated_hypotheses == ["discrete"] and ch.constants[LQ] == 1


@pytest.mark.parametrize("name", ["id_I3", "W2", "TENT", "SPEED2", "FOLD", "CONST"])
@pytest.mark.parametrize("prop", ["BLD", "LQ", "RADIAL", "RADIAL_POINTWISE", "LIPSCHITZ"])
def test_monotone_in_L(corpus, name, prop):
    f = corpus[name]
    verdicts = [check(f, prop, L).verdict for L in (1, F(5, 4), 2, 3)]
    assert verdicts == sorted(verdicts)


def test_failed_verdict_has_witness(corpus):
    for f in corpus.values():
        for prop in ("BLD", "LQ", "RADIAL", "RADIAL_POINTWISE", "LIPSCHITZ"):
            rep = check(f, prop, 1)
            assert rep.verdict or rep.witness


def test_lq_matches_brute_force_on_random_balls():
    # independent check of the two inclusions at random centers and radii
    rng = random.Random(11)
    for name in ("W2", "TENT", "SPEED2", "FOLD"):
        f = fixtures.corpus()[name]
        L = check_lq(f, 1).minimal
        if L is None:
            continue
        for _ in range(30):
            x = fixtures.random_point(rng, f.source)
            r = F(rng.randint(1, 24), 8)
            img = f.image(ball(f.source, x, r))
            assert ball(f.target, f(x), r / L).issubset(img)
            assert img.issubset(ball(f.target, f(x), L * r, closed=True))
