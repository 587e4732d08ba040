from __future__ import annotations

import json
import random
from dataclasses import replace
from fractions import Fraction as F

import pytest

from bldmaps import fixtures
from bldmaps.cli import main, parse_point, write_fixtures
from bldmaps.convergence import PointedSpace, QuasiIsometryWitness, check_package_convergence, winding_demo
from bldmaps.graph import GraphPoint, Segment, Walk
from bldmaps.io import (
    FormatError,
    certificate_from_json,
    certificate_to_json,
    graph_from_json,
    graph_to_json,
    load_map,
    map_from_json,
    map_to_json,
    read_json,
    to_plain,
    walk_from_json,
    walk_to_json,
    witness_from_json,
    witness_to_json,
    write_json,
)

V = GraphPoint.at


def roundtrip(data):
    return json.loads(json.dumps(data))


# -- file formats -----------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(fixtures.corpus()))
def test_graph_and_map_roundtrip(name):
    f = fixtures.corpus()[name]
    G, base = graph_from_json(roundtrip(graph_to_json(f.source, f.source.vertex_point(f.source.vertices[0]))))
    assert G == f.source and base == f.source.vertex_point(f.source.vertices[0])
    assert map_from_json(roundtrip(map_to_json(f))) == f


def test_random_cover_roundtrip():
    rng = random.Random(4)
    for _ in range(20):
        f = fixtures.random_branched_cover(rng)
        assert map_from_json(roundtrip(map_to_json(f))) == f


def test_walk_roundtrip_keeps_partial_segments():
    G = fixtures.cycle(3)
    w = Walk(G, G.point("e0", F(1, 3)), (Segment("e0", F(1, 3), F(1)), Segment("e1", F(0), F(1, 2))))
    data = roundtrip(walk_to_json(w))
    assert walk_from_json(G, data) == w


def test_witness_roundtrip():
    S = PointedSpace(fixtures.cycle(3), V("v0"))
    w = QuasiIsometryWitness.from_function(S, S, lambda p: p, F(1, 2), F(1, 8))
    assert witness_from_json(roundtrip(witness_to_json(w))) == w


def test_certificate_roundtrip():
    cert = winding_demo(3, 4)
    back = certificate_from_json(roundtrip(certificate_to_json(cert)))
    assert back.radii == cert.radii and back.eps == cert.eps
    assert back.packages == cert.packages
    assert check_package_convergence(back).ok


def test_map_file_refs(tmp_path):
    write_fixtures(tmp_path)
    f = load_map(tmp_path / "w2.gm.json")
    assert f == fixtures.winding(2)
    assert isinstance(read_json(tmp_path / "w2.gm.json")["source"], str)


def test_bad_map_rejected():
    data = map_to_json(fixtures.winding(2))
    data["edge_map"]["e0"] = [{"edge": "nope", "dir": "+"}]
    with pytest.raises(Exception):
        map_from_json(data)
    with pytest.raises(FormatError):
        map_from_json({"vertex_map": {}})


def test_to_plain_rationals_and_infinity():
    assert to_plain({"a": F(1, 3), "b": float("inf"), "p": V("v0")}) == {"a": "1/3", "b": "inf", "p": {"vertex": "v0"}}


def test_parse_point_forms():
    G = fixtures.cycle(3)
    assert parse_point(G, "v1") == V("v1")
    assert parse_point(G, "e0@1/4") == G.point("e0", F(1, 4))
    assert parse_point(G, '{"edge": "e2", "offset": "1/2"}') == G.point("e2", F(1, 2))


# -- command line ------------------------------------------------------------------------------


@pytest.fixture()
def corpus_dir(tmp_path):
    write_fixtures(tmp_path)
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_check_exit_codes(corpus_dir, capsys):
    assert run(capsys, "check", "--map", corpus_dir / "w2.gm.json", "--property", "bld", "--L", "1")[0] == 0
    code, out = run(capsys, "check", "--map", corpus_dir / "fold.gm.json", "--property", "lq", "--L", "1")
    assert code == 1 and "witness" in out.out
    assert run(capsys, "check", "--map", corpus_dir / "const.gm.json", "--property", "coradial", "--L", "1")[0] == 2
    assert run(capsys, "check", "--map", corpus_dir / "speed2.gm.json", "--property", "bld", "--L", "2")[0] == 0


def test_check_report_and_oracle(corpus_dir, capsys, tmp_path):
    out = tmp_path / "r.json"
    argv = ("check", "--map", corpus_dir / "tent.gm.json", "--property", "radial", "--L", "1", "--oracle", "--out", out)
    assert run(capsys, *argv)[0] == 0
    rep = read_json(out)
    assert rep["command"] == "check" and rep["exit_code"] == 0 and rep["verdict"] is True
    assert rep["oracle"]["verdict"] is True and rep["oracle"]["walk_samples"]["ok"] is True
    assert "timing" in rep


def test_no_timing_is_deterministic(corpus_dir, capsys, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        run(capsys, "characterize", "--map", corpus_dir / "w3.gm.json", "--no-timing", "--out", out)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] and "timing" not in json.loads(outs[0])


def test_characterize_and_min_constant(corpus_dir, capsys, tmp_path):
    out = tmp_path / "c.json"
    assert run(capsys, "characterize", "--map", corpus_dir / "speed2.gm.json", "--out", out)[0] == 0
    assert set(read_json(out)["constants"].values()) == {"2"}
    code, cap = run(capsys, "min-constant", "--map", corpus_dir / "w2.gm.json", "--property", "coradial")
    assert code == 0 and "1" in cap.out


def test_lift_command(corpus_dir, capsys, tmp_path):
    f = fixtures.winding(2)
    beta = Walk(f.target, V("v0"), tuple(Segment(f"e{i}", F(0), F(1)) for i in range(3)))
    walk = tmp_path / "loop.walk.json"
    write_json(walk, walk_to_json(beta))
    lifted = tmp_path / "lift.walk.json"
    argv = ("lift", "--map", corpus_dir / "w2.gm.json", "--walk", walk, "--start", "v0", "--walk-out", lifted)
    assert run(capsys, *argv)[0] == 0
    w = walk_from_json(f.source, read_json(lifted))
    assert w.end == V("v3") and w.length == 3
    out = tmp_path / "all.json"
    assert run(capsys, "lift", "--map", corpus_dir / "w2.gm.json", "--walk", walk, "--all", "--out", out)[0] == 0
    assert len(read_json(out)["lifts"]) == 2


def test_transport_command(corpus_dir, capsys, tmp_path):
    out = tmp_path / "t.json"
    argv = ("transport", "--map", corpus_dir / "w2.gm.json", "--x", "v0", "--y", "v1", "--L", "1", "--out", out)
    assert run(capsys, *argv)[0] == 0
    assert len(read_json(out)["pairs"]) == 2
    assert run(capsys, "transport", "--map", corpus_dir / "tent.gm.json", "--x", "w", "--y", "u", "--L", "1")[0] == 2


def test_qi_commands(tmp_path, capsys):
    G = fixtures.cycle(3)
    write_json(tmp_path / "c3.mg.json", graph_to_json(G, V("v0")))
    wit = tmp_path / "w.qi.json"
    argv = ("qi-search", "--source", tmp_path / "c3.mg.json", "--target", tmp_path / "c3.mg.json",
            "--eps", "1/8", "--delta", "1/32", "--witness-out", wit)
    assert run(capsys, *argv)[0] == 0
    assert run(capsys, "qi-check", "--witness", wit, "--minimal")[0] == 0


def test_converge_and_corrupted_certificate(tmp_path, capsys):
    cert_path = tmp_path / "wind.cert.json"
    argv = ("winding-demo", "--k-max", "3", "--m", "4", "--cert-out", cert_path, "--harness", "lq")
    assert run(capsys, *argv)[0] == 0
    assert run(capsys, "converge", "--cert", cert_path)[0] == 0
    cert = certificate_from_json(read_json(cert_path))
    key = (2, cert.radii[0])
    bad = replace(cert, eps={**cert.eps, key: F(1, 100)}, g={**cert.g, key: cert.g[key].with_eps(F(1, 100))})
    write_json(cert_path, certificate_to_json(bad))
    assert run(capsys, "converge", "--cert", cert_path)[0] == 1


def test_usage_and_parse_errors(corpus_dir, tmp_path, capsys):
    assert run(capsys, "check", "--map", tmp_path / "missing.gm.json", "--property", "bld", "--L", "1")[0] == 64
    (tmp_path / "bad.gm.json").write_text("{not json")
    assert run(capsys, "check", "--map", tmp_path / "bad.gm.json", "--property", "bld", "--L", "1")[0] == 64
    with pytest.raises(SystemExit) as exc:
        main(["check", "--map", str(corpus_dir / "w2.gm.json"), "--property", "bld"])
    assert exc.value.code == 64


def test_budget_exceeded(capsys):
    assert run(capsys, "winding-demo", "--k-max", "10", "--budget-index", "5")[0] == 65


def test_fixtures_command(tmp_path, capsys):
    assert run(capsys, "fixtures", tmp_path / "fx")[0] == 0
    assert {p.name for p in (tmp_path / "fx").glob("*.gm.json")} == {f"{n.lower()}.gm.json" for n in fixtures.corpus()}
