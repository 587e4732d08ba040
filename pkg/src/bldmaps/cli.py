"""Batch command line front-end.

Every subcommand loads files, runs one computation, prints a short summary
and optionally writes a JSON report with ``--out``.

Exit codes: 0 pass, 1 fail (with witness), 2 precondition or topology
failure, 64 unreadable input or bad arguments, 65 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import fixtures
from .checkers import (
    BLD,
    CORADIAL,
    LQ,
    RADIAL,
    RADIAL_POINTWISE,
    LIPSCHITZ,
    characterize,
    check,
    min_constant,
)
from .convergence import (
    BudgetExceeded,
    NetTooCoarse,
    PointedSpace,
    ScheduleIncomplete,
    bld_limit_harness,
    check_package_convergence,
    check_quasi_isometry,
    lq_limit_harness,
    min_qi_epsilon,
    search_quasi_isometry,
    winding_demo,
)
from .graph import GraphError, as_rational, format_rational
from .graph_map import NotBranchedCover, GraphMap
from .io import (
    FormatError,
    certificate_to_json,
    graph_to_json,
    load_certificate,
    load_graph,
    load_map,
    load_walk,
    load_witness,
    map_to_json,
    point_from_json,
    to_plain,
    walk_to_json,
    witness_to_json,
    write_json,
)
from .lifting import LiftError, all_maximal_lifts, fiber_transport, total_lift, verify_lift

EXIT_PASS, EXIT_FAIL, EXIT_PRECONDITION, EXIT_PARSE, EXIT_BUDGET = 0, 1, 2, 64, 65

PROPERTIES = {
    "bld": BLD,
    "lq": LQ,
    "radial": RADIAL,
    "radial-pointwise": RADIAL_POINTWISE,
    "coradial": CORADIAL,
    "lipschitz": LIPSCHITZ,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def conv(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return value

    return conv


def _rational(text) -> Fraction:
    try:
        return as_rational(text)
    except (GraphError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def parse_point(G, text: str):
    """Point from the command line: a vertex name, ``edge@offset`` or a JSON point object."""
    text = text.strip()
    if text.startswith("{"):
        return point_from_json(G, json.loads(text))
    if "@" in text:
        eid, off = text.split("@", 1)
        return G.point(eid, as_rational(off))
    return G.vertex_point(text)


# -- reports --------------------------------------------------------------------


class Run:
    """Collects the report of one command and writes it at the end."""

    def __init__(self, args):
        self.args = args
        self.start = time.perf_counter()

    def finish(self, command: str, code: int, body: dict) -> int:
        report = {"command": command, "exit_code": code, "version": __version__}
        report.update(to_plain(body))
        if not self.args.no_timing:
            report["timing"] = round(time.perf_counter() - self.start, 6)
        if self.args.out:
            write_json(self.args.out, report)
        return code


def _say(*parts):
    print(*parts)


def _grid_oracle(args, f: GraphMap, prop: str, L):
    from .oracle import oracle

    try:
        o = oracle(f, fine=args.budget_grid)
    except ValueError as exc:
        return {"skipped": str(exc)}
    base = RADIAL if prop == RADIAL_POINTWISE else prop
    if base in (BLD, LQ, RADIAL, CORADIAL):
        return {"verdict": o.passes(base, L), "constant": o.constant(base)}
    return {"lipschitz": o.lipschitz}


def _walk_samples(args, f: GraphMap, L):
    """Length distortion of random walks, both directions bounded by ``L``."""
    rng = random.Random(args.seed)
    for _ in range(args.budget_walks):
        w = fixtures.random_walk(rng, f.source)
        img = f.image_walk(w).length
        if not (w.length <= L * img and img <= L * w.length):
            return {"walks": args.budget_walks, "ok": False, "walk": walk_to_json(w), "image_length": img}
    return {"walks": args.budget_walks, "ok": True}


# -- subcommands --------------------------------------------------------------------


def cmd_check(args, run: Run) -> int:
    f = load_map(args.map)
    prop = PROPERTIES[args.property]
    body = {"map": str(args.map)}
    try:
        rep = check(f, prop, args.L)
    except NotBranchedCover as exc:
        _say(f"{prop}: precondition failed: {exc}")
        body.update(property=prop, verdict=None, error=str(exc))
        return run.finish("check", EXIT_PRECONDITION, body)
    code = EXIT_PASS if rep.verdict else EXIT_FAIL
    if not rep.verdict and rep.failed in ("discrete", "open"):
        code = EXIT_PRECONDITION
    body.update(
        property=rep.prop,
        constant=rep.constant,
        verdict=rep.verdict,
        minimal=rep.minimal,
        failed=rep.failed,
        witness=rep.witness,
        topology=rep.topology,
    )
    if args.oracle:
        body["oracle"] = _grid_oracle(args, f, prop, args.L)
        if prop in (BLD, RADIAL) and rep.verdict:
            body["oracle"]["walk_samples"] = _walk_samples(args, f, args.L)
    _say(f"{prop} with L = {format_rational(args.L)}: {'pass' if rep.verdict else 'fail'}")
    if rep.witness:
        _say("witness:", json.dumps(to_plain(rep.witness)))
    return run.finish("check", code, body)


def cmd_characterize(args, run: Run) -> int:
    f = load_map(args.map)
    ch = characterize(f)
    names = (BLD, LQ, RADIAL, CORADIAL)
    _say("  ".join(f"{n:>9}" for n in names))
    _say("  ".join(f"{'-' if ch.constants[n] is None else format_rational(ch.constants[n]):>9}" for n in names))
    _say(f"status: {ch.status}")
    for note in ch.notes:
        _say(f"note: {note}")
    code = {"certified": EXIT_PASS, "mismatch": EXIT_FAIL}.get(ch.status, EXIT_PRECONDITION)
    body = {
        "map": str(args.map),
        "topology": ch.topology,
        "constants": ch.constants,
        "status": ch.status,
        "violated_hypotheses": ch.violated_hypotheses,
        "notes": ch.notes,
    }
    if args.oracle:
        from .oracle import oracle

        try:
            o = oracle(f, fine=args.budget_grid)
            body["oracle"] = {n: o.constant(n) for n in names}
        except ValueError as exc:
            body["oracle"] = {"skipped": str(exc)}
    return run.finish("characterize", code, body)


def cmd_min_constant(args, run: Run) -> int:
    f = load_map(args.map)
    prop = PROPERTIES[args.property]
    try:
        value = min_constant(f, prop)
    except NotBranchedCover as exc:
        _say(f"{prop}: precondition failed: {exc}")
        return run.finish("min-constant", EXIT_PRECONDITION, {"property": prop, "minimal": None, "error": str(exc)})
    except ValueError as exc:
        raise UsageError(str(exc))
    _say(f"{prop}: {'none' if value is None else format_rational(value)}")
    return run.finish("min-constant", EXIT_PASS if value is not None else EXIT_FAIL, {"property": prop, "minimal": value})


def cmd_lift(args, run: Run) -> int:
    f = load_map(args.map)
    beta = load_walk(args.walk, f.target)
    try:
        if args.all:
            starts = None if args.start is None else [parse_point(f.source, args.start)]
            lifts = all_maximal_lifts(f, beta, starts, enumerate_all=True, budget=args.budget_lifts)
        else:
            if args.start is None:
                raise UsageError("--start is required unless --all is given")
            lifts = [total_lift(f, beta, parse_point(f.source, args.start))]
    except NotBranchedCover as exc:
        _say(f"precondition failed: {exc}")
        return run.finish("lift", EXIT_PRECONDITION, {"error": str(exc)})
    except LiftError as exc:
        if "budget" in str(exc):
            raise BudgetExceeded(str(exc))
        _say(f"lift failed: {exc}")
        return run.finish("lift", EXIT_FAIL, {"error": str(exc)})
    ok = all(verify_lift(f, l.walk, beta) for l in lifts)
    for l in lifts:
        _say(f"{l.start!r} -> {l.end!r}  length {format_rational(l.walk.length)}")
    if args.walk_out:
        data = walk_to_json(lifts[0].walk) if len(lifts) == 1 and not args.all else [walk_to_json(l.walk) for l in lifts]
        write_json(args.walk_out, data)
    body = {"lifts": [{"start": l.start, "end": l.end, "walk": walk_to_json(l.walk)} for l in lifts], "verified": ok}
    return run.finish("lift", EXIT_PASS if ok else EXIT_FAIL, body)


def cmd_transport(args, run: Run) -> int:
    f = load_map(args.map)
    x, y = parse_point(f.target, args.x), parse_point(f.target, args.y)
    try:
        t = fiber_transport(f, x, y, args.L)
    except (LiftError, NotBranchedCover) as exc:
        _say(f"precondition failed: {exc}")
        return run.finish("transport", EXIT_PRECONDITION, {"error": str(exc)})
    for a, b, d in t.pairs:
        _say(f"{a!r} -> {b!r}  d = {format_rational(d)}")
    _say(f"bound {format_rational(t.bound)}; bijective: {t.bijective}; within bound: {t.within_bound}")
    body = {
        "x": t.x,
        "y": t.y,
        "L": args.L,
        "bound": t.bound,
        "pairs": [{"from": a, "to": b, "distance": d} for a, b, d in t.pairs],
        "bijective": t.bijective,
        "within_bound": t.within_bound,
    }
    return run.finish("transport", EXIT_PASS if t.bijective and t.within_bound else EXIT_FAIL, body)


def _net_budget(args, *witnesses):
    size = sum(len(w.table) for w in witnesses)
    if size > args.budget_net:
        raise BudgetExceeded(f"net size {size} exceeds --budget-net {args.budget_net}")


def cmd_qi_check(args, run: Run) -> int:
    w = load_witness(args.witness)
    if args.eps is not None:
        w = w.with_eps(args.eps)
    _net_budget(args, w)
    try:
        res = check_quasi_isometry(w)
    except NetTooCoarse as exc:
        _say(f"precondition failed: {exc}")
        return run.finish("qi-check", EXIT_PRECONDITION, {"error": str(exc)})
    body = {"eps": w.eps, "ok": res.ok, "condition": res.condition, "witness": res.witness, "distortion": res.distortion}
    if args.minimal:
        value, attained = min_qi_epsilon(w)
        body["minimal_eps"] = {"value": value, "attained": attained}
        _say(f"least eps: {format_rational(value)} ({'attained' if attained else 'infimum'})")
    _say(f"{format_rational(w.eps)}-quasi-isometry: {'pass' if res.ok else 'fail'}")
    if not res.ok:
        _say(f"condition {res.condition} fails:", json.dumps(to_plain(res.witness)))
    return run.finish("qi-check", EXIT_PASS if res.ok else EXIT_FAIL, body)


def _pointed(path, base_arg):
    G, base = load_graph(path)
    if base_arg is not None:
        base = parse_point(G, base_arg)
    if base is None:
        raise UsageError(f"{path} has no basepoint; pass one explicitly")
    return PointedSpace(G, base)


def cmd_qi_search(args, run: Run) -> int:
    src = _pointed(args.source, args.source_basepoint)
    tgt = _pointed(args.target, args.target_basepoint)
    try:
        w, reason = search_quasi_isometry(src, tgt, args.eps, args.delta, budget=args.budget_nodes)
    except NetTooCoarse as exc:
        _say(f"precondition failed: {exc}")
        return run.finish("qi-search", EXIT_PRECONDITION, {"error": str(exc)})
    if w is None:
        _say(f"no {format_rational(args.eps)}-quasi-isometry: {reason}")
        return run.finish("qi-search", EXIT_FAIL, {"found": False, "reason": reason})
    _say(f"found a {format_rational(args.eps)}-quasi-isometry on {len(w.table)} net points")
    if args.witness_out:
        write_json(args.witness_out, witness_to_json(w))
    return run.finish("qi-search", EXIT_PASS, {"found": True, "witness": witness_to_json(w)})


def _run_certificate(args, run: Run, cert, command: str, extra: dict) -> int:
    if max(cert.indices, default=0) > args.budget_index:
        raise BudgetExceeded(f"index {max(cert.indices)} exceeds --budget-index {args.budget_index}")
    _net_budget(args, *cert.g.values(), *cert.h.values())
    try:
        rep = check_package_convergence(cert)
    except ScheduleIncomplete as exc:
        _say(f"precondition failed: {exc}")
        return run.finish(command, EXIT_PRECONDITION, dict(extra, error=str(exc)))
    body = dict(extra)
    body.update(
        ok=rep.ok,
        indices=cert.indices,
        eps=[{"index": i, "radius": r, "eps": e} for (i, r), e in sorted(rep.eps_table.items())],
        worst_tail=rep.worst_tail,
        checked=rep.checked,
        failures=rep.failures[:20],
    )
    _say(f"convergence over indices {cert.indices[0]}..{cert.indices[-1]}: {'pass' if rep.ok else 'fail'}")
    for fail in rep.failures[:5]:
        _say("failure:", json.dumps(to_plain(fail)))
    code = EXIT_PASS if rep.ok else EXIT_FAIL
    if args.harness:
        harness = lq_limit_harness if args.harness == "lq" else bld_limit_harness
        h = harness(cert, args.L)
        body["harness"] = {
            "kind": args.harness,
            "L": args.L,
            "applicable": h.applicable,
            "verdict": h.verdict,
            "message": h.message,
            "sequence_ok": h.sequence_ok,
        }
        _say(f"{args.harness} limit: {h.message}")
    return run.finish(command, code, body)


def cmd_converge(args, run: Run) -> int:
    cert = load_certificate(args.cert)
    return _run_certificate(args, run, cert, "converge", {"certificate": str(args.cert)})


def cmd_winding_demo(args, run: Run) -> int:
    if args.k_max > args.budget_index:
        raise BudgetExceeded(f"k_max {args.k_max} exceeds --budget-index {args.budget_index}")
    cert = winding_demo(args.k_max, args.m)
    extra = {"k_max": args.k_max, "m": args.m}
    if args.cert_out:
        write_json(args.cert_out, certificate_to_json(cert))
        extra["certificate"] = str(args.cert_out)
    return _run_certificate(args, run, cert, "winding-demo", extra)


def write_fixtures(out_dir) -> list[Path]:
    """Write the canonical corpus: graphs as ``.mg.json``, maps as ``.gm.json`` referring to them."""
    out = Path(out_dir)
    written = []
    graphs: dict = {}
    for name, f in fixtures.corpus().items():
        refs = []
        for role, G in (("source", f.source), ("target", f.target)):
            key = next((k for k, H in graphs.items() if H == G), None)
            if key is None:
                key = f"{name.lower()}_{role}"
                graphs[key] = G
                path = out / f"{key}.mg.json"
                write_json(path, graph_to_json(G))
                written.append(path)
            refs.append(f"{key}.mg.json")
        path = out / f"{name.lower()}.gm.json"
        write_json(path, map_to_json(f, *refs))
        written.append(path)
    return written


def cmd_fixtures(args, run: Run) -> int:
    target = args.dir
    paths = write_fixtures(target)
    for p in paths:
        _say(p)
    return run.finish("fixtures", EXIT_PASS, {"files": [str(p) for p in paths]})


# -- argument parsing ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--out", type=Path, help="write the JSON report here")
    g.add_argument("--no-timing", action="store_true", help="omit the timing field from reports")
    g.add_argument("--oracle", action="store_true", help="cross-check against the brute-force grid oracle")
    g.add_argument("--seed", type=int, default=0, help="seed for sampled cross-checks")
    g.add_argument("--budget-grid", type=_positive(int), default=64, help="oracle grid: steps per shortest edge")
    g.add_argument("--budget-walks", type=_positive(int), default=100, help="random walks sampled by --oracle")
    g.add_argument("--budget-net", type=_positive(int), default=50_000, help="max total net points")
    g.add_argument("--budget-nodes", type=_positive(int), default=200_000, help="max search nodes for qi-search")
    g.add_argument("--budget-lifts", type=_positive(int), default=10_000, help="max enumerated lifts")
    g.add_argument("--budget-index", type=_positive(int), default=100, help="max sequence index")

    parser = _Parser(prog="bldmaps", description="Exact checks for maps between finite metric graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    p = add("check", cmd_check, "check one property at a given constant")
    p.add_argument("--map", type=Path, required=True)
    p.add_argument("--property", choices=sorted(PROPERTIES), required=True)
    p.add_argument("--L", type=_rational, required=True)

    p = add("characterize", cmd_characterize, "topology and the four minimal constants")
    p.add_argument("--map", type=Path, required=True)

    p = add("min-constant", cmd_min_constant, "least constant for one property")
    p.add_argument("--map", type=Path, required=True)
    p.add_argument("--property", choices=["bld", "lq", "radial", "coradial"], required=True)

    p = add("lift", cmd_lift, "lift a walk in the target through a branched cover")
    p.add_argument("--map", type=Path, required=True)
    p.add_argument("--walk", type=Path, required=True, help=".walk.json in the target")
    p.add_argument("--start", help="start point: vertex, edge@offset or JSON point")
    p.add_argument("--all", action="store_true", help="enumerate every total lift")
    p.add_argument("--walk-out", type=Path, help="write the lift as .walk.json")

    p = add("transport", cmd_transport, "pair the fibers over two target points")
    p.add_argument("--map", type=Path, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--L", type=_rational, required=True)

    p = add("qi-check", cmd_qi_check, "verify a quasi-isometry witness")
    p.add_argument("--witness", type=Path, required=True, help=".qi.json file")
    p.add_argument("--eps", type=_rational, help="override the witness accuracy")
    p.add_argument("--minimal", action="store_true", help="also compute the least accuracy")

    p = add("qi-search", cmd_qi_search, "search for a quasi-isometry on a net")
    p.add_argument("--source", type=Path, required=True)
    p.add_argument("--target", type=Path, required=True)
    p.add_argument("--source-basepoint")
    p.add_argument("--target-basepoint")
    p.add_argument("--eps", type=_rational, required=True)
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--witness-out", type=Path)

    for name, func, help_text in (
        ("converge", cmd_converge, "verify a convergence certificate"),
        ("winding-demo", cmd_winding_demo, "build and verify the winding sequence"),
    ):
        p = add(name, func, help_text)
        if name == "converge":
            p.add_argument("--cert", type=Path, required=True)
        else:
            p.add_argument("--k-max", type=_positive(int), default=10)
            p.add_argument("--m", type=_positive(int), default=4)
            p.add_argument("--cert-out", type=Path)
        p.add_argument("--harness", choices=["lq", "bld"])
        p.add_argument("--L", type=_rational, default=Fraction(1))

    p = add("fixtures", cmd_fixtures, "write the canonical fixture corpus")
    p.add_argument("dir", type=Path)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    run = Run(args)
    try:
        return args.func(args, run)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return run.finish(args.command, EXIT_BUDGET, {"error": str(exc)})
    except (FormatError, GraphError, OSError, json.JSONDecodeError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
