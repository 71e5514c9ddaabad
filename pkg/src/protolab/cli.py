"""Command-line entry point.

Every subcommand parses its inputs, calls library functions and prints or
writes their results; no analysis happens here.  Before running, the fully
materialised command line (all defaults filled in) is printed to stderr as
a ``# effective config:`` banner so that any run can be repeated exactly.

Exit status: 0 on success, 1 on invalid input or failed validation, 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from . import de_bec, de_bms, lift, optimizer, sim, stability
from .proto_core import BaseMatrix, ProtographError, check_theorem1, design_rate, parse_base_matrix
from .registry import REGISTRY, builtin

PROG = "protolab"


class CliError(Exception):
    """Invalid input detected by a subcommand (exit status 1)."""


def load_proto(source: str) -> BaseMatrix:
    if source.startswith("builtin:"):
        return builtin(source.split(":", 1)[1])
    return parse_base_matrix(Path(source).read_text())


def load_graph(source: str) -> lift.RegularBipartiteGraph:
    if source.startswith("d2q:"):
        return lift.d2q_graph(int(source.split(":", 1)[1]))
    return lift.RegularBipartiteGraph.read(source)


def read_simple_graph(path: str) -> tuple[int, np.ndarray]:
    """``graph n`` header, then one ``u v`` line per edge (0-indexed)."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "graph":
            raise CliError(f"{path}: expected header 'graph n'")
        edges = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    return int(header[1]), edges.reshape(-1, 2)


def _fmt(x: float, digits: int = 4) -> str:
    return "inf" if math.isinf(x) else f"{x:.{digits}f}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_threshold(a) -> int:
    p = load_proto(a.proto)
    if a.channel == "bec":
        th = de_bec.bec_threshold(p, resolution=a.resolution or 1e-7)
        print(f"bec threshold: {th:.4f} ({th:.7f})")
        return 0
    ebn0 = de_bms.awgn_threshold(p, resolution_db=a.resolution or 0.005)
    rate = design_rate(p)
    cap = de_bms.capacity_ebn0_db(rate)
    print(f"awgn threshold Eb/N0: {ebn0:.3f} dB")
    print(f"awgn threshold SNR: {de_bms.snr_db_from_ebn0(ebn0, rate):.3f} dB")
    print(f"capacity Eb/N0 at rate {rate}: {cap:.3f} dB (gap {ebn0 - cap:.3f} dB)")
    return 0


def cmd_stability(a) -> int:
    p = load_proto(a.proto)
    rep = stability.classify_stability(p)
    print(f"case {rep.case}")
    print(f"r_max {rep.r_max}")
    print(f"case bound {_fmt(rep.case_bound)}")
    print(f"rho {rep.rho:.6f}")
    print(f"epsilon_star {_fmt(rep.epsilon_star)}")
    print(check_theorem1(p).describe())
    if a.csv:
        with open(a.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case", "r_max", "rho", "epsilon_star"])
            w.writerow(rep.csv_row())
    return 0


def cmd_optimize(a) -> int:
    cfg = optimizer.DeOptConfig(
        rows=a.rows, cols=a.cols, pop_size=a.pop_size, p_c=a.p_c, generations=a.generations,
        cap=a.cap, objective=a.objective, seed=a.seed, paper_strict=a.paper_strict,
    )
    res = optimizer.optimize(cfg, wall_clock=a.wall_clock, threads=a.threads)
    Path(a.out).write_text(res.best.matrix.to_text())
    if a.trace:
        res.write_trace(a.trace)
    print(f"best fitness {res.best.fitness:.6f} after {res.trace[-1].generation} generations")
    print(res.best.matrix.to_text(), end="")
    return 0


def cmd_build_graph(a) -> int:
    if a.double_cover:
        g = lift.bipartite_double_cover(*read_simple_graph(a.double_cover))
    elif a.graph:
        g = load_graph(a.graph)
    elif a.kind == "d2q":
        if a.q is None:
            raise CliError("--kind d2q needs --q")
        g = lift.d2q_graph(a.q)
    else:
        raise CliError("give --kind d2q --q Q, --double-cover FILE or --graph FILE")
    if a.degree_split:
        g = lift.degree_split(g, a.degree_split)
    elif g.color is None and a.color:
        g = g.with_color(lift.edge_color(g))
    g.write(a.out)
    print(f"wrote {a.out}: {g.n_left}+{g.n_right} vertices, degree {g.degree}, {g.num_edges} edges")
    return 0


def cmd_lift(a) -> int:
    p = load_proto(a.proto)
    g = load_graph(a.graph)
    if g.degree != p.num_edges:
        raise CliError(
            f"graph degree {g.degree} != protograph edge count {p.num_edges}; "
            "use a graph of matching degree (e.g. d2q:Q with Q = edge count, if prime) or build-graph --degree-split"
        )
    if a.coloring == "konig" or not g.coloring_is_proper():
        g = g.with_color(lift.edge_color(g, use_existing=False))
    lifted = lift.node_split(p, g)
    lift.validate_lift(lifted)
    lifted.write_alist(a.out)
    if a.perms:
        lifted.write_permutations(a.perms)
    print(f"lift size T {lifted.T}")
    print(f"blocklength {lifted.n}")
    print(f"checks {lifted.m}")
    print(f"edges {lifted.num_edges}")
    if a.girth:
        print(f"girth {lift.girth(lifted)}")
    return 0


def cmd_girth(a) -> int:
    if a.code:
        n, m, b, c = lift.read_alist(a.code)
        obj = (n + m, np.column_stack([b, c + n]))
    else:
        obj = load_graph(a.graph)
    if a.lower_bound_only:
        g = lift.girth(obj, cap=a.lower_bound_only)
        if g >= a.lower_bound_only:
            print(f"girth >= {a.lower_bound_only}")
        else:
            print(f"girth {g}")
        return 0
    g = lift.girth(obj)
    print("girth acyclic" if math.isinf(g) else f"girth {g}")
    return 0


def cmd_simulate(a) -> int:
    code = sim.SparseCode.from_alist(a.code)
    rows = []
    for x in a.param:
        r = sim.simulate(code, a.channel, x, seed=a.seed, max_frames=a.max_frames,
                         min_frame_errors=a.min_frame_errors, max_iter=a.max_iter, threads=a.threads)
        rows.append(r.csv_row())
        flag = "" if r.reliable else " (fewer than 20 frame errors; interval unreliable)"
        print(f"{a.channel} {x}: frames {r.frames} fer {r.fer:.4e} ber {r.ber:.4e}{flag}")
    if a.out:
        with open(a.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(sim.SimResult.CSV_HEADER)
            w.writerows(rows)
    return 0


def cmd_show(a) -> int:
    if a.builtin == "list":
        for name, e in REGISTRY.items():
            print(f"{name:16s} {e.description}")
        return 0
    if a.builtin not in REGISTRY:
        raise CliError(f"unknown built-in protograph {a.builtin!r}")
    e = REGISTRY[a.builtin]
    m = e.matrix
    print(f"# {e.name}: {e.description}")
    print(f"# {m.rows}x{m.cols}, {m.num_edges} edges, design rate {design_rate(m)}")
    for label, val in (("BEC threshold", e.bec_threshold), ("Eb/N0 threshold dB", e.ebn0_threshold_db),
                       ("SNR threshold dB", e.snr_threshold_db), ("lift q", e.lift_q), ("blocklength", e.blocklength)):
        if val is not None:
            print(f"# reported {label}: {val}")
    print(m.to_text(), end="")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog=PROG, description="Protograph LDPC design toolkit.", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    def threads(sp):
        sp.add_argument("--threads", type=int, default=sim.default_threads(),
                        help="worker threads (fallback: PROTOLAB_THREADS, then CPU count)")

    sp = sub.add_parser("threshold", help="BEC or BIAWGN decoding threshold", formatter_class=fmt)
    sp.add_argument("--channel", choices=["bec", "awgn"], default="bec", help="channel")
    sp.add_argument("--proto", required=True, help="base matrix file or builtin:NAME")
    sp.add_argument("--resolution", type=float, default=None,
                    help="bisection resolution (bec: erasure prob., default 1e-7; awgn: dB, default 0.005)")
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("stability", help="stability case and exact stability limit", formatter_class=fmt)
    sp.add_argument("--proto", required=True, help="base matrix file or builtin:NAME")
    sp.add_argument("--csv", default=None, help="write case,r_max,rho,epsilon_star to this file")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("optimize", help="differential-evolution search for a base matrix", formatter_class=fmt)
    sp.add_argument("--rows", type=int, required=True, help="check nodes")
    sp.add_argument("--cols", type=int, required=True, help="bit nodes")
    sp.add_argument("--objective", choices=["bec", "awgn"], default="bec", help="fitness")
    sp.add_argument("--generations", type=int, default=100, help="generation budget")
    sp.add_argument("--wall-clock", type=float, default=None, help="optional time budget in seconds")
    sp.add_argument("--seed", type=int, default=0, help="RNG seed")
    sp.add_argument("--pop-size", type=int, default=None, help="population (default 10*rows*cols)")
    sp.add_argument("--p-c", type=float, default=0.88, help="crossover probability")
    sp.add_argument("--cap", type=int, default=9, help="largest allowed entry")
    sp.add_argument("--paper-strict", action="store_true", help="do not enforce the degree-3 attachment condition")
    sp.add_argument("--out", default="best.bm", help="best base matrix output")
    sp.add_argument("--trace", default=None, help="per-generation CSV output")
    threads(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("build-graph", help="build or transform a regular bipartite graph", formatter_class=fmt)
    sp.add_argument("--kind", choices=["d2q"], default=None, help="generated family")
    sp.add_argument("--q", type=int, default=None, help="prime field size for d2q")
    sp.add_argument("--double-cover", default=None, help="simple regular graph file ('graph n' then 'u v' lines)")
    sp.add_argument("--graph", default=None, help="existing bipartite graph file or d2q:Q")
    sp.add_argument("--degree-split", type=int, default=None, help="split to this degree")
    sp.add_argument("--color", action="store_true", help="attach an edge colouring when the graph has none")
    sp.add_argument("--out", required=True, help="output graph file")
    sp.set_defaults(func=cmd_build_graph)

    sp = sub.add_parser("lift", help="lift a protograph by node splitting", formatter_class=fmt)
    sp.add_argument("--proto", required=True, help="base matrix file or builtin:NAME")
    sp.add_argument("--graph", required=True, help="bipartite graph file or d2q:Q")
    sp.add_argument("--coloring", choices=["konig", "attached"], default="konig",
                    help="recolour by alternating paths, or keep the graph's own colouring "
                         "(the closed form for d2q, which creates small stopping sets with repeated base entries)")
    sp.add_argument("--out", required=True, help="alist output")
    sp.add_argument("--perms", default=None, help="permutation file output")
    sp.add_argument("--girth", action="store_true", help="also report the girth of the lifted graph")
    sp.set_defaults(func=cmd_lift)

    sp = sub.add_parser("girth", help="girth of a graph or code", formatter_class=fmt)
    sp.add_argument("--graph", default=None, help="bipartite graph file or d2q:Q")
    sp.add_argument("--code", default=None, help="alist file")
    sp.add_argument("--lower-bound-only", type=int, default=None, metavar="G",
                    help="only certify that the girth is at least G")
    sp.set_defaults(func=cmd_girth)

    sp = sub.add_parser("simulate", help="Monte-Carlo FER/BER of a code", formatter_class=fmt)
    sp.add_argument("--code", required=True, help="alist file")
    sp.add_argument("--channel", choices=["bec", "awgn"], default="bec", help="channel")
    sp.add_argument("--param", type=float, nargs="+", required=True, help="erasure probabilities or Eb/N0 values (dB)")
    sp.add_argument("--seed", type=int, default=0, help="RNG seed")
    sp.add_argument("--max-frames", type=int, default=sim.DEFAULT_MAX_FRAMES, help="frame budget per point")
    sp.add_argument("--min-frame-errors", type=int, default=sim.DEFAULT_MIN_FRAME_ERRORS, help="stop after this many frame errors")
    sp.add_argument("--max-iter", type=int, default=None, help="decoder iterations (default 200 bec, 100 awgn)")
    sp.add_argument("--out", default=None, help="CSV output")
    threads(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("show", help="list or print built-in protographs", formatter_class=fmt)
    sp.add_argument("--builtin", default="list", help="'list' or a built-in name")
    sp.set_defaults(func=cmd_show)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[name]
    raise KeyError(name)


def effective_argv(parser: argparse.ArgumentParser, ns: argparse.Namespace) -> list[str]:
    """Command line reproducing ``ns`` with every default written out."""
    argv = [ns.command]
    for act in _subparser(parser, ns.command)._actions:
        if not act.option_strings or act.dest == "help":
            continue
        val = getattr(ns, act.dest)
        flag = act.option_strings[-1]
        if isinstance(act, argparse._StoreTrueAction):
            if val:
                argv.append(flag)
        elif val is None:
            continue
        elif isinstance(val, list):
            argv += [flag, *map(str, val)]
        else:
            argv += [flag, str(val)]
    return argv


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(ns, "threads", 1) < 1:
        print(f"{PROG}: error: --threads must be >= 1", file=sys.stderr)
        return 2
    print("# effective config: " + shlex.join([PROG, *effective_argv(parser, ns)]), file=sys.stderr)
    try:
        return ns.func(ns)
    except (CliError, ProtographError, lift.LiftError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"{PROG}: error: {msg}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
