"""``collatzkit`` command line.

Exit status is 0 on success, 1 when a computation fails (caps, corrupt
checkpoint, nothing found) and 2 for bad arguments, including unknown
program ids and malformed program text.  Progress goes to standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import census, checkpoint, family, nullmodels, picket, trees
from .bigint import from_decimal, to_decimal
from .program import ProgramError, program_from_id
from .sharding import default_shards
from .trajectory import DEFAULT_MAX_BITS, DEFAULT_MAX_ITER, StopPolicy, iterate


class UsageError(Exception):
    pass


def _int(text):
    """Decimal integer argument; hex and other bases are refused."""
    try:
        return from_decimal(text.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text):
    n = _int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}")
    return n


def _range(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}")
    lo, hi = (_int(p) for p in parts)
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _int_list(text):
    return tuple(_positive(p) for p in text.split(",") if p.strip())


def _progress(msg):
    print(msg, file=sys.stderr, flush=True)


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--program", default="p1", help="program id (p1, p2, p4:53, p6:7, p9:11:+-) or dsl:<text>")
    common.add_argument("--max-iter", type=_positive, default=DEFAULT_MAX_ITER)
    common.add_argument("--max-bits", type=_positive, default=DEFAULT_MAX_BITS)
    common.add_argument("--shards", type=_positive, default=None, help="worker count (default: available CPUs)")
    common.add_argument("--out", help="write output here instead of standard output")

    def table_format(p, choices=("text", "csv", "json")):
        p.add_argument("--format", choices=choices, default=choices[0])

    parser = argparse.ArgumentParser(prog="collatzkit", description="Experiments with Collatz-like maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("traj", parents=[common], help="one trajectory")
    p.add_argument("--n0", type=_positive, required=True)
    p.add_argument("--minima", type=_int_list, default=(), help="known loop minima, comma separated")
    p.add_argument("--path", action="store_true", help="include every value")
    table_format(p, ("text", "json"))

    p = sub.add_parser("loops", parents=[common], help="loop census")
    p.add_argument("--scan-to", type=_positive, default=10**5)
    p.add_argument("--members", action="store_true")
    p.add_argument("--no-roots", action="store_true", help="skip the lowest root node search")
    table_format(p)

    p = sub.add_parser("basin", parents=[common], help="share of odd starts ending in each loop")
    p.add_argument("--odd-range", type=_range, required=True)
    p.add_argument("--minima", type=_int_list, default=None)
    table_format(p)

    p = sub.add_parser("picket", parents=[common], help="exit points of the original map")
    p.add_argument("--count", type=_positive, required=True, help="number of odd starts 1, 3, 5, ...")
    p.add_argument("--k-max", type=_positive, default=None)
    table_format(p)

    p = sub.add_parser("family", parents=[common], help="lengths along mult*base^k+offset")
    p.add_argument("--base", type=_positive, required=True)
    p.add_argument("--exp", type=_range, required=True)
    p.add_argument("--mult", type=_positive, default=1)
    p.add_argument("--offset", type=_int, default=0)
    p.add_argument("--parity", choices=("odd", "even"))
    p.add_argument("--min-run", type=_positive, default=5)
    p.add_argument("--max-exceptions", type=_int, default=10)
    table_format(p)

    p = sub.add_parser("nullmodel", parents=[common], help="decay factors and length models")
    p.add_argument("--profile", required=True,
                   help="p1, p2-simple, p2-enriched, p4-eta1:<m>, p4-eta2:<m>, p6-7; "
                        "p4-eta1 or p4-eta2 without m reports the stability boundary")
    p.add_argument("--n0", type=_int_list, default=(), help="starts to tabulate predicted lengths for")
    table_format(p)

    p = sub.add_parser("tree", parents=[common], help="exit or reverse trees")
    p.add_argument("--loop", type=_positive, help="loop minimum for an exit tree")
    p.add_argument("--first-exiters", type=_positive, default=10)
    p.add_argument("--reverse", type=_positive, help="root value for a reverse tree")
    p.add_argument("--depth", type=_int, default=5)
    p.add_argument("--bound", type=_positive, default=10**6)
    p.add_argument("--node-cap", type=_positive, default=trees.DEFAULT_NODE_CAP)
    table_format(p, ("dot", "json"))

    p = sub.add_parser("hunt", parents=[common], help="long checkpointed run")
    p.add_argument("--n0", type=_positive, required=True)
    p.add_argument("--minima", type=_int_list, default=None, help="default: loops found scanning to --scan-to")
    p.add_argument("--scan-to", type=_positive, default=1000)
    p.add_argument("--checkpoint")
    p.add_argument("--checkpoint-every", type=_positive, default=10**6)
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint")
    table_format(p, ("text", "json"))
    return parser


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_traj(args, program):
    policy = StopPolicy(frozenset(args.minima), args.max_iter, args.max_bits, args.path)
    traj = iterate(program, args.n0, policy)
    if args.format == "json":
        return json.dumps(traj.to_dict(), indent=2) + "\n", traj.resolved
    lines = [
        f"program      {program.id}",
        f"n0           {to_decimal(traj.n0)}",
        f"outcome      {traj.outcome}",
        f"length       {traj.length}",
        f"max          {to_decimal(traj.max_value)}",
        f"max_bits     {traj.max_bits}",
        f"rule_counts  {' '.join(map(str, traj.rule_fire_counts))}",
        f"leading_up   {traj.leading_up_steps}",
    ]
    if traj.loop_min is not None:
        lines.append(f"loop_min     {to_decimal(traj.loop_min)}")
    if traj.path is not None:
        lines.append("path         " + " ".join(map(to_decimal, traj.path)))
    return "\n".join(lines) + "\n", traj.resolved


def _cmd_loops(args, program):
    _progress(f"scanning odd starts to {args.scan_to} for {program.id}")
    reg = census.find_loops(program, args.scan_to, args.max_iter, args.max_bits, args.shards, not args.no_roots)
    if reg.capped:
        _progress(f"{len(reg.capped)} starts hit a cap")
    recs = reg.to_records(args.members)
    if args.format == "json":
        return reg.to_json(args.members) + "\n"
    if args.format == "csv":
        head = ["min", "length", "max", "lowest_root_node"] + (["members"] if args.members else [])
        rows = [",".join(head)]
        for r in recs:
            row = [r["min"], str(r["length"]), r["max"], r["lowest_root_node"] or ""]
            if args.members:
                row.append(" ".join(r["members"]))
            rows.append(",".join(row))
        return "\n".join(rows) + "\n"
    lines = [f"{'loop':>10} {'length':>7} {'max':>20} {'root':>10}"]
    for r in recs:
        lines.append(f"{'L' + r['min']:>10} {r['length']:>7} {r['max']:>20} {r['lowest_root_node'] or '-':>10}")
    lines.append(f"capped starts: {len(reg.capped)}")
    return "\n".join(lines) + "\n"


def _cmd_basin(args, program):
    lo, hi = args.odd_range
    if lo < 1:
        raise UsageError("--odd-range must start at 1 or above")
    t0 = time.time()
    rep = census.basin_scan(program, lo, hi, args.minima, args.max_iter, args.max_bits, args.shards)
    _progress(f"classified {rep.total} starts in {time.time() - t0:.1f}s, {rep.capped} capped")
    if args.format == "csv":
        return rep.to_csv()
    if args.format == "json":
        return rep.to_json() + "\n"
    pct = rep.percentages()
    lines = [f"{'loop':>10} {'count':>10} {'percent':>8}"]
    lines += [f"{'L' + str(m):>10} {c:>10} {pct[m]:>8}" for m, c in rep.counts.items()]
    lines.append(f"{'capped':>10} {rep.capped:>10}")
    return "\n".join(lines) + "\n"


def _cmd_picket(args, program):
    t0 = time.time()
    cen = picket.exit_census(args.count, args.shards, args.max_iter)
    _progress(f"{cen.total} exits counted in {time.time() - t0:.1f}s")
    if args.format == "csv":
        return cen.to_csv(args.k_max)
    rows = cen.rows(args.k_max)
    if args.format == "json":
        for r in rows:
            r["decimal"] = str(r["decimal"])
            r["first_to_exit"] = None if r["first_to_exit"] == "" else str(r["first_to_exit"])
        return json.dumps({"starts": cen.starts, "rows": rows}, indent=2) + "\n"
    lines = [f"{'binary':>45} {'decimal':>14} {'factorization':>22} {'first':>8} {'exits':>8}"]
    for r in rows:
        lines.append(f"{r['binary']:>45} {r['decimal']:>14} {r['factorization']:>22} "
                     f"{r['first_to_exit']!s:>8} {r['exit_count']:>8}")
    return "\n".join(lines) + "\n"


def _cmd_family(args, program):
    lo, hi = args.exp
    spec = family.FamilySpec(args.base, lo, hi, args.mult, args.offset, args.parity)
    t0 = time.time()
    points = family.family_lengths(program, spec, None, args.max_iter, args.max_bits, args.shards)
    _progress(f"{len(points)} members in {time.time() - t0:.1f}s")
    if args.format == "csv":
        return family.family_csv(points)
    report = family.find_islands([(p.k, p.length) for p in points], args.min_run, args.max_exceptions)
    if args.format == "json":
        return json.dumps({
            "family": {"base": args.base, "exp": [lo, hi], "mult": args.mult, "offset": args.offset},
            "lengths": [{"k": p.k, "length": p.length, "outcome": p.outcome} for p in points],
            "islands": [{"k_start": i.k_start, "k_end": i.k_end, "length": i.length,
                         "exceptions": [list(e) for e in i.exceptions]} for i in report],
        }, indent=2) + "\n"
    lines = [f"k={p.k} length={p.length if p.length is not None else p.outcome}" for p in points]
    for i in report:
        exc = ", ".join(f"{k}:{ln}" for k, ln in i.exceptions) or "none"
        lines.append(f"island k={i.k_start}..{i.k_end} length={i.length} exceptions: {exc}")
    return "\n".join(lines) + "\n"


def _cmd_nullmodel(args, program):
    name = args.profile
    if name in ("p4-eta1", "p4-eta2"):
        variant = name[3:]
        m = nullmodels.stability_boundary(lambda m: nullmodels.p4_profile(m, variant))
        result = {"profile": name, "stability_boundary": round(m, 6)}
    else:
        prof = nullmodels.named_profile(name)
        result = {"profile": name, "window": float(prof.window),
                  "window_factor": round(nullmodels.window_factor(prof), 6)}
    if args.format == "csv" and args.n0:
        return nullmodels.model_curves_csv(args.n0)
    if args.n0:
        result["predictions"] = [
            {"n0": to_decimal(n), **{m: round(nullmodels.predict_length(m, n), 6) for m in ("low", "mid", "high")}}
            for n in args.n0
        ]
    if args.format == "json":
        return json.dumps(result, indent=2) + "\n"
    if args.format == "csv":
        return ",".join(k for k in result if k != "predictions") + "\n" + \
            ",".join(str(v) for k, v in result.items() if k != "predictions") + "\n"
    lines = [f"{k}: {v}" for k, v in result.items() if k != "predictions"]
    for p in result.get("predictions", ()):
        lines.append(f"n0={p['n0']} low={p['low']} mid={p['mid']} high={p['high']}")
    return "\n".join(lines) + "\n"


def _cmd_tree(args, program):
    if (args.loop is None) == (args.reverse is None):
        raise UsageError("tree needs exactly one of --loop or --reverse")
    if args.reverse is not None:
        forest = trees.build_reverse_tree(program, args.reverse, args.depth, args.bound, args.node_cap)
    else:
        reg = census.find_loops(program, max(10**4, args.loop), args.max_iter, args.max_bits, roots=False)
        if args.loop not in reg.loops:
            raise ValueError(f"no loop with minimum {args.loop} found for {program.id}")
        forest = trees.build_exit_tree(program, reg.loops[args.loop], args.first_exiters, reg.minima,
                                       max_iterations=args.max_iter, max_bits=args.max_bits,
                                       node_cap=args.node_cap)
    return trees.export_graph(forest, args.format)


def _cmd_hunt(args, program):
    if args.checkpoint_every < checkpoint.MIN_INTERVAL:
        raise UsageError(f"--checkpoint-every must be >= {checkpoint.MIN_INTERVAL}")
    resume = None
    if args.resume:
        if not args.checkpoint:
            raise UsageError("--resume needs --checkpoint")
        resume = checkpoint.read_checkpoint(args.checkpoint)
        if resume.n0 != args.n0:
            raise checkpoint.CheckpointError(f"checkpoint is for n0={resume.n0}, not {args.n0}")
        _progress(f"resuming at iteration {resume.iterations_done}")
    minima = args.minima
    if minima is None:
        minima = census.find_loops(program, args.scan_to, roots=False).minima
        _progress(f"target loops: {', '.join(map(str, minima))}")
    t0 = time.time()

    def report(rec):
        _progress(f"{rec.iterations_done} iterations, {int(rec.value).bit_length()} bits now, "
                  f"{rec.max_bits_seen} bits peak, {time.time() - t0:.0f}s")

    traj = checkpoint.hunt(program, args.n0, minima, args.max_iter, args.max_bits, args.checkpoint,
                           args.checkpoint_every, resume, report)
    if args.format == "json":
        return json.dumps(traj.to_dict(), indent=2) + "\n", traj.resolved
    text = (f"n0 {to_decimal(traj.n0)}\noutcome {traj.outcome}\nloop_min {traj.loop_min}\n"
            f"length {traj.length}\nmax_bits {traj.max_bits}\n")
    return text, traj.resolved


_COMMANDS = {
    "traj": _cmd_traj,
    "loops": _cmd_loops,
    "basin": _cmd_basin,
    "picket": _cmd_picket,
    "family": _cmd_family,
    "nullmodel": _cmd_nullmodel,
    "tree": _cmd_tree,
    "hunt": _cmd_hunt,
}


def run_cli(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.shards is None:
        args.shards = default_shards()
    try:
        program = program_from_id(args.program)
    except ProgramError as exc:
        print(f"collatzkit: {exc}", file=sys.stderr)
        return 2
    try:
        result = _COMMANDS[args.command](args, program)
    except UsageError as exc:
        print(f"collatzkit: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"collatzkit: {exc}", file=sys.stderr)
        return 1
    ok = True
    if isinstance(result, tuple):
        result, ok = result
    _emit(args, result)
    return 0 if ok else 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
