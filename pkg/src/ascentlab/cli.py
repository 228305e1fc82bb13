"""Command-line front end.

Exit codes: 0 success, 1 a verification failed or a bound was violated,
2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import generators
from .campaign import (
    POLICY_NAMES,
    InputError,
    build_instances,
    dump_records,
    exit_code,
    load_spec,
    make_start,
    parse_seeds,
    read_instance_file,
    run_experiment,
)
from .oracle import SearchSpaceTooLarge, enumerate_ascents
from .search import (
    OrderSpec,
    Policy,
    Step,
    StepBudgetExhausted,
    Trace,
    ascend,
    check_bounds,
    verify_trace,
)
from .smoothing import smooth
from .treedepth import (
    GraphTooLargeError,
    constraint_graph,
    decompose,
    exact_treedepth,
    write_decomposition,
    write_graph,
)
from .vcsp import Instance, write_instance


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def read_assignment(path, instance: Instance) -> dict:
    """``<id> <value>`` per line; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise InputError(f"assignment file {path} not found") from None
    x = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            var, val = line.split()
            x[int(var)] = int(val)
    try:
        instance.check_assignment(x)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return x


def resolve_start(arg: str, instance: Instance, seed: int) -> dict:
    if arg in ("all-zeros", "random"):
        return make_start(instance, arg, seed)
    return read_assignment(arg, instance)


def read_trace_csv(path, start: dict) -> Trace:
    try:
        rows = Path(path).read_text().splitlines()
    except FileNotFoundError:
        raise InputError(f"trace file {path} not found") from None
    steps = []
    f0 = None
    for row in rows[1:]:
        if not row.strip():
            continue
        t, var, old, new, fit = row.split(",")
        if t == "0":
            f0 = int(fit) if fit else None
            continue
        steps.append(Step(int(var), int(old), int(new), int(fit) if fit else None))
    return Trace(dict(start), steps, f0)


def _decomposition(instance: Instance, exact: bool):
    return decompose(constraint_graph(instance), "exact" if exact else "dfs")


def cmd_generate(args) -> int:
    if args.kind == "star":
        inst = generators.gen_star(args.n)
        header = [f"parameters n={args.n}"]
    elif args.kind == "recursive":
        inst, w = generators.gen_recursive(args.n, args.d)
        header = [f"parameters n={args.n} d={args.d}"]
    elif args.kind == "snake-blocks":
        entry = {"generator": "snake-blocks", "blocks": args.blocks, "d": args.d, "snake": args.snake}
        inst = build_instances(entry)[0][2]
        header = [f"parameters blocks={args.blocks} d={args.d}"]
    else:
        inst = generators.gen_random(args.n, args.v, args.p, args.w, args.seed)
        header = []
    _emit(write_instance(inst, header), args.output)
    return 0


def cmd_decompose(args) -> int:
    inst = read_instance_file(args.input)
    g = constraint_graph(inst)
    if args.exact_td:
        try:
            h, t = exact_treedepth(g)
            mode = "exact"
        except GraphTooLargeError:
            t, mode = decompose(g, "dfs")
    else:
        t, mode = decompose(g, "dfs")
    text = f"# mode {mode}\n" + write_decomposition(t)
    if args.graph:
        text = write_graph(g) + text
    _emit(text, args.output)
    return 0


def cmd_ascend(args) -> int:
    inst = read_instance_file(args.input)
    t, mode = _decomposition(inst, args.exact_td)
    seeds = parse_seeds(args.seeds) if args.seeds else [args.seed]
    status = 0
    for seed in seeds:
        order = None
        if args.policy in ("ordered", "step-steepest-ordered"):
            order = OrderSpec.descendant(t) if args.order == "tdd" else OrderSpec.descending()
        policy = Policy.from_name(args.policy, order=order, seed=seed)
        start = resolve_start(args.start, inst, seed)
        record = {"instance": args.input, "policy": policy.label(), "seed": seed,
                  "treedepth": t.height, "treedepth_mode": mode}
        try:
            trace = ascend(inst, start, policy, args.max_steps)
        except StepBudgetExhausted as exc:
            record.update(length=exc.trace.length, error=str(exc))
            print(json.dumps(record, sort_keys=True))
            status = 1
            continue
        report = verify_trace(inst, trace, order=order, step_steepest=policy.step_steepest)
        record.update(
            length=trace.length,
            final_fitness=trace.final_fitness,
            flips={str(k): c for k, c in trace.flip_counts.items() if c},
            verified=report.ok,
        )
        if order is not None and order.kind == "tdd":
            b = check_bounds(trace, t, inst.max_domain, policy.step_steepest)
            record.update(bounds="ok" if b.ok else "violated", length_bound=b.length_bound)
            if not b.ok:
                status = 1
        if not report.ok:
            status = 1
        print(json.dumps(record, sort_keys=True))
        if args.emit_series:
            out = Path(args.emit_series)
            if len(seeds) > 1:
                out = out.with_name(f"{out.stem}.{seed}{out.suffix or '.csv'}")
            out.write_text(trace.to_csv())
    return status


def cmd_smooth(args) -> int:
    inst = read_instance_file(args.input)
    if args.var not in inst.domains:
        raise InputError(f"variable {args.var} is not active")
    result, record = smooth(inst, args.var)
    _emit(write_instance(result), args.output)
    report = sys.stderr if not args.output else sys.stdout
    for line in record.describe():
        print(line, file=report)
    return 0


def cmd_enumerate(args) -> int:
    inst = read_instance_file(args.input)
    start = resolve_start(args.start, inst, 0)
    try:
        stats = enumerate_ascents(inst, start, max_count=args.max_count, max_states=args.max_states)
    except SearchSpaceTooLarge as exc:
        print(json.dumps({"instance": args.input, "error": str(exc)}))
        return 1
    print(json.dumps({"instance": args.input, **stats.record()}, sort_keys=True))
    return 0


def cmd_verify(args) -> int:
    inst = read_instance_file(args.input)
    start = resolve_start(args.start, inst, 0)
    trace = read_trace_csv(args.trace, start)
    t, mode = _decomposition(inst, args.exact_td)
    order = None
    if args.order:
        order = OrderSpec.descendant(t) if args.order == "tdd" else OrderSpec.descending()
    report = verify_trace(inst, trace, order=order, step_steepest=args.step_steepest)
    for name, res in report.checks.items():
        where = "" if res.passed else f" at step {res.first_violation}: {res.reason}"
        print(f"{name}: {'pass' if res.passed else 'FAIL'}{where}")
    status = 0 if report.ok else 1
    if order is not None and order.kind == "tdd" and report.ok:
        b = check_bounds(trace, t, inst.max_domain, args.step_steepest)
        print(f"bounds ({mode} decomposition, height {t.height}): "
              f"{'ok' if b.ok else 'VIOLATED'} length {b.length} <= {b.length_bound}")
        for v in b.violations:
            print(f"  {v}")
        status = status or (0 if b.ok else 1)
    return status


def cmd_campaign(args) -> int:
    spec = load_spec(args.spec)
    if args.emit_series:
        spec.emit_series = args.emit_series
    if args.max_steps is not None:
        spec.max_steps = args.max_steps
    records, summary = run_experiment(spec)
    out = args.output or spec.output
    _emit(dump_records(records, summary), out)
    return exit_code(summary)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ascentlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a generated instance file")
    gsub = g.add_subparsers(dest="kind", required=True)
    s = gsub.add_parser("star")
    s.add_argument("--n", type=int, required=True)
    r = gsub.add_parser("recursive")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--d", type=int, required=True)
    sb = gsub.add_parser("snake-blocks")
    sb.add_argument("--blocks", type=int, required=True)
    sb.add_argument("--d", type=int, required=True)
    sb.add_argument("--snake", help="snake file (bitstrings); searched if omitted")
    rnd = gsub.add_parser("random")
    rnd.add_argument("--n", type=int, required=True)
    rnd.add_argument("--v", type=int, default=2)
    rnd.add_argument("--p", type=float, default=0.3)
    rnd.add_argument("--w", type=int, default=10)
    rnd.add_argument("--seed", type=int, default=0)
    for sp in (s, r, sb, rnd):
        sp.add_argument("--output")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("decompose", help="treedepth decomposition of an instance's graph")
    d.add_argument("--input", required=True)
    d.add_argument("--output")
    d.add_argument("--exact-td", action="store_true")
    d.add_argument("--graph", action="store_true", help="also emit the constraint graph")
    d.set_defaults(func=cmd_decompose)

    a = sub.add_parser("ascend", help="run an ascent and report it")
    a.add_argument("--input", required=True)
    a.add_argument("--policy", choices=POLICY_NAMES, default="ordered")
    a.add_argument("--order", choices=("desc-index", "tdd"), default="tdd")
    a.add_argument("--start", default="all-zeros", help="all-zeros, random or an assignment file")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--seeds", help="inclusive range A..B")
    a.add_argument("--max-steps", type=int)
    a.add_argument("--exact-td", action="store_true")
    a.add_argument("--emit-series", help="write the trace CSV here")
    a.set_defaults(func=cmd_ascend)

    sm = sub.add_parser("smooth", help="smooth a variable out of an instance")
    sm.add_argument("--input", required=True)
    sm.add_argument("--var", type=int, required=True)
    sm.add_argument("--output")
    sm.set_defaults(func=cmd_smooth)

    e = sub.add_parser("enumerate", help="exhaustive ascent statistics from a start")
    e.add_argument("--input", required=True)
    e.add_argument("--start", default="all-zeros")
    e.add_argument("--max-count", type=int, default=10**7)
    e.add_argument("--max-states", type=int, default=10**6)
    e.set_defaults(func=cmd_enumerate)

    v = sub.add_parser("verify", help="check a trace CSV against the ascent definitions")
    v.add_argument("--input", required=True)
    v.add_argument("--trace", required=True)
    v.add_argument("--start", default="all-zeros")
    v.add_argument("--order", choices=("desc-index", "tdd"))
    v.add_argument("--step-steepest", action="store_true")
    v.add_argument("--exact-td", action="store_true")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("campaign", help="run an experiment spec (JSON)")
    c.add_argument("--spec", required=True)
    c.add_argument("--output")
    c.add_argument("--emit-series")
    c.add_argument("--max-steps", type=int)
    c.set_defaults(func=cmd_campaign)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
