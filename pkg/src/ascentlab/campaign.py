"""Experiment campaigns: expand a spec into runs, execute them, summarise.

Records are JSON objects, one per line, ordered by (instance, policy, seed)
regardless of how the worker pool scheduled them.
"""

from __future__ import annotations

import json
import os
import random
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import generators
from .search import (
    OrderSpec,
    Policy,
    StepBudgetExhausted,
    ascend,
    check_bounds,
    default_max_steps,
    verify_trace,
)
from .treedepth import constraint_graph, decompose, validate_decomposition
from .vcsp import Instance, VcspParseError, parse_instance

POLICY_NAMES = ("ordered", "step-steepest-ordered", "steepest", "first", "random")


class InputError(ValueError):
    """Bad experiment spec or missing/unparseable input file (exit code 2)."""


def parse_seeds(value) -> list[int]:
    """Accept an int, a list of ints, or an inclusive range string "A..B"."""
    if isinstance(value, int):
        return [value]
    if isinstance(value, str):
        if ".." in value:
            a, b = value.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise InputError(f"empty seed range {value!r}")
            return list(range(lo, hi + 1))
        return [int(value)]
    return [int(v) for v in value]


@dataclass
class ExperimentSpec:
    instances: list[dict]
    policies: list[str] = field(default_factory=lambda: ["ordered"])
    seeds: list[int] = field(default_factory=lambda: [0])
    decomposition: str = "exact"
    order: str = "tdd"
    start: str = "all-zeros"
    max_steps: Optional[int] = None
    emit_series: Optional[str] = None
    output: Optional[str] = None
    record_timing: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown spec fields {sorted(unknown)}")
        if "instances" not in data:
            raise InputError("spec needs an 'instances' list")
        data = dict(data)
        data["seeds"] = parse_seeds(data.get("seeds", [0]))
        spec = cls(**data)
        for p in spec.policies:
            if p not in POLICY_NAMES:
                raise InputError(f"unknown policy {p!r}")
        if spec.decomposition not in ("exact", "dfs"):
            raise InputError(f"unknown decomposition mode {spec.decomposition!r}")
        if spec.order not in ("tdd", "desc-index"):
            raise InputError(f"unknown order {spec.order!r}")
        if spec.start not in ("all-zeros", "random"):
            raise InputError(f"unknown start {spec.start!r}")
        return spec

    def to_dict(self) -> dict:
        return asdict(self)


def load_spec(path) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"spec file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"spec file {path}: {exc}") from None
    return ExperimentSpec.from_dict(data)


def read_instance_file(path) -> Instance:
    try:
        return parse_instance(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"instance file {path} not found") from None
    except VcspParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_snake_file(path) -> generators.SnakePath:
    """One bitstring per line, head first; bit j of a line is coordinate j."""
    try:
        rows = [r.strip() for r in Path(path).read_text().splitlines()]
    except FileNotFoundError:
        raise InputError(f"snake file {path} not found") from None
    rows = [r for r in rows if r and not r.startswith("#")]
    if not rows or any(set(r) - {"0", "1"} or len(r) != len(rows[0]) for r in rows):
        raise InputError(f"{path}: expected equal-length bitstrings")
    verts = tuple(sum(int(c) << j for j, c in enumerate(r)) for r in rows)
    snake = generators.SnakePath(len(rows[0]), verts)
    if not snake.is_valid():
        raise InputError(f"{path}: not an induced path from the all-zero head")
    return snake


def build_instances(entry: dict) -> list[tuple[str, str, Instance]]:
    """Expand one spec entry into (instance_id, provenance, instance) triples."""
    entry = dict(entry)
    try:
        if "path" in entry:
            inst = read_instance_file(entry["path"])
            return [(str(entry["path"]), "file", inst)]
        gen = entry.pop("generator")
        if gen == "star":
            n = int(entry["n"])
            return [(f"star(n={n})", f"star n={n}", generators.gen_star(n))]
        if gen == "recursive":
            n, d = int(entry["n"]), int(entry["d"])
            inst, w = generators.gen_recursive(n, d)
            prov = f"recursive n={n} d={d} w=" + ",".join(map(str, w))
            return [(f"recursive(n={n},d={d})", prov, inst)]
        if gen == "snake-blocks":
            b, d = int(entry["blocks"]), int(entry["d"])
            if entry.get("snake"):
                snake = read_snake_file(entry["snake"])
            else:
                snake = generators.find_snake(d + 1)
            prov = f"snake-blocks blocks={b} d={d} snake_length={snake.length}"
            return [(f"snake-blocks(b={b},d={d})", prov, generators.gen_snake_blocks(b, d, snake))]
        if gen == "random":
            n, v = int(entry["n"]), int(entry["v"])
            p, w = float(entry["p"]), int(entry["w"])
            out = []
            for s in parse_seeds(entry.get("seed", 0)):
                ident = f"random(n={n},v={v},p={p},w={w},seed={s})"
                out.append((ident, ident, generators.gen_random(n, v, p, w, s)))
            return out
    except KeyError as exc:
        raise InputError(f"instance entry missing field {exc.args[0]!r}: {entry}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad instance entry {entry}: {exc}") from None
    raise InputError(f"unknown generator {gen!r}")


def make_start(instance: Instance, kind: str, seed: int) -> dict:
    if kind == "all-zeros":
        return instance.zeros()
    rng = random.Random(seed)
    return {v: rng.randrange(d) for v, d in instance.domains.items()}


def run_one(spec: ExperimentSpec, ident: str, prov: str, instance: Instance,
            policy_name: str, seed: int, decomposition, td_mode: str) -> dict:
    rec = {
        "instance": ident,
        "provenance": prov,
        "n": instance.n,
        "v": instance.max_domain,
        "treedepth": decomposition.height,
        "treedepth_mode": td_mode,
        "policy": policy_name,
        "order": spec.order if policy_name in ("ordered", "step-steepest-ordered") else None,
        "seed": seed,
        "length": None,
        "final_fitness": None,
        "flips": None,
        "verified": None,
        "bounds": None,
        "error": None,
    }
    t0 = time.perf_counter()
    ordered = policy_name in ("ordered", "step-steepest-ordered")
    order = None
    if ordered:
        order = OrderSpec.descendant(decomposition) if spec.order == "tdd" else OrderSpec.descending()
    policy = Policy.from_name(policy_name, order=order, seed=seed)
    start = make_start(instance, spec.start, seed)
    max_steps = spec.max_steps
    if max_steps is None:
        bounded = ordered and spec.order == "tdd"
        max_steps = default_max_steps(instance, decomposition if bounded else None)
    try:
        trace = ascend(instance, start, policy, max_steps)
    except StepBudgetExhausted as exc:
        rec["error"] = str(exc)
        rec["length"] = exc.trace.length
        if ordered and spec.order == "tdd":
            rec["bounds"] = "violated"
        return rec
    rec["length"] = trace.length
    rec["final_fitness"] = trace.final_fitness
    rec["flips"] = {str(k): c for k, c in trace.flip_counts.items() if c}
    report = verify_trace(instance, trace, order=order, step_steepest=policy.step_steepest)
    rec["verified"] = report.ok
    if not report.ok:
        rec["error"] = "; ".join(c.reason for c in report.checks.values() if not c.passed)
    if ordered and spec.order == "tdd":
        bounds = check_bounds(trace, decomposition, instance.max_domain, policy.step_steepest)
        rec["bounds"] = "ok" if bounds.ok else "violated"
        rec["length_bound"] = bounds.length_bound
        if not bounds.ok:
            rec["bound_violations"] = bounds.violations
    if spec.record_timing:
        rec["wall_time"] = round(time.perf_counter() - t0, 6)
    if spec.emit_series:
        out = Path(spec.emit_series)
        out.mkdir(parents=True, exist_ok=True)
        safe = "".join(ch if ch.isalnum() or ch in "=,._-" else "_" for ch in ident)
        (out / f"{safe}__{policy_name}__{seed}.csv").write_text(trace.to_csv())
    return rec


def summarize(records: list[dict]) -> dict:
    by_policy: dict[str, list[dict]] = {}
    for r in records:
        by_policy.setdefault(r["policy"], []).append(r)
    policies = {}
    for name, recs in by_policy.items():
        lengths = [r["length"] for r in recs if r["error"] is None]
        policies[name] = {
            "runs": len(recs),
            "min_length": min(lengths, default=None),
            "max_length": max(lengths, default=None),
            "mean_length": round(statistics.fmean(lengths), 6) if lengths else None,
            "bound_violations": sum(r["bounds"] == "violated" for r in recs),
            "verification_failures": sum(r["verified"] is False for r in recs),
            "errors": sum(r["error"] is not None for r in recs),
        }
    return {
        "summary": True,
        "runs": len(records),
        "bound_violations": sum(p["bound_violations"] for p in policies.values()),
        "verification_failures": sum(p["verification_failures"] for p in policies.values()),
        "errors": sum(p["errors"] for p in policies.values()),
        "policies": policies,
    }


def run_experiment(spec: ExperimentSpec, threads: Optional[int] = None) -> tuple[list[dict], dict]:
    """Run every (instance, policy, seed) combination; inputs are all resolved first."""
    loaded = []
    for entry in spec.instances:
        loaded.extend(build_instances(entry))
    jobs = []
    for i, (ident, prov, inst) in enumerate(loaded):
        decomposition, td_mode = decompose(constraint_graph(inst), spec.decomposition)
        ok, _ = validate_decomposition(constraint_graph(inst), decomposition)
        assert ok
        for j, pol in enumerate(spec.policies):
            for seed in spec.seeds:
                jobs.append(((i, j, seed), (spec, ident, prov, inst, pol, seed, decomposition, td_mode)))
    if threads is None:
        threads = int(os.environ.get("ASCENTLAB_THREADS", "1") or 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: (job[0], run_one(*job[1])), jobs))
    else:
        results = [(key, run_one(*args)) for key, args in jobs]
    results.sort(key=lambda kr: kr[0])
    records = [r for _, r in results]
    return records, summarize(records)


def exit_code(summary: dict) -> int:
    failed = summary["bound_violations"] or summary["verification_failures"] or summary["errors"]
    return 1 if failed else 0


def dump_records(records: list[dict], summary: dict) -> str:
    lines = [json.dumps(r, sort_keys=True) for r in records]
    lines.append(json.dumps(summary, sort_keys=True))
    return "\n".join(lines) + "\n"
