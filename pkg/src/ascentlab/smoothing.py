"""Smoothing a variable out of an instance, and projecting ascents accordingly.

Smoothing k replaces every constraint touching k with a single constraint
over the rest of k's scope-neighbourhood whose entry is the best total those
constraints can reach over the values of k.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .search import OrderSpec, Step, Trace, verify_trace
from .treedepth import TreedepthDecomposition, constraint_graph, validate_decomposition
from .vcsp import Constraint, Instance, InstanceError, checked, fitness


@dataclass(frozen=True)
class SmoothingRecord:
    removed_var: int
    neighborhood: tuple[int, ...]  # NS(k) minus k, ascending
    new_constraint: Constraint
    removed_constraints: tuple[Constraint, ...]

    def describe(self) -> list[str]:
        return [
            f"removed_var={self.removed_var}",
            "neighborhood=" + ",".join(map(str, self.neighborhood)),
            f"removed_constraints={len(self.removed_constraints)}",
            f"new_arity={self.new_constraint.arity}",
            "new_table=" + ",".join(map(str, self.new_constraint.table)),
        ]


def scope_neighborhood(instance: Instance, k: int) -> frozenset[int]:
    """Union of the scopes containing k, including k itself."""
    if k not in instance.domains:
        raise InstanceError(f"unknown variable {k}")
    out = {k}
    for ci in instance.constraints_of[k]:
        out.update(instance.constraints[ci].scope)
    return frozenset(out)


def smooth(instance: Instance, k: int) -> tuple[Instance, SmoothingRecord]:
    nbhd = tuple(sorted(scope_neighborhood(instance, k) - {k}))
    touching = set(instance.constraints_of[k])
    removed = tuple(instance.constraints[i] for i in sorted(touching))
    kept = tuple(c for i, c in enumerate(instance.constraints) if i not in touching)

    dims = tuple(instance.domains[v] for v in nbhd)
    table = []
    x = {}
    for values in itertools.product(*(range(d) for d in dims)):
        x.update(zip(nbhd, values))
        best = None
        for a in range(instance.domains[k]):
            x[k] = a
            total = 0
            for c in removed:
                total = checked(total + c.value(x))
            if best is None or total > best:
                best = total
        table.append(best)
    new = Constraint(nbhd, dims, tuple(table))

    domains = {v: d for v, d in instance.domains.items() if v != k}
    result = Instance(domains, kept + (new,), instance.comments + (f"smoothed out {k}",))
    return result, SmoothingRecord(k, nbhd, new, removed)


def project_sequence(trace: Trace, k: int, instance: Optional[Instance] = None) -> Trace:
    """Drop variable k from a step-sequence: p ⊖ k.

    When the smoothed instance is given, fitness values are recomputed in it;
    otherwise they are left unset.
    """
    if k not in trace.start:
        raise InstanceError(f"variable {k} not in trace")
    start = {v: a for v, a in trace.start.items() if v != k}
    steps = [s for s in trace.steps if s.var != k]
    if instance is None:
        return Trace(start, [Step(s.var, s.old, s.new, None) for s in steps])
    x = dict(start)
    f0 = fitness(instance, x)
    out = []
    for s in steps:
        x[s.var] = s.new
        out.append(Step(s.var, s.old, s.new, fitness(instance, x)))
    return Trace(start, out, f0)


@dataclass
class SmoothingReport:
    """Verdicts for one (instance, leaf, ordered ascent) triple.

    ``verdicts`` maps L1, P1, P2 and (for step-steepest ascents) P3, P4 to
    True/False. ``ns_sum`` is the flip total over k's scope-neighbourhood,
    kept for comparison with the ancestor sum used by the bounds.

    ``projection_increasing`` is the weaker fact that every projected step
    strictly raises the smoothed fitness. It can hold while P1 fails: the
    projected endpoint need not be a local solution of the smoothed
    instance, and variables next to k can become improvable there earlier.
    """

    k: int
    verdicts: dict[str, bool]
    flips_k: int
    ancestor_sum: int
    ns_sum: int
    details: dict[str, str]
    projection_increasing: bool = True

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())


def verify_smoothing(
    instance: Instance,
    t: TreedepthDecomposition,
    k: int,
    trace: Trace,
    step_steepest: Optional[bool] = None,
) -> SmoothingReport:
    if k not in t.vertices or t.children[k]:
        raise ValueError(f"{k} is not a leaf of the decomposition")
    order = OrderSpec.descendant(t)
    steep_check = verify_trace(instance, trace, order=order, step_steepest=True)
    if not (steep_check["ascent"].passed and steep_check["ordered"].passed):
        raise ValueError("trace is not a ≺_T-ordered ascent")
    if step_steepest is None:
        step_steepest = steep_check["step_steepest"].passed

    smoothed, _ = smooth(instance, k)
    t_minus = t.without_leaf(k)
    verdicts: dict[str, bool] = {}
    details: dict[str, str] = {}

    ok, edge = validate_decomposition(constraint_graph(smoothed), t_minus)
    verdicts["L1"] = ok
    if not ok:
        details["L1"] = f"edge {edge} not ancestor-descendant in T - {{{k}}}"

    projected = project_sequence(trace, k, smoothed)
    rep = verify_trace(
        smoothed, projected, order=OrderSpec.descendant(t_minus), step_steepest=step_steepest
    )
    verdicts["P1"] = rep["ascent"].passed and rep["ordered"].passed
    if not verdicts["P1"]:
        details["P1"] = "; ".join(
            r.reason for r in (rep["ascent"], rep["ordered"]) if not r.passed and r.reason
        )
    fs = [projected.start_fitness] + [s.fitness for s in projected.steps]
    increasing = all(a < b for a, b in zip(fs, fs[1:]))
    if projected.length != trace.length - trace.flip_counts[k]:
        verdicts["P1"] = False
        details["P1"] = "projected length differs from |p| - |p|_k"

    flips = trace.flip_counts
    anc = sum(flips[j] for j in t.ancestors(k))
    ns = sum(flips[j] for j in instance.neighbours[k])
    dk = instance.domains[k]
    verdicts["P2"] = flips[k] <= (dk - 1) * (1 + anc)
    if not verdicts["P2"]:
        details["P2"] = f"|p|_k = {flips[k]} > {(dk - 1) * (1 + anc)}"
    if step_steepest:
        verdicts["P3"] = rep["step_steepest"].passed
        if not verdicts["P3"]:
            details["P3"] = rep["step_steepest"].reason
        verdicts["P4"] = flips[k] <= 1 + anc
        if not verdicts["P4"]:
            details["P4"] = f"|p|_k = {flips[k]} > {1 + anc}"
    return SmoothingReport(k, verdicts, flips[k], anc, ns, details, increasing)


def smooth_all(instance: Instance, order) -> Instance:
    """Smooth out variables one after another in the given order."""
    for k in order:
        instance, _ = smooth(instance, k)
    return instance


def leaf_order(t: TreedepthDecomposition) -> list[int]:
    """Deepest-first elimination order in which every variable is a leaf when removed."""
    return sorted(t.vertices, key=lambda v: (-t.depth[v], v))
