"""Ascent engines, trace verification and flip-count bound checks."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

from .treedepth import TreedepthDecomposition, constraint_graph, validate_decomposition
from .vcsp import Instance, InstanceError, fitness, value_deltas

STEP_CAP = 10**7


class StepBudgetExhausted(RuntimeError):
    """The ascent hit ``max_steps`` before reaching a local solution.

    ``trace`` holds the prefix walked so far; it is not an ascent.
    """

    def __init__(self, trace: "Trace", max_steps: int):
        super().__init__(f"no local solution within {max_steps} steps")
        self.trace = trace
        self.max_steps = max_steps


@dataclass(frozen=True)
class OrderSpec:
    """A strict partial order ≺ on variable ids; ordered ascents flip a ≺-minimal index.

    kinds:
      ``desc-index``  j ≺ k iff j > k (the ">" order, highest id flips first)
      ``explicit``    a permutation listing ids from ≺-least to ≺-greatest
      ``tdd``         j ≺ k iff j is a strict descendant of k in the decomposition
    """

    kind: str
    permutation: Optional[tuple[int, ...]] = None
    decomposition: Optional[TreedepthDecomposition] = None

    @classmethod
    def descending(cls) -> "OrderSpec":
        return cls("desc-index")

    @classmethod
    def explicit(cls, permutation: Sequence[int]) -> "OrderSpec":
        return cls("explicit", permutation=tuple(permutation))

    @classmethod
    def descendant(cls, t: TreedepthDecomposition) -> "OrderSpec":
        return cls("tdd", decomposition=t)

    def __post_init__(self):
        if self.kind not in ("desc-index", "explicit", "tdd"):
            raise ValueError(f"unknown order kind {self.kind!r}")
        if self.kind == "explicit":
            if self.permutation is None or len(set(self.permutation)) != len(self.permutation):
                raise ValueError("explicit order needs a permutation of distinct ids")
            object.__setattr__(self, "_rank", {v: i for i, v in enumerate(self.permutation)})
        if self.kind == "tdd" and self.decomposition is None:
            raise ValueError("tdd order needs a decomposition")

    def precedes(self, j: int, k: int) -> bool:
        if self.kind == "desc-index":
            return j > k
        if self.kind == "explicit":
            return self._rank[j] < self._rank[k]
        return self.decomposition.precedes(j, k)

    def minimal(self, candidates: Sequence[int]) -> list[int]:
        """The ≺-minimal members of ``candidates`` in ascending id order."""
        cands = sorted(candidates)
        if not cands:
            return []
        if self.kind == "desc-index":
            return [cands[-1]]
        if self.kind == "explicit":
            return [min(cands, key=self._rank.__getitem__)]
        return [k for k in cands if not any(self.precedes(j, k) for j in cands if j != k)]

    def label(self) -> str:
        return {"desc-index": ">", "explicit": "explicit", "tdd": "tdd"}[self.kind]


MOVE_RULES = ("ordered", "steepest-neighbor", "first-improvement", "random-improvement")
VALUE_RULES = ("any", "best")


@dataclass(frozen=True)
class Policy:
    """How an ascent picks its next move.

    ``value_rule`` is ``any`` (smallest improving value) or ``best``
    (step-steepest: the value maximising fitness over the whole domain).
    Remaining ties go to the smallest variable id, then the smallest value.
    """

    move_rule: str
    order: Optional[OrderSpec] = None
    value_rule: str = "any"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.move_rule not in MOVE_RULES:
            raise ValueError(f"unknown move rule {self.move_rule!r}")
        if self.value_rule not in VALUE_RULES:
            raise ValueError(f"unknown value rule {self.value_rule!r}")
        if (self.move_rule == "ordered") != (self.order is not None):
            raise ValueError("an order is required exactly for the ordered move rule")

    @classmethod
    def ordered(cls, order: OrderSpec, step_steepest: bool = False) -> "Policy":
        return cls("ordered", order, "best" if step_steepest else "any")

    @classmethod
    def from_name(cls, name: str, order: Optional[OrderSpec] = None, seed: Optional[int] = None):
        """CLI policy names: ordered, step-steepest-ordered, steepest, first, random."""
        if name == "ordered":
            return cls("ordered", order, "any")
        if name == "step-steepest-ordered":
            return cls("ordered", order, "best")
        if name == "steepest":
            return cls("steepest-neighbor", value_rule="best")
        if name == "first":
            return cls("first-improvement")
        if name == "random":
            return cls("random-improvement", seed=seed)
        raise ValueError(f"unknown policy {name!r}")

    @property
    def step_steepest(self) -> bool:
        return self.value_rule == "best" or self.move_rule == "steepest-neighbor"

    def label(self) -> str:
        if self.move_rule == "ordered":
            base = "step-steepest-ordered" if self.value_rule == "best" else "ordered"
            return f"{base}[{self.order.label()}]"
        name = {"steepest-neighbor": "steepest", "first-improvement": "first",
                "random-improvement": "random"}[self.move_rule]
        return f"{name}/{self.value_rule}"


class Step(NamedTuple):
    var: int
    old: int
    new: int
    fitness: Optional[int]


@dataclass
class Trace:
    start: dict
    steps: list[Step] = field(default_factory=list)
    start_fitness: Optional[int] = None
    exhausted: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def flip_counts(self) -> dict[int, int]:
        counts = {v: 0 for v in self.start}
        counts.update(Counter(s.var for s in self.steps))
        return counts

    def assignments(self):
        x = dict(self.start)
        yield dict(x)
        for s in self.steps:
            x[s.var] = s.new
            yield dict(x)

    @property
    def final(self) -> dict:
        x = dict(self.start)
        for s in self.steps:
            x[s.var] = s.new
        return x

    @property
    def final_fitness(self) -> Optional[int]:
        if self.steps:
            return self.steps[-1].fitness
        return self.start_fitness

    def to_csv(self) -> str:
        lines = ["step,var,old,new,fitness", f"0,,,,{'' if self.start_fitness is None else self.start_fitness}"]
        for t, s in enumerate(self.steps, start=1):
            lines.append(f"{t},{s.var},{s.old},{s.new},{'' if s.fitness is None else s.fitness}")
        return "\n".join(lines) + "\n"


def default_max_steps(instance: Instance, decomposition: Optional[TreedepthDecomposition] = None) -> int:
    v = instance.max_domain
    if decomposition is not None:
        return min(4 * v ** (decomposition.height + 1) * max(instance.n, 1), STEP_CAP)
    return min(2 * v ** instance.n, STEP_CAP)


def _pick_value(deltas: list[int], rule: str) -> int:
    if rule == "best":
        best = max(deltas)
        return deltas.index(best)
    for a, d in enumerate(deltas):
        if d > 0:
            return a
    raise AssertionError("variable has no improving value")


def ascend(
    instance: Instance,
    start: Mapping[int, int],
    policy: Policy,
    max_steps: Optional[int] = None,
) -> Trace:
    """Run an ascent from ``start`` until a local solution.

    Raises StepBudgetExhausted when ``max_steps`` flips were not enough.
    """
    instance.check_assignment(start)
    if max_steps is None:
        t = policy.order.decomposition if policy.order is not None else None
        max_steps = default_max_steps(instance, t)
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    rng = random.Random(policy.seed) if policy.move_rule == "random-improvement" else None

    x = dict(start)
    f = fitness(instance, x)
    trace = Trace(start=dict(start), start_fitness=f)
    deltas = {v: value_deltas(instance, x, v) for v in instance.domains}
    improvable = {v for v, ds in deltas.items() if max(ds) > 0}

    while improvable:
        if len(trace.steps) >= max_steps:
            trace.exhausted = True
            raise StepBudgetExhausted(trace, max_steps)
        if policy.move_rule == "ordered":
            var = policy.order.minimal(improvable)[0]
            value = _pick_value(deltas[var], policy.value_rule)
        elif policy.move_rule == "first-improvement":
            var = min(improvable)
            value = _pick_value(deltas[var], policy.value_rule)
        elif policy.move_rule == "random-improvement":
            var = rng.choice(sorted(improvable))
            value = _pick_value(deltas[var], policy.value_rule)
        else:
            var, value = max(
                ((v, a) for v in sorted(improvable) for a in range(len(deltas[v]))),
                key=lambda va: (deltas[va[0]][va[1]], -va[0], -va[1]),
            )
        gain = deltas[var][value]
        old = x[var]
        x[var] = value
        f += gain
        trace.steps.append(Step(var, old, value, f))
        for w in (var, *instance.neighbours[var]):
            deltas[w] = value_deltas(instance, x, w)
            if max(deltas[w]) > 0:
                improvable.add(w)
            else:
                improvable.discard(w)
    return trace


@dataclass
class CheckResult:
    passed: bool
    first_violation: Optional[int] = None  # 0-based step index; len(steps) means the final state
    reason: str = ""


@dataclass
class VerifyReport:
    checks: dict[str, CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def __getitem__(self, name: str) -> CheckResult:
        return self.checks[name]


def verify_trace(
    instance: Instance,
    trace: Trace,
    ascent: bool = True,
    order: Optional[OrderSpec] = None,
    step_steepest: bool = False,
) -> VerifyReport:
    """Replay ``trace`` on ``instance`` and check it against the ascent definitions.

    Fitness is always recomputed from the instance; recorded values that
    disagree count as an ascent violation.
    """
    names = []
    if ascent:
        names.append("ascent")
    if order is not None:
        names.append("ordered")
    if step_steepest:
        names.append("step_steepest")
    results = {n: CheckResult(True) for n in names}

    def fail(name, t, reason):
        if name in results and results[name].passed:
            results[name] = CheckResult(False, t, reason)

    try:
        instance.check_assignment(trace.start)
    except InstanceError as exc:
        for n in names:
            fail(n, 0, f"invalid start: {exc}")
        return VerifyReport(results)

    x = dict(trace.start)
    f = fitness(instance, x)
    if trace.start_fitness is not None and trace.start_fitness != f:
        fail("ascent", 0, f"recorded start fitness {trace.start_fitness} != {f}")

    for t, s in enumerate(trace.steps):
        if s.var not in instance.domains or not 0 <= s.new < instance.domains[s.var]:
            for n in names:
                fail(n, t, f"step {t} sets invalid variable/value {s.var}={s.new}")
            return VerifyReport(results)
        if x[s.var] != s.old or s.new == s.old:
            for n in names:
                fail(n, t, f"step {t} is not a single change from the current assignment")
            return VerifyReport(results)

        deltas = value_deltas(instance, x, s.var)
        gain = deltas[s.new]
        if gain <= 0:
            fail("ascent", t, f"step {t} changes fitness by {gain}")
        if s.fitness is not None and s.fitness != f + gain:
            fail("ascent", t, f"step {t} records fitness {s.fitness}, actual {f + gain}")
        if step_steepest and gain < max(deltas):
            fail("step_steepest", t, f"step {t} sets {s.var}={s.new} but a better value exists")
        if order is not None:
            improvable = [v for v in instance.domains if max(value_deltas(instance, x, v)) > 0]
            blockers = [j for j in improvable if j != s.var and order.precedes(j, s.var)]
            if blockers:
                fail("ordered", t, f"step {t} flips {s.var} while {min(blockers)} ≺ {s.var} is improvable")
        x[s.var] = s.new
        f += gain

    if any(max(value_deltas(instance, x, v)) > 0 for v in instance.domains):
        fail("ascent", len(trace.steps), "final assignment is not a local solution")
    return VerifyReport(results)


@dataclass
class BoundReport:
    length: int
    length_bound: int
    flips: dict[int, int]
    flip_bounds: dict[int, int]
    step_steepest: bool
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_bounds(
    trace: Trace,
    t: TreedepthDecomposition,
    v: int,
    step_steepest: bool = False,
    instance: Optional[Instance] = None,
) -> BoundReport:
    """Compare a ≺_T-ordered ascent with the treedepth flip bounds.

    Total length against base**(height+1) * n and each variable at depth d
    against base**(d+1), where base is 2 for step-steepest ascents and the
    maximum domain size ``v`` otherwise.
    """
    if instance is not None:
        ok, edge = validate_decomposition(constraint_graph(instance), t)
        if not ok:
            raise ValueError(f"decomposition is invalid for the instance graph (edge {edge})")
    if set(trace.start) != set(t.vertices):
        raise ValueError("trace and decomposition cover different variables")
    base = 2 if step_steepest else v
    n = len(t.vertices)
    length_bound = base ** (t.height + 1) * n
    flips = trace.flip_counts
    bounds = {k: base ** (t.depth[k] + 1) for k in t.vertices}
    violations = []
    if trace.length > length_bound:
        violations.append(f"length {trace.length} > {length_bound}")
    for k in sorted(flips):
        if flips[k] > bounds[k]:
            violations.append(f"variable {k} at depth {t.depth[k]} flips {flips[k]} > {bounds[k]}")
    return BoundReport(trace.length, length_bound, flips, bounds, step_steepest, violations)
