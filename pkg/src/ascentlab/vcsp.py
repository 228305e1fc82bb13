"""Valued CSP instances, assignments, fitness and single-variable moves.

Domain values are 0-based integers. A constraint stores a dense table over
its (sorted) scope, indexed in mixed radix with the first scope variable as
the most significant digit. All arithmetic on table entries and fitness
sums is checked against the signed 64-bit range.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

Assignment = dict  # VariableId -> domain value


class FitnessOverflowError(OverflowError):
    """A table entry or fitness sum left the signed 64-bit range."""


class InstanceError(ValueError):
    """Structurally invalid instance or assignment."""


class VcspParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def checked(value: int) -> int:
    if value < INT64_MIN or value > INT64_MAX:
        raise FitnessOverflowError(f"value {value} outside signed 64-bit range")
    return value


@dataclass(frozen=True)
class Constraint:
    scope: tuple[int, ...]
    dims: tuple[int, ...]
    table: tuple[int, ...]

    def __post_init__(self):
        scope = tuple(self.scope)
        if list(scope) != sorted(set(scope)):
            raise InstanceError(f"constraint scope {scope} must be sorted and distinct")
        if len(self.dims) != len(scope):
            raise InstanceError("dims must match scope length")
        size = 1
        for d in self.dims:
            if d < 1:
                raise InstanceError("domain sizes must be >= 1")
            size *= d
        if len(self.table) != size:
            raise InstanceError(
                f"table for scope {scope} has {len(self.table)} entries, expected {size}"
            )
        for v in self.table:
            checked(v)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "table", tuple(self.table))

    @property
    def arity(self) -> int:
        return len(self.scope)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out = []
        s = 1
        for d in reversed(self.dims):
            out.append(s)
            s *= d
        return tuple(reversed(out))

    def index(self, x: Mapping[int, int]) -> int:
        idx = 0
        for var, d in zip(self.scope, self.dims):
            idx = idx * d + x[var]
        return idx

    def value(self, x: Mapping[int, int]) -> int:
        return self.table[self.index(x)]

    def tuples(self) -> Iterator[tuple[int, ...]]:
        """All value tuples over the scope, in table order."""
        return itertools.product(*(range(d) for d in self.dims))

    @classmethod
    def from_function(cls, scope, dims, fn) -> "Constraint":
        """Build a table by calling ``fn(*values)`` for each tuple in scope order."""
        order = sorted(range(len(scope)), key=lambda i: scope[i])
        sscope = tuple(scope[i] for i in order)
        sdims = tuple(dims[i] for i in order)
        table = []
        for tup in itertools.product(*(range(d) for d in sdims)):
            orig = [0] * len(scope)
            for pos, i in enumerate(order):
                orig[i] = tup[pos]
            table.append(fn(*orig))
        return cls(sscope, sdims, tuple(table))


@dataclass(frozen=True)
class Instance:
    """A VCSP: active variables with domain sizes plus a list of constraints.

    ``domains`` maps each active variable id to its domain size. Ids are
    kept as-is through smoothing, so they need not be contiguous.
    """

    domains: Mapping[int, int]
    constraints: tuple[Constraint, ...] = ()
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        doms = dict(sorted(self.domains.items()))
        for var, d in doms.items():
            if not isinstance(var, int) or var < 1:
                raise InstanceError(f"variable id {var!r} must be a positive integer")
            if d < 1:
                raise InstanceError(f"variable {var} has domain size {d} < 1")
        for c in self.constraints:
            for var, d in zip(c.scope, c.dims):
                if var not in doms:
                    raise InstanceError(f"constraint scope references unknown variable {var}")
                if doms[var] != d:
                    raise InstanceError(f"constraint dims disagree with domain of variable {var}")
        object.__setattr__(self, "domains", doms)
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def variables(self) -> list[int]:
        return list(self.domains)

    @property
    def n(self) -> int:
        return len(self.domains)

    @property
    def max_domain(self) -> int:
        return max(self.domains.values(), default=1)

    @property
    def is_boolean(self) -> bool:
        return all(d == 2 for d in self.domains.values())

    @cached_property
    def constraints_of(self) -> dict[int, tuple[int, ...]]:
        """Variable id -> indices of constraints whose scope contains it."""
        out: dict[int, list[int]] = {v: [] for v in self.domains}
        for i, c in enumerate(self.constraints):
            for var in c.scope:
                out[var].append(i)
        return {v: tuple(ix) for v, ix in out.items()}

    @cached_property
    def neighbours(self) -> dict[int, frozenset[int]]:
        """Variable id -> other variables sharing a scope with it."""
        out: dict[int, set[int]] = {v: set() for v in self.domains}
        for c in self.constraints:
            for var in c.scope:
                out[var].update(c.scope)
        return {v: frozenset(s - {v}) for v, s in out.items()}

    def with_constraints(self, extra: Iterable[Constraint]) -> "Instance":
        return Instance(self.domains, self.constraints + tuple(extra), self.comments)

    def zeros(self) -> Assignment:
        return {v: 0 for v in self.domains}

    def assignments(self) -> Iterator[Assignment]:
        """Every assignment, in lexicographic order over ascending ids."""
        vars_ = self.variables
        for values in itertools.product(*(range(self.domains[v]) for v in vars_)):
            yield dict(zip(vars_, values))

    def space_size(self) -> int:
        size = 1
        for d in self.domains.values():
            size *= d
        return size

    def check_assignment(self, x: Mapping[int, int]) -> None:
        if set(x) != set(self.domains):
            missing = set(self.domains) - set(x)
            extra = set(x) - set(self.domains)
            raise InstanceError(
                f"assignment does not match active variables (missing {sorted(missing)}, extra {sorted(extra)})"
            )
        for var, val in x.items():
            if not 0 <= val < self.domains[var]:
                raise InstanceError(f"value {val} out of range for variable {var}")


class Move(NamedTuple):
    var: int
    new_value: int
    delta: int


def fitness(instance: Instance, x: Mapping[int, int]) -> int:
    total = 0
    for c in instance.constraints:
        try:
            total = checked(total + c.value(x))
        except KeyError as exc:
            raise InstanceError(f"assignment has no value for variable {exc.args[0]}") from None
        except IndexError:
            raise InstanceError(f"table index out of range for scope {c.scope}") from None
    return total


def delta_fitness(instance: Instance, x: Mapping[int, int], var: int, new_value: int) -> int:
    """fitness(y) - fitness(x) where y is x with ``var`` set to ``new_value``."""
    if var not in instance.domains:
        raise InstanceError(f"unknown variable {var}")
    if not 0 <= new_value < instance.domains[var]:
        raise InstanceError(f"value {new_value} out of range for variable {var}")
    old = x[var]
    if new_value == old:
        return 0
    delta = 0
    for ci in instance.constraints_of[var]:
        c = instance.constraints[ci]
        try:
            idx = c.index(x)
        except KeyError as exc:
            raise InstanceError(f"assignment has no value for variable {exc.args[0]}") from None
        shift = (new_value - old) * c.strides[c.scope.index(var)]
        delta = checked(delta + c.table[idx + shift] - c.table[idx])
    return delta


def value_deltas(instance: Instance, x: Mapping[int, int], var: int) -> list[int]:
    """Fitness change for every value of ``var`` (0 at the current value)."""
    dom = instance.domains[var]
    old = x[var]
    out = [0] * dom
    for ci in instance.constraints_of[var]:
        c = instance.constraints[ci]
        idx = c.index(x)
        stride = c.strides[c.scope.index(var)]
        base = c.table[idx]
        for a in range(dom):
            if a != old:
                out[a] = checked(out[a] + c.table[idx + (a - old) * stride] - base)
    return out


def improving_moves(instance: Instance, x: Mapping[int, int]) -> list[Move]:
    """All strictly improving single-variable changes, by var then value."""
    moves = []
    for var in instance.domains:
        for a, d in enumerate(value_deltas(instance, x, var)):
            if d > 0:
                moves.append(Move(var, a, d))
    return moves


def is_local_solution(instance: Instance, x: Mapping[int, int]) -> bool:
    for var in instance.domains:
        if any(d > 0 for d in value_deltas(instance, x, var)):
            return False
    return True


# --- file format -----------------------------------------------------------


def write_instance(instance: Instance, header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" for h in itertools.chain(instance.comments, header)]
    lines.append(f"VCSP {instance.n}")
    for var, d in instance.domains.items():
        lines.append(f"VAR {var} {d}")
    for c in instance.constraints:
        lines.append(" ".join(["CON", str(c.arity), *map(str, c.scope)]))
        for tup, value in zip(c.tuples(), c.table):
            if value != 0:
                lines.append(" ".join(["VAL", *map(str, tup), str(value)]))
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    domains: dict[int, int] = {}
    declared = None
    constraints: list[Constraint] = []
    comments: list[str] = []
    current = None  # (lineno, scope, dims, order, entries)

    def close():
        if current is None:
            return
        _, scope, dims, order, entries = current
        sdims = tuple(dims[i] for i in order)
        strides = []
        s = 1
        for d in reversed(sdims):
            strides.append(s)
            s *= d
        strides.reverse()
        table = [0] * s
        for tup, value in entries.items():
            idx = sum(tup[i] * st for i, st in zip(order, strides))
            table[idx] = value
        constraints.append(Constraint(tuple(scope[i] for i in order), sdims, tuple(table)))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if declared is None:
                comments.append(line[1:].strip())
            continue
        tokens = line.split("#", 1)[0].split()
        kw, args = tokens[0], tokens[1:]
        try:
            nums = [int(a) for a in args]
        except ValueError:
            raise VcspParseError(lineno, f"non-integer field in {line!r}") from None

        if kw == "VCSP":
            if declared is not None:
                raise VcspParseError(lineno, "duplicate VCSP header")
            if len(nums) != 1 or nums[0] < 0:
                raise VcspParseError(lineno, "expected 'VCSP <num_vars>'")
            declared = nums[0]
            continue
        if declared is None:
            raise VcspParseError(lineno, "missing VCSP header")
        if kw == "VAR":
            if current is not None:
                raise VcspParseError(lineno, "VAR after first CON")
            if len(nums) != 2:
                raise VcspParseError(lineno, "expected 'VAR <id> <domain_size>'")
            var, d = nums
            if var < 1 or d < 1:
                raise VcspParseError(lineno, "variable id and domain size must be positive")
            if var in domains:
                raise VcspParseError(lineno, f"duplicate variable {var}")
            domains[var] = d
        elif kw == "CON":
            close()
            if not nums or nums[0] != len(nums) - 1:
                raise VcspParseError(lineno, "expected 'CON <arity> <id_1> ... <id_k>'")
            scope = nums[1:]
            if len(set(scope)) != len(scope):
                raise VcspParseError(lineno, "repeated variable in scope")
            for var in scope:
                if var not in domains:
                    raise VcspParseError(lineno, f"scope references unknown variable {var}")
            dims = [domains[v] for v in scope]
            order = sorted(range(len(scope)), key=lambda i: scope[i])
            current = (lineno, scope, dims, order, {})
        elif kw == "VAL":
            if current is None:
                raise VcspParseError(lineno, "VAL before any CON")
            _, scope, dims, _, entries = current
            if len(nums) != len(scope) + 1:
                raise VcspParseError(
                    lineno, f"VAL tuple has {len(nums) - 1} values, constraint arity is {len(scope)}"
                )
            tup, value = tuple(nums[:-1]), nums[-1]
            for a, d in zip(tup, dims):
                if not 0 <= a < d:
                    raise VcspParseError(lineno, f"domain value {a} out of range")
            if tup in entries:
                raise VcspParseError(lineno, f"duplicate VAL for tuple {tup}")
            try:
                entries[tup] = checked(value)
            except FitnessOverflowError as exc:
                raise VcspParseError(lineno, str(exc)) from None
        else:
            raise VcspParseError(lineno, f"unknown record {kw!r}")
    close()
    if declared is None:
        raise VcspParseError(0, "missing VCSP header")
    if declared != len(domains):
        raise VcspParseError(0, f"header declares {declared} variables, found {len(domains)}")
    return Instance(domains, tuple(constraints), tuple(comments))
