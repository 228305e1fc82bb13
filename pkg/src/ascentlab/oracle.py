"""Brute-force ground truth for small instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .smoothing import scope_neighborhood, smooth
from .vcsp import Instance, fitness, value_deltas

DEFAULT_MAX_COUNT = 10**7
DEFAULT_MAX_DEPTH = 10**6
DEFAULT_MAX_STATES = 10**6
DEFAULT_LOCAL_SPACE = 2**24
DEFAULT_SMOOTHING_SPACE = 2**20


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass
class AscentStats:
    min_length: int
    max_length: int
    count: Optional[int]  # None when the path count exceeded max_count
    reached_peaks: set = field(default_factory=set)  # value tuples over ascending ids
    states: int = 0

    @property
    def truncated(self) -> bool:
        return self.count is None

    def record(self) -> dict:
        return {
            "min_length": self.min_length,
            "max_length": self.max_length,
            "count": "truncated" if self.count is None else self.count,
            "peaks": len(self.reached_peaks),
            "states": self.states,
        }


def enumerate_ascents(
    instance: Instance,
    start: Mapping[int, int],
    max_count: int = DEFAULT_MAX_COUNT,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_states: int = DEFAULT_MAX_STATES,
) -> AscentStats:
    """Exact shortest/longest ascent length and number of ascents from ``start``.

    Improving moves form a DAG over assignments (fitness strictly rises), so
    path lengths and path counts come from a memoised pass over reachable
    states. ``count`` counts distinct ascents (paths), not states.
    """
    instance.check_assignment(start)
    vars_ = instance.variables
    memo: dict[tuple, tuple[int, int, int]] = {}
    peaks: set = set()

    def successors(state):
        x = dict(zip(vars_, state))
        out = []
        for i, v in enumerate(vars_):
            for a, d in enumerate(value_deltas(instance, x, v)):
                if d > 0:
                    out.append(state[:i] + (a,) + state[i + 1:])
        return out

    root = tuple(start[v] for v in vars_)
    # Iterative post-order DFS; the stack is always one path of the DAG, so
    # a state can never appear on it twice.
    stack = [[root, successors(root), 0]]
    while stack:
        frame = stack[-1]
        state, succ, i = frame
        if i < len(succ):
            frame[2] += 1
            nxt = succ[i]
            if nxt not in memo:
                if len(memo) + len(stack) >= max_states:
                    raise SearchSpaceTooLarge(f"more than {max_states} states reachable")
                if len(stack) >= max_depth:
                    raise SearchSpaceTooLarge(f"ascent deeper than {max_depth}")
                stack.append([nxt, successors(nxt), 0])
            continue
        stack.pop()
        if not succ:
            memo[state] = (0, 0, 1)
            peaks.add(state)
        else:
            memo[state] = (
                min(memo[s][0] for s in succ) + 1,
                max(memo[s][1] for s in succ) + 1,
                sum(memo[s][2] for s in succ),
            )
    lo, hi, cnt = memo[root]
    return AscentStats(lo, hi, cnt if cnt <= max_count else None, peaks, len(memo))


def enumerate_local_solutions(instance: Instance, max_space: int = DEFAULT_LOCAL_SPACE) -> list[dict]:
    if instance.space_size() > max_space:
        raise SearchSpaceTooLarge(f"{instance.space_size()} assignments exceeds {max_space}")
    out = []
    for x in instance.assignments():
        if all(max(value_deltas(instance, x, v)) <= 0 for v in instance.domains):
            out.append(x)
    return out


def smoothing_oracle_check(instance: Instance, k: int, max_space: int = DEFAULT_SMOOTHING_SPACE) -> bool:
    """Check the max-identity of smoothing by full fitness evaluation.

    All remaining variables are enumerated when the space fits under
    ``max_space``; otherwise only the neighbourhood of k varies and the
    rest stay at 0, which is equivalent because every other constraint
    appears unchanged on both sides.
    """
    nbhd = sorted(scope_neighborhood(instance, k) - {k})
    ns_space = 1
    for v in nbhd:
        ns_space *= instance.domains[v]
    if ns_space * instance.domains[k] > max_space:
        raise SearchSpaceTooLarge(f"neighbourhood space {ns_space} too large")
    smoothed, _ = smooth(instance, k)
    rest = [v for v in instance.variables if v != k]
    full = instance.space_size() // instance.domains[k]
    vary = rest if full <= max_space else nbhd
    fixed = {v: 0 for v in rest if v not in vary}
    for values in itertools.product(*(range(instance.domains[v]) for v in vary)):
        y = dict(fixed)
        y.update(zip(vary, values))
        best = max(fitness(instance, {**y, k: a}) for a in range(instance.domains[k]))
        if fitness(smoothed, y) != best:
            return False
    return True


def max_fitness(instance: Instance) -> int:
    """Global maximum by exhaustive evaluation."""
    return max(fitness(instance, x) for x in instance.assignments())
