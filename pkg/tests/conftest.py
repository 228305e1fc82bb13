import itertools
import random

import pytest

from ascentlab.vcsp import Constraint, Instance

_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.get_closest_marker("acceptance") and rep.when == "call":
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _criteria.append((doc, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for doc, outcome in _criteria:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {doc}")


def random_general_instance(rng: random.Random, n: int, max_arity: int = 3, max_dom: int = 3,
                            num_constraints: int = None, value_range: int = 20) -> Instance:
    """Arbitrary small instance: mixed domain sizes, arities 0..max_arity."""
    domains = {v: rng.randint(1, max_dom) for v in range(1, n + 1)}
    if num_constraints is None:
        num_constraints = rng.randint(0, 2 * n + 1)
    cons = []
    for _ in range(num_constraints):
        arity = rng.randint(0, min(max_arity, n))
        scope = tuple(sorted(rng.sample(range(1, n + 1), arity)))
        dims = tuple(domains[v] for v in scope)
        size = 1
        for d in dims:
            size *= d
        cons.append(Constraint(scope, dims, tuple(rng.randint(-value_range, value_range) for _ in range(size))))
    return Instance(domains, tuple(cons))


def brute_fitness(instance: Instance, x) -> int:
    """Fitness by direct tuple lookup, independent of table strides."""
    total = 0
    for c in instance.constraints:
        tup = tuple(x[v] for v in c.scope)
        for idx, t in enumerate(itertools.product(*(range(d) for d in c.dims))):
            if t == tup:
                total += c.table[idx]
                break
    return total


def star_reference(n: int, x) -> int:
    """The star landscape evaluated straight from its matrices."""
    c = n + 1
    f = (n + 1) if x[c] == 1 else 0
    for w in range(n + 2, 2 * n + 2):
        f += 1 if x[c] != x[w] else 0
    for u in range(1, n + 1):
        if x[u] == 1:
            f += 1
            if (n - u) % 2 == 0 and x[c] == 0:
                f += 2 * n + 2
            if (n - u) % 2 == 1 and x[c] == 1:
                f += 2 * n + 2
    return f


def neighbours(instance: Instance, x):
    for v, d in instance.domains.items():
        for a in range(d):
            if a != x[v]:
                y = dict(x)
                y[v] = a
                yield v, a, y


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def brute_force_treedepth_table(n: int) -> list:
    """Min forest height for every labeled graph on vertices 0..n-1.

    Enumerates every rooted forest (parent maps without cycles), records
    which vertex pairs are ancestor-related, then takes the minimum height
    over forests whose allowed-pair set covers each edge set.
    Indexed by edge bitmask over ``_pairs(n)``.
    """
    pairs = _pairs(n)
    bit = {p: 1 << i for i, p in enumerate(pairs)}
    full = (1 << len(pairs)) - 1
    best = [None] * (full + 1)
    for parent in itertools.product(range(-1, n), repeat=n):
        if any(parent[v] == v for v in range(n)):
            continue
        depth = [None] * n
        ok = True
        allowed = 0
        for v in range(n):
            seen = set()
            u, chain = v, []
            while parent[u] != -1:
                if u in seen:
                    ok = False
                    break
                seen.add(u)
                chain.append(parent[u])
                u = parent[u]
            if not ok:
                break
            depth[v] = len(chain)
            for a in chain:
                allowed |= bit[(min(a, v), max(a, v))]
        if not ok:
            continue
        h = max(depth)
        if best[allowed] is None or h < best[allowed]:
            best[allowed] = h
    # push minima down from supersets to subsets
    for i in range(len(pairs)):
        b = 1 << i
        for mask in range(full + 1):
            if mask & b and best[mask] is not None:
                sub = mask ^ b
                if best[sub] is None or best[mask] < best[sub]:
                    best[sub] = best[mask]
    return best


def edge_mask(n, edges):
    idx = {p: i for i, p in enumerate(_pairs(n))}
    m = 0
    for u, v in edges:
        m |= 1 << idx[(min(u, v), max(u, v))]
    return m
