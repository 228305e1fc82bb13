"""Instance generators: stars, the recursive weighted chain, snake blocks, random.

Also a depth-first search for snakes (induced paths) in the hypercube.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .vcsp import Constraint, Instance, checked

EXACT_SNAKE_MAX_DIM = 6


def _unary(var: int, table) -> Constraint:
    return Constraint((var,), (2,), tuple(table))


def _binary(a: int, b: int, table) -> Constraint:
    """Boolean binary constraint with ``a`` selecting the row and ``b`` the column."""
    if a < b:
        return Constraint((a, b), (2, 2), tuple(table))
    t = table
    return Constraint((b, a), (2, 2), (t[0], t[2], t[1], t[3]))


def _center_constraints(left, center, right, weight, n, with_left_unary):
    """Constraints of one star-shaped gadget with XOR weight ``weight``.

    ``left`` are listed left to right; the parity rule uses 1-based position.
    """
    out = []
    for w in right:
        out.append(_binary(center, w, (0, weight, weight, 0)))
    out.append(_unary(center, (0, checked(n * weight + 1))))
    big = checked(2 * n * weight + 2)
    for pos, u in enumerate(left, start=1):
        if (n - pos) % 2 == 0:
            out.append(_binary(u, center, (0, 0, big, 0)))
        else:
            out.append(_binary(u, center, (0, 0, 0, big)))
    if with_left_unary:
        out += [_unary(u, (0, 1)) for u in left]
    return out


def gen_star(n: int) -> Instance:
    """Treedepth-1 star on 2n+1 Boolean variables: L = 1..n, center n+1, R = n+2..2n+1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    left = list(range(1, n + 1))
    center = n + 1
    right = list(range(n + 2, 2 * n + 2))
    cons = _center_constraints(left, center, right, 1, n, with_left_unary=True)
    return Instance(
        {v: 2 for v in range(1, 2 * n + 2)},
        tuple(cons),
        (f"generator star n={n}",),
    )


def recursive_weights(n: int, count: int) -> list[int]:
    """w_0 = 1, w_{k+1} = 2n*w_k + 3; returns the first ``count`` entries."""
    w = [1]
    while len(w) < count:
        w.append(checked(2 * n * w[-1] + 3))
    return w[:count]


def gen_recursive(n: int, d: int) -> tuple[Instance, list[int]]:
    """2^d blocks of n variables separated by 2^d - 1 centers, ids ascending left to right.

    Centers are named c_1..c_m from the right; c_{k+1} uses weight w_k, so
    the rightmost center carries the star weights. Each center treats the
    block before it as its left set and the block after it as its right set.
    Only the leftmost block carries the extra (0;1) unaries.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    blocks = 2**d
    m = blocks - 1
    w = recursive_weights(n, m)
    stride = n + 1
    block_vars = [list(range(b * stride + 1, b * stride + n + 1)) for b in range(blocks)]
    centers = [b * stride + n + 1 for b in range(m)]  # left to right
    cons = []
    for i, c in enumerate(centers):
        k = m - 1 - i  # centers[i] is c_{k+1}
        cons += _center_constraints(block_vars[i], c, block_vars[i + 1], w[k], n, with_left_unary=(i == 0))
    nvars = blocks * (n + 1) - 1
    inst = Instance(
        {v: 2 for v in range(1, nvars + 1)},
        tuple(cons),
        (f"generator recursive n={n} d={d}", "weights " + " ".join(f"w{k}={x}" for k, x in enumerate(w))),
    )
    return inst, w


# --- snakes ----------------------------------------------------------------


@dataclass(frozen=True)
class SnakePath:
    dimension: int
    vertices: tuple[int, ...]  # bit j of a vertex is coordinate j
    optimal: bool = True

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def bitstrings(self) -> list[str]:
        return ["".join(str((v >> j) & 1) for j in range(self.dimension)) for v in self.vertices]

    def is_valid(self) -> bool:
        vs = self.vertices
        if not vs or vs[0] != 0 or len(set(vs)) != len(vs):
            return False
        if any(v >> self.dimension for v in vs):
            return False
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                adjacent = bin(vs[i] ^ vs[j]).count("1") == 1
                if adjacent != (j == i + 1):
                    return False
        return True


def snake_lower_bound(dimension: int) -> float:
    return 9 / 64 * 2**dimension


def find_snake(dimension: int, mode: str = "exact", limit: Optional[int] = None) -> SnakePath:
    """Longest snake from the all-zero head found by depth-first search.

    Symmetry breaking: a step may only enter a new coordinate if it is the
    lowest unused one (so the first step flips bit 0). In ``budgeted`` mode
    the search stops after ``limit`` nodes and returns the best path found
    with ``optimal=False``; ``exact`` mode is limited to small dimensions.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if mode == "exact":
        if dimension > EXACT_SNAKE_MAX_DIM:
            raise ValueError(f"exact snake search supports dimension <= {EXACT_SNAKE_MAX_DIM}")
        limit = None
    elif mode == "budgeted":
        if limit is None or limit < 1:
            raise ValueError("budgeted mode needs a positive node limit")
    else:
        raise ValueError(f"unknown mode {mode!r}")

    closed = [0] * (1 << dimension)  # vertex plus its hypercube neighbours
    for v in range(1 << dimension):
        m = 1 << v
        for j in range(dimension):
            m |= 1 << (v ^ (1 << j))
        closed[v] = m

    path = [0]
    best = [0]
    nodes = 0
    exhausted = False

    def dfs(tail: int, forbidden: int, used_dims: int):
        # forbidden: closed neighbourhoods of every path vertex except the tail
        nonlocal best, nodes, exhausted
        nodes += 1
        if limit is not None and nodes > limit:
            exhausted = True
            return
        if len(path) > len(best):
            best = list(path)
        ahead = forbidden | closed[tail]
        for j in range(dimension):
            bit = 1 << j
            w = tail ^ bit
            if not forbidden >> w & 1:
                path.append(w)
                dfs(w, ahead, used_dims | bit)
                path.pop()
                if exhausted:
                    return
            if not used_dims & bit:
                break  # only the lowest unused coordinate may be entered

    dfs(0, 0, 0)
    return SnakePath(dimension, tuple(best), optimal=not exhausted)


def snake_table(snake: SnakePath) -> tuple[int, ...]:
    """Dense table over a block: codeword -> path position, anything else -> 0.

    The first block variable is bit 0 of the vertex and the most significant
    table digit.
    """
    size = snake.dimension
    table = [0] * (1 << size)
    for pos, v in enumerate(snake.vertices):
        idx = 0
        for j in range(size):
            idx = idx * 2 + ((v >> j) & 1)
        table[idx] = pos
    return tuple(table)


def gen_snake_blocks(num_blocks: int, d: int, snake: SnakePath) -> Instance:
    """``num_blocks`` disjoint blocks of d+1 Boolean variables, one snake constraint each."""
    if snake.dimension != d + 1:
        raise ValueError(f"snake dimension {snake.dimension} != d+1 = {d + 1}")
    if num_blocks < 1:
        raise ValueError("num_blocks must be >= 1")
    if not snake.is_valid():
        raise ValueError("snake is not an induced path from the all-zero head")
    size = d + 1
    table = snake_table(snake)
    cons = []
    for b in range(num_blocks):
        scope = tuple(range(b * size + 1, b * size + size + 1))
        cons.append(Constraint(scope, (2,) * size, table))
    return Instance(
        {v: 2 for v in range(1, num_blocks * size + 1)},
        tuple(cons),
        (
            f"generator snake-blocks blocks={num_blocks} d={d}",
            "snake " + " ".join(snake.bitstrings()),
        ),
    )


def gen_random(
    n: int, v: int, edge_probability: float, value_range: int, seed: int
) -> Instance:
    """Random instance: a unary constraint per variable plus binary constraints
    on G(n, p) edges, all entries uniform in [-value_range, value_range]."""
    if not 0 <= edge_probability <= 1:
        raise ValueError("edge_probability must lie in [0, 1]")
    if n < 0 or v < 1 or value_range < 0:
        raise ValueError("need n >= 0, v >= 1, value_range >= 0")
    rng = random.Random(seed)

    def entries(count):
        return tuple(rng.randint(-value_range, value_range) for _ in range(count))

    cons = [Constraint((i,), (v,), entries(v)) for i in range(1, n + 1)]
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < edge_probability:
                cons.append(Constraint((i, j), (v, v), entries(v * v)))
    return Instance(
        {i: v for i in range(1, n + 1)},
        tuple(cons),
        (f"generator random n={n} v={v} p={edge_probability} w={value_range} seed={seed}",),
    )


def snake_blocks_bound(num_blocks: int, d: int) -> float:
    """9/(64(d+1)) * 2^(d+1) * n for n = num_blocks*(d+1) Boolean variables."""
    n = num_blocks * (d + 1)
    return 9 / (64 * (d + 1)) * 2 ** (d + 1) * n


def snake_meets_bound(snake: SnakePath) -> bool:
    return snake.length >= math.ceil(snake_lower_bound(snake.dimension))
