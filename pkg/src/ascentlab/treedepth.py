"""Constraint graphs and treedepth decompositions.

Heights count edges on the longest root-to-leaf path, so an edgeless graph
has treedepth 0 and a star has treedepth 1. This is one less than the
vertex-counting convention used in much of the graph theory literature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional

from .vcsp import Instance

DEFAULT_EXACT_CAP = 20


class GraphTooLargeError(ValueError):
    """Exact treedepth was requested on a graph above the vertex cap."""


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintGraph:
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        verts = frozenset(self.vertices)
        edges = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on {u}")
            if u not in verts or v not in verts:
                raise ValueError(f"edge {{{u},{v}}} has an endpoint outside the vertex set")
            edges.add((min(u, v), max(u, v)))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", frozenset(edges))

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return {v: tuple(sorted(s)) for v, s in adj.items()}

    def without(self, k: int) -> "ConstraintGraph":
        return ConstraintGraph(
            self.vertices - {k}, frozenset(e for e in self.edges if k not in e)
        )


def constraint_graph(instance: Instance) -> ConstraintGraph:
    edges = set()
    for c in instance.constraints:
        s = c.scope
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                edges.add((s[i], s[j]))
    return ConstraintGraph(frozenset(instance.domains), frozenset(edges))


@dataclass(frozen=True)
class TreedepthDecomposition:
    """Rooted forest given by a parent map (``None`` marks a root)."""

    parent: Mapping[int, Optional[int]]

    def __post_init__(self):
        parent = dict(sorted(self.parent.items()))
        for v, p in parent.items():
            if p is not None and p not in parent:
                raise DecompositionError(f"parent {p} of {v} is not a vertex")
        # acyclicity: every vertex must reach a root
        state: dict[int, int] = {}
        for v in parent:
            path = []
            u: Optional[int] = v
            while u is not None and u not in state:
                state[u] = 1
                path.append(u)
                u = parent[u]
            if u is not None and state[u] == 1:
                raise DecompositionError(f"parent map has a cycle through {u}")
            for w in path:
                state[w] = 2
        object.__setattr__(self, "parent", parent)

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.parent)

    @cached_property
    def depth(self) -> dict[int, int]:
        out: dict[int, int] = {}

        def walk(v):
            chain = []
            while v not in out:
                p = self.parent[v]
                if p is None:
                    out[v] = 0
                    break
                chain.append(v)
                v = p
            d = out[v]
            for w in reversed(chain):
                d += 1
                out[w] = d

        for v in self.parent:
            walk(v)
        return out

    @property
    def height(self) -> int:
        return max(self.depth.values(), default=0)

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {v: [] for v in self.parent}
        for v, p in self.parent.items():
            if p is not None:
                out[p].append(v)
        return {v: tuple(c) for v, c in out.items()}

    @property
    def roots(self) -> list[int]:
        return [v for v, p in self.parent.items() if p is None]

    @property
    def leaves(self) -> list[int]:
        return [v for v, c in self.children.items() if not c]

    def ancestors(self, v: int) -> list[int]:
        """Strict ancestors of ``v``, nearest first."""
        out = []
        p = self.parent[v]
        while p is not None:
            out.append(p)
            p = self.parent[p]
        return out

    @cached_property
    def _ancestor_sets(self) -> dict[int, frozenset[int]]:
        return {v: frozenset(self.ancestors(v)) for v in self.parent}

    def precedes(self, j: int, k: int) -> bool:
        """j ≺_T k: j is a strict descendant of k."""
        return k in self._ancestor_sets[j]

    def without_leaf(self, k: int) -> "TreedepthDecomposition":
        if self.children[k]:
            raise DecompositionError(f"{k} is not a leaf")
        return TreedepthDecomposition({v: p for v, p in self.parent.items() if v != k})


def validate_decomposition(
    g: ConstraintGraph, t: TreedepthDecomposition
) -> tuple[bool, Optional[tuple[int, int]]]:
    """Return (valid, first violating edge) in sorted-edge order."""
    if g.vertices != t.vertices:
        raise DecompositionError("decomposition vertex set differs from graph vertex set")
    for u, v in sorted(g.edges):
        if not (t.precedes(u, v) or t.precedes(v, u)):
            return False, (u, v)
    return True, None


def dfs_decomposition(g: ConstraintGraph, root_choice="min-id") -> TreedepthDecomposition:
    """Depth-first spanning forest, which is always a valid decomposition.

    ``root_choice`` is ``"min-id"``, ``"max-degree"`` (highest degree, then
    smallest id) or an explicit vertex id used as the first root.
    """
    adj = g.adjacency
    if root_choice == "min-id":
        order = sorted(g.vertices)
    elif root_choice == "max-degree":
        order = sorted(g.vertices, key=lambda v: (-len(adj[v]), v))
    elif root_choice in g.vertices:
        order = [root_choice] + sorted(g.vertices - {root_choice})
    else:
        raise ValueError(f"unknown root choice {root_choice!r}")

    parent: dict[int, Optional[int]] = {}
    for r in order:
        if r in parent:
            continue
        parent[r] = None
        stack = [(r, iter(adj[r]))]
        while stack:
            v, it = stack[-1]
            for w in it:
                if w not in parent:
                    parent[w] = v
                    stack.append((w, iter(adj[w])))
                    break
            else:
                stack.pop()
    return TreedepthDecomposition(parent)


def exact_treedepth(
    g: ConstraintGraph, max_vertices: int = DEFAULT_EXACT_CAP
) -> tuple[int, TreedepthDecomposition]:
    """Minimum-height decomposition by memoised recursion over vertex subsets.

    For a connected subset S the (vertex-counted) treedepth is
    1 + min over v of td(S - v); disconnected subsets take the max over
    components. Ties pick the smallest vertex id as root.
    """
    verts = sorted(g.vertices)
    if len(verts) > max_vertices:
        raise GraphTooLargeError(
            f"{len(verts)} vertices exceeds exact cap {max_vertices}; use dfs_decomposition"
        )
    if not verts:
        return 0, TreedepthDecomposition({})
    pos = {v: i for i, v in enumerate(verts)}
    nbr = [0] * len(verts)
    for u, v in g.edges:
        nbr[pos[u]] |= 1 << pos[v]
        nbr[pos[v]] |= 1 << pos[u]

    def components(mask: int) -> list[int]:
        out = []
        while mask:
            low = mask & -mask
            comp = low
            frontier = low
            while frontier:
                b = frontier & -frontier
                frontier ^= b
                new = nbr[b.bit_length() - 1] & mask & ~comp
                comp |= new
                frontier |= new
            out.append(comp)
            mask &= ~comp
        return out

    memo: dict[int, tuple[int, int]] = {}  # connected mask -> (td, root bit)

    def td_connected(mask: int) -> int:
        hit = memo.get(mask)
        if hit is not None:
            return hit[0]
        if mask & (mask - 1) == 0:
            memo[mask] = (1, mask.bit_length() - 1)
            return 1
        best = None
        best_root = -1
        m = mask
        while m:
            b = m & -m
            m ^= b
            rest = mask ^ b
            sub = max(td_connected(c) for c in components(rest))
            if best is None or sub < best:
                best, best_root = sub, b.bit_length() - 1
                if best == 1:
                    break
        memo[mask] = (best + 1, best_root)
        return best + 1

    parent: dict[int, Optional[int]] = {}

    def build(mask: int, above: Optional[int]):
        for comp in components(mask):
            td_connected(comp)
            root = memo[comp][1]
            parent[verts[root]] = above
            rest = comp ^ (1 << root)
            if rest:
                build(rest, verts[root])

    full = (1 << len(verts)) - 1
    vtd = max(td_connected(c) for c in components(full))
    build(full, None)
    t = TreedepthDecomposition(parent)
    assert t.height == vtd - 1
    return vtd - 1, t


def decompose(g: ConstraintGraph, mode: str = "exact", max_vertices: int = DEFAULT_EXACT_CAP):
    """Return (decomposition, mode actually used); exact falls back to DFS above the cap."""
    if mode == "exact" and len(g.vertices) <= max_vertices:
        return exact_treedepth(g, max_vertices)[1], "exact"
    if mode not in ("exact", "dfs"):
        raise ValueError(f"unknown decomposition mode {mode!r}")
    return dfs_decomposition(g, "max-degree"), "dfs"


# --- exchange formats ------------------------------------------------------


def write_graph(g: ConstraintGraph) -> str:
    verts = sorted(g.vertices)
    lines = [f"GRAPH {len(verts)}"]
    if verts != list(range(1, len(verts) + 1)):
        lines += [f"VERTEX {v}" for v in verts]
    lines += [f"EDGE {u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> ConstraintGraph:
    n = None
    verts: set[int] = set()
    edges = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kw, *args = line.split()
        vals = [int(a) for a in args]
        if kw == "GRAPH":
            n = vals[0]
        elif kw == "VERTEX":
            verts.add(vals[0])
        elif kw == "EDGE":
            edges.add((vals[0], vals[1]))
        else:
            raise ValueError(f"line {lineno}: unknown record {kw!r}")
    if n is None:
        raise ValueError("missing GRAPH header")
    if not verts:
        verts = set(range(1, n + 1))
    if len(verts) != n:
        raise ValueError(f"GRAPH declares {n} vertices, found {len(verts)}")
    return ConstraintGraph(frozenset(verts), frozenset(edges))


def write_decomposition(t: TreedepthDecomposition) -> str:
    lines = [f"TDD {t.height}"]
    lines += [f"PARENT {v} {0 if p is None else p}" for v, p in t.parent.items()]
    return "\n".join(lines) + "\n"


def parse_decomposition(text: str) -> TreedepthDecomposition:
    parent: dict[int, Optional[int]] = {}
    height = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kw, *args = line.split()
        vals = [int(a) for a in args]
        if kw == "TDD":
            height = vals[0]
        elif kw == "PARENT":
            parent[vals[0]] = vals[1] or None
        else:
            raise ValueError(f"line {lineno}: unknown record {kw!r}")
    t = TreedepthDecomposition(parent)
    if height is not None and height != t.height:
        raise DecompositionError(f"TDD header says height {height}, forest has {t.height}")
    return t


def forest_from_edges(vertices: Iterable[int], parent_pairs: Iterable[tuple[int, int]]):
    """Convenience: build a decomposition from (child, parent) pairs."""
    parent: dict[int, Optional[int]] = {v: None for v in vertices}
    for c, p in parent_pairs:
        parent[c] = p
    return TreedepthDecomposition(parent)
