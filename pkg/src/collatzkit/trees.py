"""Preimages, exit trees and reverse trees, with DOT/JSON export."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .bigint import to_decimal
from .census import find_loops, resolve_starts
from .program import step
from .sharding import odd_values
from .trajectory import DEFAULT_MAX_BITS, DEFAULT_MAX_ITER

__all__ = [
    "OrbitForest",
    "predecessors",
    "build_exit_tree",
    "build_reverse_tree",
    "export_graph",
    "DEFAULT_NODE_CAP",
]


DEFAULT_NODE_CAP = 10**5


def predecessors(program, v, bound):
    """Every ``n <= bound`` with ``step(program, n) == v``.

    Besides ``2v``, each odd-branch rule has at most one candidate, which
    must be odd, match the rule's guard and miss every earlier guard.
    """
    v = int(v)
    if v < 1:
        raise ValueError("v must be >= 1")
    out = set()
    if 2 * v <= bound:
        out.add(2 * v)
    for d, q, r, c in program.odd_rules:
        num = 2 * v - c
        if num <= 0 or num % q:
            continue
        n = r * (num // q)
        if n > bound or not n & 1:
            continue
        # the first odd rule whose guard n meets must be this one
        if step(program, n) == v:
            out.add(n)
    return out


@dataclass
class OrbitForest:
    nodes: set = field(default_factory=set)
    edges: dict = field(default_factory=dict)  # child -> parent, in the step direction
    roots: set = field(default_factory=set)
    highlighted: set = field(default_factory=set)
    truncated: bool = False

    def add_edge(self, child, parent):
        self.nodes.update((child, parent))
        self.edges[child] = parent

    def check(self, program):
        """Raise if an edge disagrees with the map or a highlighted node cannot reach a root."""
        for child, parent in self.edges.items():
            if step(program, child) != parent:
                raise ValueError(f"edge {child} -> {parent} disagrees with the map")
        for node in self.nodes - self.roots:
            if node not in self.edges and not self.truncated:
                raise ValueError(f"non-root {node} has no outgoing edge")
        for start in self.highlighted:
            n, seen = start, set()
            while n not in self.roots:
                if n in seen or n not in self.edges:
                    raise ValueError(f"highlighted {start} does not reach a root")
                seen.add(n)
                n = self.edges[n]


def build_exit_tree(program, loop, k, minima=None, scan_bound=10**7, max_iterations=DEFAULT_MAX_ITER,
                    max_bits=DEFAULT_MAX_BITS, node_cap=DEFAULT_NODE_CAP, chunk=1 << 14) -> OrbitForest:
    """Union of the orbits of the first ``k`` odd starts entering ``loop``.

    Each orbit stops at the first loop member it meets, which becomes a root;
    the starts are highlighted.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if minima is None:
        minima = find_loops(program, 10**4, max_iterations, max_bits, roots=False).minima
    minima = tuple(sorted(set(minima) | {loop.min}))
    starts = []
    lo = 1
    while len(starts) < k and lo <= scan_bound:
        hi = min(scan_bound, lo + 2 * chunk - 1)
        batch = odd_values(lo, hi)
        loop_mins, _ = resolve_starts(program, batch, minima, max_iterations, max_bits)
        starts += [s for s, m in zip(batch.tolist(), loop_mins) if m == loop.min]
        lo = hi + 1
    if len(starts) < k:
        raise ValueError(f"only {len(starts)} starts up to {scan_bound} enter L{loop.min}")
    starts = starts[:k]
    members = set(loop.members)
    forest = OrbitForest(highlighted=set(starts))
    for s in starts:
        n = s
        forest.nodes.add(n)
        while n not in members and n not in forest.edges:
            nxt = step(program, n)
            forest.add_edge(n, nxt)
            if len(forest.nodes) > node_cap:
                raise ValueError(f"exit tree exceeds {node_cap} nodes")
            n = nxt
        if n in members:
            forest.roots.add(n)
    return forest


def build_reverse_tree(program, root, depth, bound, node_cap=DEFAULT_NODE_CAP) -> OrbitForest:
    """Breadth-first preimage expansion from ``root``, ``depth`` levels deep."""
    root = int(root)
    if root < 1:
        raise ValueError("root must be >= 1")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    forest = OrbitForest(nodes={root}, roots={root})
    level = [root]
    for _ in range(depth):
        nxt = []
        for v in level:
            for u in sorted(predecessors(program, v, bound)):
                if u in forest.nodes:
                    continue
                if len(forest.nodes) >= node_cap:
                    forest.truncated = True
                    return forest
                forest.add_edge(u, v)
                nxt.append(u)
        level = nxt
    return forest


def _dot(forest):
    lines = ["digraph orbits {", "  rankdir=BT;"]
    for n in sorted(forest.nodes):
        attrs = [f'label="{n}"']
        if n in forest.roots:
            attrs.append("shape=doublecircle")
        if n in forest.highlighted:
            attrs += ["color=red", "penwidth=2"]
        lines.append(f'  "{n}" [{", ".join(attrs)}];')
    for child in sorted(forest.edges):
        lines.append(f'  "{child}" -> "{forest.edges[child]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graph(forest: OrbitForest, fmt="dot") -> str:
    """Deterministic text export; nodes in ascending order, values as decimal strings."""
    if fmt == "dot":
        return _dot(forest)
    if fmt == "json":
        return json.dumps({
            "nodes": [to_decimal(n) for n in sorted(forest.nodes)],
            "edges": [[to_decimal(c), to_decimal(forest.edges[c])] for c in sorted(forest.edges)],
            "roots": [to_decimal(n) for n in sorted(forest.roots)],
            "highlighted": [to_decimal(n) for n in sorted(forest.highlighted)],
            "truncated": forest.truncated,
        }, indent=2) + "\n"
    raise ValueError(f"unknown graph format {fmt!r}")
