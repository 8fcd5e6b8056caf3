"""Uniform spanning trees, depth-first linearization and Binary Support Trees.

A BST is stored in heap layout: node 1 is the root, node ``v`` has children
``2v`` and ``2v + 1``, and leaf slot ``s`` (1-based) lives at node
``n_pad + s - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GraphError, NumericalError
from .graph import Graph, Labeling, build_graph

MAX_WALK_STEPS = 10**7
DUMMY_LABEL = 0


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class _UniformStream:
    """Buffered uniform draws; a scalar ``Generator.random()`` call per step is slow."""

    def __init__(self, rng: np.random.Generator, chunk: int = 16, max_chunk: int = 8192):
        self._rng = rng
        self._chunk = chunk
        self._max_chunk = max_chunk
        self._buf: list[float] = []
        self._pos = 0

    def __call__(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._rng.random(self._chunk).tolist()
            self._chunk = min(2 * self._chunk, self._max_chunk)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


@dataclass(frozen=True)
class SpanningTree:
    graph: Graph = field(repr=False)
    root: int
    parent: tuple[int, ...]  # parent[v]; parent[root] == 0, index 0 unused

    @property
    def n(self) -> int:
        return self.graph.n

    def edges(self) -> list[tuple[int, int]]:
        """Tree edges in the source graph's orientation, sorted by graph edge index."""
        idx = sorted(self.graph.edge_index(v, p) for v, p in enumerate(self.parent) if p)
        return [self.graph.edges[e - 1] for e in idx]

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (min(v, p), max(v, p)) for v, p in enumerate(self.parent) if p
        )

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.n + 1)]
        for v, p in enumerate(self.parent):
            if p:
                kids[p].append(v)
        return kids

    def as_graph(self) -> Graph:
        return build_graph(self.n, self.edges())


def sample_uniform_spanning_tree(
    g: Graph, rng=None, root: int = 1, max_steps: int = MAX_WALK_STEPS
) -> SpanningTree:
    """Draw a uniformly random spanning tree with Wilson's algorithm.

    Loop erasure is done implicitly: each vertex keeps the last exit taken
    by the walk, so revisited loops are overwritten.
    """
    draw = _UniformStream(as_generator(rng), chunk=2 * g.n)
    adj = g.adjacency
    n = g.n
    in_tree = [False] * (n + 1)
    nxt = [0] * (n + 1)
    in_tree[root] = True
    steps = 0
    for start in range(1, n + 1):
        u = start
        while not in_tree[u]:
            nb = adj[u]
            nxt[u] = nb[int(draw() * len(nb))]
            u = nxt[u]
            steps += 1
            if steps > max_steps:
                raise NumericalError(f"random walk exceeded {max_steps} steps")
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    nxt[root] = 0
    return SpanningTree(graph=g, root=root, parent=tuple(nxt))


def linearize(t: SpanningTree, root: int | None = None) -> tuple[int, ...]:
    """First-visit order of a depth-first traversal; children visited in ascending order."""
    root = t.root if root is None else root
    adj: list[list[int]] = [[] for _ in range(t.n + 1)]
    for u, v in t.edge_set():
        adj[u].append(v)
        adj[v].append(u)
    for a in adj:
        a.sort(reverse=True)
    seen = [False] * (t.n + 1)
    order = []
    stack = [root]
    while stack:
        u = stack.pop()
        if seen[u]:
            continue
        seen[u] = True
        order.append(u)
        stack.extend(v for v in adj[u] if not seen[v])
    return tuple(order)


@dataclass(frozen=True)
class Bst:
    n: int
    n_pad: int
    order: tuple[int, ...]  # order[s - 1] is the vertex in leaf slot s
    leaf_of: tuple[int, ...]  # leaf_of[v] is the heap node of vertex v, index 0 unused
    labels: tuple[int, ...] | None = field(default=None, repr=False)  # per heap node

    @property
    def size(self) -> int:
        return 2 * self.n_pad - 1

    @property
    def depth(self) -> int:
        return self.n_pad.bit_length() - 1

    def leaf(self, v: int) -> int:
        return self.leaf_of[v]

    def vertex_at(self, node: int) -> int:
        """Original vertex stored at ``node``; 0 for internal and dummy nodes."""
        s = node - self.n_pad + 1
        if 1 <= s <= self.n:
            return self.order[s - 1]
        return 0

    def is_leaf(self, node: int) -> bool:
        return node >= self.n_pad

    def neighbors(self, node: int) -> list[int]:
        out = [] if node == 1 else [node // 2]
        if node < self.n_pad:
            out += [2 * node, 2 * node + 1]
        return out

    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs ordered by child node."""
        return [(c // 2, c) for c in range(2, self.size + 1)]

    def as_graph(self) -> Graph:
        """The BST as a plain graph whose vertices are the heap nodes."""
        return build_graph(self.size, self.edges())


def build_bst(order: Sequence[int], lab: Labeling | None = None) -> Bst:
    n = len(order)
    if sorted(order) != list(range(1, n + 1)):
        raise GraphError("order must be a permutation of 1..n")
    n_pad = 1
    while n_pad < n:
        n_pad *= 2
    leaf_of = [0] * (n + 1)
    for s, v in enumerate(order, start=1):
        leaf_of[v] = n_pad + s - 1
    labels = None
    if lab is not None:
        if lab.n != n:
            raise GraphError("labeling size does not match the order")
        lbl = [DUMMY_LABEL] * (2 * n_pad)
        for s, v in enumerate(order, start=1):
            lbl[n_pad + s - 1] = lab[v]
        for node in range(n_pad - 1, 0, -1):
            lbl[node] = lbl[2 * node]
        labels = tuple(lbl)
    return Bst(n=n, n_pad=n_pad, order=tuple(order), leaf_of=tuple(leaf_of), labels=labels)


def bst_path(b: Bst, i: int, j: int) -> list[int]:
    """Heap nodes on the path from ``i``'s leaf to ``j``'s leaf, both inclusive."""
    if i == j:
        raise GraphError("bst_path needs two distinct vertices")
    a, c = b.leaf_of[i], b.leaf_of[j]
    up, down = [], []
    # all leaves sit at the same depth, so climb in lockstep
    while a != c:
        up.append(a)
        down.append(c)
        a //= 2
        c //= 2
    return up + [a] + down[::-1]


def bst_cut_sizes(b: Bst, lab: Labeling, t: SpanningTree) -> tuple[dict, dict]:
    """Per-class cut counts ``(|Phi^B_k|, |Phi^T_k|)`` as two dicts keyed by class.

    BST edges touching a dummy-labeled node are not counted.
    """
    if b.labels is None:
        b = build_bst(b.order, lab)
    lbl = b.labels
    phi_b = {k: 0 for k in range(1, lab.K + 1)}
    for p, c in b.edges():
        a, d = lbl[p], lbl[c]
        if a != d and a != DUMMY_LABEL and d != DUMMY_LABEL:
            phi_b[a] += 1
            phi_b[d] += 1
    phi_t = {k: 0 for k in range(1, lab.K + 1)}
    for u, v in t.edge_set():
        if lab[u] != lab[v]:
            phi_t[lab[u]] += 1
            phi_t[lab[v]] += 1
    return phi_b, phi_t
