"""Graph representation, Laplacian pseudoinverse and cut primitives.

Vertices and edge indices are 1-based throughout.  Every edge of a known
graph is stored once, oriented from its lower-index endpoint to its
higher-index endpoint.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphError, NumericalError

# eigenvalues below this fraction of the largest one are treated as zero
PINV_RTOL = 1e-10


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def edge_index(self, u: int, v: int) -> int:
        """1-based index of the edge joining ``u`` and ``v`` (either order)."""
        key = (u, v) if u < v else (v, u)
        try:
            return self._index[key]
        except KeyError:
            raise GraphError(f"no edge between {u} and {v}") from None

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._index

    def is_tree(self) -> bool:
        return self.m == self.n - 1


def build_graph(n: int, edge_list: Iterable[Sequence[int]]) -> Graph:
    """Build a connected simple graph on vertices ``1..n``.

    Duplicate edges (in either direction) are dropped; edge indices follow
    the first occurrence in ``edge_list``.
    """
    if n < 2:
        raise GraphError("a graph needs at least 2 vertices")
    edges: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    nbrs: list[list[int]] = [[] for _ in range(n + 1)]
    for pair in edge_list:
        u, v = int(pair[0]), int(pair[1])
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphError(f"edge ({u}, {v}) has an endpoint outside 1..{n}")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        key = (u, v) if u < v else (v, u)
        if key in index:
            continue
        edges.append(key)
        index[key] = len(edges)
        nbrs[u].append(v)
        nbrs[v].append(u)
    if not _connected(n, nbrs):
        raise GraphError("graph is disconnected")
    adjacency = tuple(tuple(sorted(a)) for a in nbrs)
    return Graph(n=n, edges=tuple(edges), adjacency=adjacency, _index=index)


def _connected(n: int, nbrs: Sequence[Sequence[int]]) -> bool:
    seen = [False] * (n + 1)
    seen[1] = True
    queue = deque([1])
    count = 1
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def shortest_path(g: Graph, i: int, j: int) -> list[int]:
    """BFS path from ``i`` to ``j``; ties go to the lower-index neighbor."""
    prev = [0] * (g.n + 1)
    prev[i] = i
    queue = deque([i])
    while queue:
        u = queue.popleft()
        if u == j:
            break
        for v in g.adjacency[u]:
            if not prev[v]:
                prev[v] = u
                queue.append(v)
    path = [j]
    while path[-1] != i:
        path.append(prev[path[-1]])
    return path[::-1]


@dataclass(frozen=True)
class Labeling:
    y: tuple[int, ...]
    K: int

    def __post_init__(self):
        if not self.y:
            raise GraphError("empty labeling")
        present = set(self.y)
        if present != set(range(1, len(present) + 1)):
            raise GraphError(f"labels must be exactly 1..K, got {sorted(present)}")
        if self.K != len(present):
            raise GraphError(f"K={self.K} but {len(present)} classes are present")

    @classmethod
    def from_sequence(cls, y: Iterable[int]) -> "Labeling":
        y = tuple(int(v) for v in y)
        return cls(y=y, K=len(set(y)))

    @property
    def n(self) -> int:
        return len(self.y)

    def __getitem__(self, v: int) -> int:
        return self.y[v - 1]

    def members(self, k: int) -> list[int]:
        return [v for v, c in enumerate(self.y, start=1) if c == k]


def similarity_label(lab: Labeling, i: int, j: int) -> int:
    """1 if ``i`` and ``j`` carry different classes (dissimilar), else 0."""
    return int(lab[i] != lab[j])


def incidence_matrix(g: Graph) -> np.ndarray:
    """The m x n oriented incidence matrix: ``(Psi v)_e = v_tail - v_head``."""
    psi = np.zeros((g.m, g.n))
    for e, (u, v) in enumerate(g.edges):
        psi[e, u - 1] = 1.0
        psi[e, v - 1] = -1.0
    return psi


def laplacian(g: Graph) -> np.ndarray:
    L = np.zeros((g.n, g.n))
    for u, v in g.edges:
        L[u - 1, u - 1] += 1.0
        L[v - 1, v - 1] += 1.0
        L[u - 1, v - 1] -= 1.0
        L[v - 1, u - 1] -= 1.0
    return L


@dataclass(frozen=True)
class LaplacianPseudoinverse:
    matrix: np.ndarray = field(repr=False)
    tol: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def laplacian_pseudoinverse(g: Graph) -> LaplacianPseudoinverse:
    """L^+ by symmetric eigendecomposition, dropping the single null direction."""
    L = laplacian(g)
    try:
        vals, vecs = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    tol = PINV_RTOL * float(vals[-1])
    keep = vals > tol
    if int((~keep).sum()) != 1:
        raise NumericalError(
            f"expected exactly one null eigenvalue, found {int((~keep).sum())}"
        )
    V = vecs[:, keep]
    M = (V / vals[keep]) @ V.T
    M = (M + M.T) / 2
    M.setflags(write=False)
    return LaplacianPseudoinverse(matrix=M, tol=tol)


def effective_resistance(lp: LaplacianPseudoinverse, i: int, j: int) -> float:
    if i == j:
        return 0.0
    M = lp.matrix
    a, b = i - 1, j - 1
    return max(float(M[a, a] + M[b, b] - 2.0 * M[a, b]), 0.0)


def resistance_matrix(lp: LaplacianPseudoinverse) -> np.ndarray:
    """All-pairs effective resistances."""
    d = np.diag(lp.matrix)
    R = d[:, None] + d[None, :] - 2.0 * lp.matrix
    np.fill_diagonal(R, 0.0)
    return np.maximum(R, 0.0)


def max_resistance(lp: LaplacianPseudoinverse) -> float:
    return float(resistance_matrix(lp).max())


def cut_edges(g: Graph, lab: Labeling) -> list[tuple[int, int]]:
    _check_sizes(g, lab)
    return [(u, v) for u, v in g.edges if lab[u] != lab[v]]


def cut_size(g: Graph, lab: Labeling) -> int:
    return len(cut_edges(g, lab))


def per_class_cut_size(g: Graph, lab: Labeling, k: int) -> int:
    """Number of cut-edges with at least one endpoint in class ``k``."""
    return sum(1 for u, v in cut_edges(g, lab) if k in (lab[u], lab[v]))


def resistance_weighted_cutsize(
    g: Graph, lab: Labeling, lp: LaplacianPseudoinverse
) -> float:
    return float(sum(effective_resistance(lp, u, v) for u, v in cut_edges(g, lab)))


def _check_sizes(g: Graph, lab: Labeling) -> None:
    if lab.n != g.n:
        raise GraphError(f"labeling has {lab.n} entries for a graph with {g.n} vertices")


# -- text formats -----------------------------------------------------------


def _data_lines(path):
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line.split()


def read_edge_list(path, n: int | None = None) -> Graph:
    """Read "u v" lines (1-based); ``n`` defaults to the largest vertex seen."""
    pairs = []
    for fields in _data_lines(path):
        if len(fields) < 2:
            raise GraphError(f"bad edge line: {' '.join(fields)!r}")
        pairs.append((int(fields[0]), int(fields[1])))
    if n is None:
        n = max((max(p) for p in pairs), default=0)
    return build_graph(n, pairs)


def read_labels(path, n: int | None = None) -> Labeling:
    """Read "v k" lines; every vertex ``1..n`` must be labeled exactly once."""
    found: dict[int, int] = {}
    for fields in _data_lines(path):
        if len(fields) < 2:
            raise GraphError(f"bad label line: {' '.join(fields)!r}")
        v, k = int(fields[0]), int(fields[1])
        if v in found:
            raise GraphError(f"vertex {v} labeled twice")
        found[v] = k
    if n is None:
        n = max(found, default=0)
    missing = [v for v in range(1, n + 1) if v not in found]
    if missing or len(found) != n:
        raise GraphError(f"labels missing or out of range (missing: {missing[:5]})")
    return Labeling.from_sequence(found[v] for v in range(1, n + 1))


def write_edge_list(g: Graph, path) -> None:
    lines = [f"# n={g.n} m={g.m}"] + [f"{u} {v}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def write_labels(lab: Labeling, path) -> None:
    lines = [f"{v} {k}" for v, k in enumerate(lab.y, start=1)]
    Path(path).write_text("\n".join(lines) + "\n")
