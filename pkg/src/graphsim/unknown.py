"""Similarity prediction when the graph is revealed one adversarial path at a time.

The learner keeps a forest made of the union of disclosed paths.  Accepted
edges are numbered in order of disclosure and oriented from lower to higher
vertex index; a pair is encoded by the signed edge indicator of its forest
path.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .errors import GraphError
from .graph import Graph, Labeling


@dataclass(frozen=True)
class PathInstance:
    pair: tuple[int, int]
    coords: tuple[tuple[int, int], ...]  # (edge index, +1/-1), sorted by index

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self.coords)

    def dense(self, dim: int) -> np.ndarray:
        x = np.zeros(dim, dtype=np.int64)
        for e, s in self.coords:
            x[e - 1] = s
        return x


class IncrementalForest:
    def __init__(self, n: int):
        if n < 2:
            raise GraphError("need at least 2 vertices")
        self.n = n
        self._sets = DisjointSet(range(1, n + 1))
        self._adj: list[dict[int, int]] = [dict() for _ in range(n + 1)]
        self.edges: list[tuple[int, int]] = []  # edges[e - 1] = (low, high)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def connected(self, i: int, j: int) -> bool:
        return self._sets.connected(i, j)

    def is_spanning(self) -> bool:
        return self.num_edges == self.n - 1

    def _accept(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        self.edges.append(key)
        e = len(self.edges)
        self._adj[u][v] = e
        self._adj[v][u] = e
        self._sets.merge(u, v)
        return e

    def ingest_path(self, path: Sequence[int]) -> PathInstance:
        """Absorb an adversary path and return the instance for its endpoints."""
        path = [int(v) for v in path]
        if len(path) < 2:
            raise GraphError("a path needs at least two vertices")
        i, j = path[0], path[-1]
        if i == j:
            raise GraphError("path endpoints must differ")
        for a, b in zip(path, path[1:]):
            if a == b:
                raise GraphError(f"repeated consecutive vertex {a}")
        for v in path:
            if not 1 <= v <= self.n:
                raise GraphError(f"vertex {v} outside 1..{self.n}")
        # every edge is examined, even when i and j are already connected
        for a, b in zip(path, path[1:]):
            if not self._sets.connected(a, b):
                self._accept(a, b)
        return self.instance(i, j)

    def forest_path(self, i: int, j: int) -> list[int]:
        if not self.connected(i, j):
            raise GraphError(f"{i} and {j} are not connected in the forest")
        prev = {i: i}
        queue = deque([i])
        while queue:
            u = queue.popleft()
            if u == j:
                break
            for v in self._adj[u]:
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        path = [j]
        while path[-1] != i:
            path.append(prev[path[-1]])
        return path[::-1]

    def instance(self, i: int, j: int) -> PathInstance:
        path = self.forest_path(i, j)
        coords = sorted(
            (self._adj[a][b], 1 if a < b else -1) for a, b in zip(path, path[1:])
        )
        return PathInstance(pair=(i, j), coords=tuple(coords))

    def completed(self, g: Graph) -> "IncrementalForest":
        """Copy extended to a spanning tree of ``g`` with arbitrary extra graph edges."""
        out = IncrementalForest(self.n)
        for u, v in self.edges:
            out._accept(u, v)
        for u, v in g.edges:
            if out.is_spanning():
                break
            if not out.connected(u, v):
                out._accept(u, v)
        if not out.is_spanning():
            raise GraphError("graph is not connected; cannot complete the forest")
        return out


def primal_from_dual(theta: np.ndarray, r: float) -> np.ndarray:
    """Inverse mirror map: ``w = grad (||theta||_r^2 / 2)``."""
    if r <= 2:
        raise ValueError("r must exceed 2")
    theta = np.asarray(theta, dtype=float)
    norm = np.linalg.norm(theta.ravel(), ord=r)
    if norm == 0.0:
        return np.zeros_like(theta)
    return np.sign(theta) * norm * (np.abs(theta) / norm) ** (r - 1)


def dual_from_primal(w: np.ndarray, s: float) -> np.ndarray:
    """Mirror map ``f(w) = grad (||w||_s^2 / 2)``."""
    w = np.asarray(w, dtype=float)
    norm = np.linalg.norm(w.ravel(), ord=s)
    if norm == 0.0:
        return np.zeros_like(w)
    return np.sign(w) * norm * (np.abs(w) / norm) ** (s - 1)


class RnormPerceptron:
    """r-norm Perceptron on ``vec(x x^T)`` with the dual vector stored sparsely.

    ``theta`` maps an ordered pair of edge indices to an integer; the primal
    weight of a coordinate is recovered from it on demand.
    """

    def __init__(self, n: int):
        if n < 3:
            raise GraphError("the r-norm learner needs n >= 3")
        self.n = n
        self.r = 4.0 * math.log(n - 1)
        self.s = self.r / (self.r - 1.0)
        self.forest = IncrementalForest(n)
        self.theta: dict[tuple[int, int], int] = {}
        self._norm = 0.0
        self._last = None
        self.touched = 0

    def theta_norm(self) -> float:
        return self._norm

    def _recompute_norm(self) -> int:
        r = self.r
        vals = np.fromiter((abs(v) for v in self.theta.values() if v), dtype=float)
        self._norm = float(np.sum(vals**r) ** (1.0 / r)) if vals.size else 0.0
        return len(self.theta)

    def weight(self, a: int, b: int) -> float:
        t = self.theta.get((a, b), 0)
        if t == 0:
            return 0.0
        norm = self._norm
        return math.copysign(norm * (abs(t) / norm) ** (self.r - 1.0), t)

    def score(self, x: PathInstance) -> float:
        total = 0.0
        for a, sa in x.coords:
            for b, sb in x.coords:
                w = self.weight(a, b)
                if w:
                    total += w * sa * sb
        self.touched = len(x.coords) ** 2
        return total

    def threshold(self, x: PathInstance) -> float:
        # ||x||_r^4 with x in {-1,0,1}: support^(4/r)
        return (self.r - 1.0) * len(x.coords) ** (4.0 / self.r)

    def predict(self, i: int, j: int, path: Sequence[int] | None = None) -> int:
        x = self.forest.ingest_path(path) if path is not None else self.forest.instance(i, j)
        if x.pair != (i, j):
            raise GraphError(f"path endpoints {x.pair} do not match pair {(i, j)}")
        yhat = int(self.score(x) >= self.threshold(x))
        self._last = (x, yhat)
        return yhat

    def update(self, y: int) -> None:
        x, yhat = self._last
        if y == yhat:
            return
        step = y - yhat
        theta = self.theta
        for a, sa in x.coords:
            for b, sb in x.coords:
                v = theta.get((a, b), 0) + step * sa * sb
                if v:
                    theta[(a, b)] = v
                else:
                    theta.pop((a, b), None)
        self.touched += len(x.coords) ** 2 + self._recompute_norm()


class TreeWinnow:
    """Winnow on 0/1 path indicators for a tree with connected classes.

    Weights start at 1, the threshold is ``n - 1``; a missed dissimilar pair
    doubles the weights on the path and a missed similar pair halves them.
    """

    def __init__(self, n: int):
        self.n = n
        self.forest = IncrementalForest(n)
        self.weights = np.ones(n - 1)
        self.threshold = float(n - 1)
        self._last = None
        self.touched = 0

    def predict(self, i: int, j: int, path: Sequence[int] | None = None) -> int:
        x = self.forest.ingest_path(path) if path is not None else self.forest.instance(i, j)
        idx = [e - 1 for e in x.support]
        self.touched = len(idx)
        yhat = int(float(self.weights[idx].sum()) >= self.threshold)
        self._last = (idx, yhat)
        return yhat

    def update(self, y: int) -> None:
        idx, yhat = self._last
        if y == yhat:
            return
        self.weights[idx] *= 2.0 if y == 1 else 0.5


def build_comparator(forest: IncrementalForest, lab: Labeling) -> np.ndarray:
    """K x (n-1) integer matrix; row k-1 is ``u_k`` over the forest's edges.

    ``u_k[e] = [y_tail = k] - [y_head = k]`` for edge ``e = (tail, head)``,
    so ``u_k . x = [y_i = k] - [y_j = k]`` for the instance of any pair.
    """
    if not forest.is_spanning():
        raise GraphError("comparator needs a spanning tree; complete the forest first")
    U = np.zeros((lab.K, forest.n - 1), dtype=np.int64)
    for e, (a, b) in enumerate(forest.edges):
        U[lab[a] - 1, e] += 1
        U[lab[b] - 1, e] -= 1
    return U
