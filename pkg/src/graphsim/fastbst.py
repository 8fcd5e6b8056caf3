"""Sparse O(log^2 n)-per-round Matrix Perceptron on a Binary Support Tree.

The learner keeps an integer matrix ``F`` over BST nodes, stored sparsely
and keyed by unordered node pair.  For a query path ``P`` the score
``sum over unordered {l, l'} in P of F[l, l']`` equals the dense
Perceptron's ``tr(W^T X)`` on the BST exactly, so predictions agree with
``KernelPerceptron.on_bst`` round for round.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GraphError
from .spanning import Bst, bst_path


@dataclass(frozen=True)
class PathContext:
    path: tuple[int, ...]
    tags: dict  # f over the neighborhood N of the path
    support: tuple[int, ...]  # S = N minus the interior of the path

    @property
    def neighborhood(self) -> frozenset[int]:
        return frozenset(self.tags)


def compute_path_context(b: Bst, i: int, j: int) -> PathContext:
    if i == j:
        raise GraphError("path context needs two distinct vertices")
    path = bst_path(b, i, j)
    tags = {node: s for s, node in enumerate(path, start=1)}
    for node in path:
        f = tags[node]
        for nb in b.neighbors(node):
            if nb not in tags:
                tags[nb] = f
    interior = set(path[1:-1])
    support = tuple(sorted(node for node in tags if node not in interior))
    return PathContext(path=tuple(path), tags=tags, support=support)


class SparseF:
    """Symmetric integer matrix with implicit zeros, one value per unordered pair."""

    def __init__(self):
        self._rows: dict[int, dict[int, int]] = {}
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def get(self, a: int, b: int) -> int:
        row = self._rows.get(a)
        return row.get(b, 0) if row else 0

    def add(self, a: int, b: int, delta: int) -> None:
        row = self._rows.setdefault(a, {})
        if b not in row:
            self._count += 1
        row[b] = row.get(b, 0) + delta
        if a != b:
            self._rows.setdefault(b, {})[a] = row[b]

    def items(self):
        for a, row in self._rows.items():
            for b, v in row.items():
                if a <= b:
                    yield (a, b), v

    def path_sum(self, path) -> tuple[int, int]:
        """Sum over unordered pairs of ``path`` (diagonal included) and the lookup count."""
        total = 0
        looked = 0
        rows = self._rows
        for pos, a in enumerate(path):
            row = rows.get(a)
            looked += len(path) - pos
            if row:
                for b in path[pos:]:
                    total += row.get(b, 0)
        return total, looked


class FastBstPerceptron:
    def __init__(self, b: Bst):
        self.bst = b
        self.F = SparseF()
        self.threshold = 4 * b.depth * b.depth
        self._last = None
        self.touched = 0

    def context(self, i: int, j: int) -> PathContext:
        return compute_path_context(self.bst, i, j)

    def score(self, ctx: PathContext) -> int:
        total, looked = self.F.path_sum(ctx.path)
        self.touched = looked
        return total

    def predict(self, i: int, j: int) -> int:
        ctx = self.context(i, j)
        yhat = int(self.score(ctx) >= self.threshold)
        self._last = (ctx, yhat)
        return yhat

    def update(self, y: int) -> None:
        ctx, yhat = self._last
        if y == yhat:
            return
        sign = 2 * y - 1
        tags = ctx.tags
        S = ctx.support
        for p, a in enumerate(S):
            fa = tags[a]
            for c in S[p + 1:]:
                d = fa - tags[c]
                self.F.add(a, c, sign * d * d)
        self.touched += len(S) * (len(S) - 1) // 2

    def round(self, i: int, j: int, y: int) -> int:
        yhat = self.predict(i, j)
        self.update(y)
        return yhat
