"""Matrix Perceptron (kernel form) and Matrix Winnow on Laplacian similarity instances.

Both learners follow the same protocol: ``predict(i, j)`` returns 0
(similar) or 1 (dissimilar) and remembers the instance, and
``update(y)`` applies the mistake-driven correction for the last
prediction.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import GraphError, NumericalError
from .graph import (
    Graph,
    Labeling,
    LaplacianPseudoinverse,
    effective_resistance,
    incidence_matrix,
    laplacian_pseudoinverse,
    max_resistance,
)
from .spanning import Bst

WINNOW_ETA = 1.28
# Relative slack for threshold comparisons: on trees the scores are integers
# computed through a floating-point L^+, so exact ties must not flip on noise.
COMPARE_RTOL = 1e-9


def _exceeds(score: float, threshold: float, strict: bool) -> bool:
    slack = COMPARE_RTOL * max(1.0, abs(threshold))
    if strict:
        return score > threshold + slack
    return score >= threshold - slack


def pair_kernel(lp: LaplacianPseudoinverse, a: tuple[int, int], b: tuple[int, int]) -> float:
    """``((e_i - e_j)^T L^+ (e_k - e_l))^2``: inner product of two rank-one instances."""
    M = lp.matrix
    i, j = a[0] - 1, a[1] - 1
    k, l = b[0] - 1, b[1] - 1
    v = M[i, k] - M[i, l] - M[j, k] + M[j, l]
    return float(v * v)


class KernelPerceptron:
    """Matrix Perceptron kept as its signed list of mistaken pairs.

    The weight matrix ``W = sum_s sign_s X_s`` is never formed; its inner
    product with a new instance is a sum of squared ``L^+`` bilinear forms.
    ``vertex_map`` translates query vertices into vertices of the operating
    graph (used to run on a BST, where queries name leaf nodes).
    """

    def __init__(
        self,
        lp: LaplacianPseudoinverse,
        threshold: float | None = None,
        strict: bool = True,
        vertex_map=None,
    ):
        self.lp = lp
        self.radius = math.sqrt(threshold) if threshold is not None else max_resistance(lp)
        self.threshold = self.radius**2 if threshold is None else float(threshold)
        self.strict = strict
        self.vertex_map = vertex_map
        self._a: list[int] = []
        self._b: list[int] = []
        self._sign: list[float] = []
        self._arrays = None
        self._last = None
        self.touched = 0

    @classmethod
    def for_graph(cls, g: Graph, lp: LaplacianPseudoinverse | None = None):
        return cls(lp if lp is not None else laplacian_pseudoinverse(g))

    @classmethod
    def on_bst(cls, b: Bst):
        """Dense learner on the BST itself, with the fast learner's threshold rule."""
        lp = laplacian_pseudoinverse(b.as_graph())
        diameter = 2 * b.depth
        return cls(lp, threshold=float(diameter**2), strict=False, vertex_map=b.leaf_of)

    @property
    def mistakes(self) -> list[tuple[tuple[int, int], int]]:
        return [((a + 1, b + 1), int(s)) for a, b, s in zip(self._a, self._b, self._sign)]

    def _node(self, v: int) -> int:
        return (self.vertex_map[v] if self.vertex_map is not None else v) - 1

    def score(self, i: int, j: int) -> float:
        """``tr(W^T X)`` for the pair, as a signed kernel sum over past mistakes."""
        if not self._a:
            self.touched = 0
            return 0.0
        if self._arrays is None:
            self._arrays = (
                np.array(self._a, dtype=np.intp),
                np.array(self._b, dtype=np.intp),
                np.array(self._sign),
            )
        a, b, s = self._arrays
        M = self.lp.matrix
        p, q = self._node(i), self._node(j)
        v = M[a, p] - M[a, q] - M[b, p] + M[b, q]
        self.touched = len(a)
        return float(np.dot(s, v * v))

    def predict(self, i: int, j: int) -> int:
        if i == j:
            raise GraphError("pair endpoints must differ")
        yhat = int(_exceeds(self.score(i, j), self.threshold, self.strict))
        self._last = (i, j, yhat)
        return yhat

    def update(self, y: int) -> None:
        i, j, yhat = self._last
        if y == yhat:
            return
        self._a.append(self._node(i))
        self._b.append(self._node(j))
        self._sign.append(float(y - yhat))
        self._arrays = None


def sym_expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix via its eigendecomposition."""
    try:
        vals, vecs = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    W = (vecs * np.exp(vals)) @ vecs.T
    if not np.all(np.isfinite(W)):
        raise NumericalError("matrix exponential overflowed")
    return (W + W.T) / 2


def pseudo_incidence(g: Graph, lp: LaplacianPseudoinverse) -> np.ndarray:
    """``Psi^+`` (n x m), using ``Psi^+ = L^+ Psi^T``."""
    return lp.matrix @ incidence_matrix(g).T


def winnow_instance(g: Graph, lp: LaplacianPseudoinverse, pair: tuple[int, int]) -> np.ndarray:
    """Trace-normalised rank-one instance ``z z^T / R_ij`` with ``z = (Psi^+)^T (e_i - e_j)``."""
    i, j = pair
    r = effective_resistance(lp, i, j)
    if i == j or r <= 0.0:
        raise GraphError("winnow instance needs two distinct vertices")
    P = pseudo_incidence(g, lp)
    z = P[i - 1] - P[j - 1]
    return np.outer(z, z) / r


class MatrixWinnow:
    """Matrix Winnow over m x m edge-space instances.

    ``cutsize`` is the labeled graph's cut-size; the threshold depends on
    it and it must be supplied by the caller.
    """

    def __init__(
        self,
        g: Graph,
        cutsize: int,
        lp: LaplacianPseudoinverse | None = None,
        eta: float = WINNOW_ETA,
        radius: float | None = None,
        vertex_map=None,
    ):
        if cutsize < 1:
            raise GraphError("matrix-winnow needs a positive cut-size")
        self.g = g
        self.lp = lp if lp is not None else laplacian_pseudoinverse(g)
        self.eta = eta
        self.radius = max_resistance(self.lp) if radius is None else float(radius)
        self.cutsize = cutsize
        self.threshold = eta / (math.exp(eta) - math.exp(-eta)) / (self.radius * cutsize)
        self.vertex_map = vertex_map
        self._P = pseudo_incidence(g, self.lp)
        m = g.m
        self.A = -math.log(m) * np.eye(m)
        self.W = np.eye(m) / m
        self._last = None
        self.touched = 0

    @classmethod
    def on_bst(cls, b: Bst, cutsize: int, eta: float = WINNOW_ETA):
        bg = b.as_graph()
        return cls(bg, cutsize, eta=eta, radius=float(2 * b.depth), vertex_map=b.leaf_of)

    def _instance(self, i: int, j: int):
        if self.vertex_map is not None:
            i, j = self.vertex_map[i], self.vertex_map[j]
        z = self._P[i - 1] - self._P[j - 1]
        r = effective_resistance(self.lp, i, j)
        if r <= 0.0:
            raise GraphError("pair endpoints must differ")
        return z, r

    def score(self, i: int, j: int) -> float:
        z, r = self._instance(i, j)
        self.touched = z.size * z.size
        return float(z @ self.W @ z) / r

    def predict(self, i: int, j: int) -> int:
        z, r = self._instance(i, j)
        s = float(z @ self.W @ z) / r
        self.touched = z.size * z.size
        yhat = int(_exceeds(s, self.threshold, strict=True))
        self._last = (z, r, yhat)
        return yhat

    def update(self, y: int) -> None:
        z, r, yhat = self._last
        if y == yhat:
            return
        self.A += (self.eta * (y - yhat) / r) * np.outer(z, z)
        self.A = (self.A + self.A.T) / 2
        self.W = sym_expm(self.A)


def class_indicators(lab: Labeling) -> np.ndarray:
    """K x n matrix whose row k-1 is the indicator of class k."""
    U = np.zeros((lab.K, lab.n))
    for v, k in enumerate(lab.y):
        U[k - 1, v] = 1.0
    return U


def comparator_matrix(g: Graph, lab: Labeling) -> np.ndarray:
    """``U = Psi (sum_k u_k u_k^T) Psi^T`` in edge space."""
    psi = incidence_matrix(g)
    B = psi @ class_indicators(lab).T  # m x K, column k is Psi u_k
    return B @ B.T


def comparator_inner_product(
    g: Graph, lab: Labeling, lp: LaplacianPseudoinverse, pair: tuple[int, int]
) -> float:
    """``<U, X^p>`` for the pair; 0 when similar and 2 when dissimilar."""
    P = pseudo_incidence(g, lp)
    z = P[pair[0] - 1] - P[pair[1] - 1]
    B = incidence_matrix(g) @ class_indicators(lab).T
    return float(np.sum((z @ B) ** 2))
