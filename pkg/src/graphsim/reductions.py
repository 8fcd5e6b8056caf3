"""Reductions between online classification and online similarity prediction.

* ``MasterSimilarity`` turns a classification base learner into a similarity
  learner by running the base on a weighted pool of hallucinated histories.
* ``ClassFromSimilarity`` turns a similarity learner into a classifier using
  one prototype per class.
* ``OneVsRest`` lifts binary vertex classifiers to K classes.

A base classifier is described by the ``BaseClassifier`` protocol: a pure
state machine where ``extend`` never mutates its argument, so histories in
the pool can share prefixes safely.
"""

from __future__ import annotations

import copy
import math
from typing import Callable, Hashable, Protocol, Sequence

import numpy as np

from .errors import ConfigError, PoolCapExceeded
from .graph import Graph, Labeling, LaplacianPseudoinverse, laplacian_pseudoinverse

BETA = 0.294
DEFAULT_POOL_CAP = 10**6

Example = tuple[Hashable, int]  # (pattern, class)
INCONSISTENT = "inconsistent"


class BaseClassifier(Protocol):
    K: int

    def initial(self): ...

    def extend(self, state, example: Example): ...

    def predict(self, state, x) -> int: ...

    def canonical(self, history: tuple[Example, ...]) -> Hashable: ...


class HalvingBase:
    """Halving over every function from a finite pattern set to ``1..K``.

    The version space factorises over patterns, so the plurality vote is
    the stored class for a seen pattern and a K-way tie (broken to class 1)
    otherwise.  A contradictory history empties the version space and the
    prediction falls back to class 1.
    """

    def __init__(self, K: int):
        if K < 1:
            raise ConfigError("K must be positive")
        self.K = K

    def initial(self):
        return (False, {})

    def extend(self, state, example: Example):
        empty, seen = state
        x, c = example
        if empty or seen.get(x, c) != c:
            return (True, {})
        if x in seen:
            return state
        out = dict(seen)
        out[x] = c
        return (False, out)

    def predict(self, state, x) -> int:
        empty, seen = state
        if empty:
            return 1
        return seen.get(x, 1)

    def canonical(self, history):
        # the predictor depends only on the set of examples, and every
        # contradictory history induces the same constant predictor
        seen = {}
        for x, c in history:
            if seen.setdefault(x, c) != c:
                return INCONSISTENT
        return frozenset(seen.items())


def halving_subsequential_bound(examples: Sequence[Example]) -> int:
    """Worst-case halving mistakes over all subsequences of a consistent sequence.

    On any subsequence halving errs exactly at the first occurrence of a
    pattern whose class is not 1, so the full sequence attains the maximum.
    """
    return len({x for x, c in examples if c != 1})


class ReplayBase:
    """A classification base obtained by replaying an online learner on the history.

    ``factory()`` builds a fresh online classifier exposing
    ``predict(x) -> class`` and ``update(c)``.  States are deep-copied before
    extension, so the result behaves as a pure function of the history.
    """

    def __init__(self, K: int, factory: Callable[[], object]):
        self.K = K
        self.factory = factory

    def initial(self):
        return self.factory()

    def extend(self, state, example: Example):
        x, c = example
        nxt = copy.deepcopy(state)
        nxt.predict(x)
        nxt.update(c)
        return nxt

    def predict(self, state, x) -> int:
        return copy.deepcopy(state).predict(x)

    def canonical(self, history):
        return tuple(history)


class _Entry:
    __slots__ = ("history", "weight", "state", "cache")

    def __init__(self, history, weight, state):
        self.history = history
        self.weight = weight
        self.state = state
        self.cache: dict = {}


class HistoryPool:
    """Weighted pool of hallucinated histories, merged by the base's canonical key."""

    def __init__(self, base: BaseClassifier, beta: float = BETA, cap: int = DEFAULT_POOL_CAP):
        self.base = base
        self.K = base.K
        self.beta = beta
        self.cap = cap
        root = ()
        self.entries: dict[Hashable, _Entry] = {
            base.canonical(root): _Entry(root, 1.0, base.initial())
        }

    def __len__(self) -> int:
        return len(self.entries)

    def total_weight(self) -> float:
        return math.fsum(e.weight for e in self.entries.values())

    def weight_of(self, history) -> float:
        e = self.entries.get(self.base.canonical(tuple(history)))
        return e.weight if e is not None else 0.0

    def _class(self, e: _Entry, x) -> int:
        c = e.cache.get(x)
        if c is None:
            c = e.cache[x] = self.base.predict(e.state, x)
        return c

    def votes(self, a, b) -> tuple[float, float]:
        """Weight voting (similar, dissimilar) for patterns ``a`` and ``b``."""
        same = diff = 0.0
        for e in self.entries.values():
            if self._class(e, a) == self._class(e, b):
                same += e.weight
            else:
                diff += e.weight
        return same, diff

    def split(self, a, b, y: int) -> None:
        """Replace every history that voted wrongly on ``(a, b)`` by its continuations."""
        K, beta = self.K, self.beta
        if y == 1:
            labels = [(c, d) for c in range(1, K + 1) for d in range(1, K + 1) if c != d]
        else:
            labels = [(c, c) for c in range(1, K + 1)]
        if not labels:
            return
        share = beta / len(labels)
        out: dict[Hashable, _Entry] = {}

        def put(hist, w, state):
            key = self.base.canonical(hist)
            e = out.get(key)
            if e is None:
                out[key] = _Entry(hist, w, state)
            else:
                e.weight += w

        for e in self.entries.values():
            voted = int(self._class(e, a) != self._class(e, b))
            if voted == y:
                put(e.history, e.weight, e.state)
                continue
            for c, d in labels:
                hist = e.history + ((a, c), (b, d))
                key = self.base.canonical(hist)
                if key in out:
                    out[key].weight += share * e.weight
                    continue
                st = self.base.extend(self.base.extend(e.state, (a, c)), (b, d))
                put(hist, share * e.weight, st)
            if len(out) > self.cap:
                raise PoolCapExceeded(f"history pool exceeded {self.cap} entries")
        self.entries = out


class MasterSimilarity:
    """Similarity learner built from a classification base via hallucinated histories.

    If ``truth`` (pattern -> class) is given, the learner also tracks the
    pool history built from the true labels and records the weight
    certificate after each mistake.
    """

    def __init__(
        self,
        base: BaseClassifier,
        beta: float = BETA,
        pool_cap: int = DEFAULT_POOL_CAP,
        truth: Callable[[Hashable], int] | None = None,
    ):
        self.pool = HistoryPool(base, beta, pool_cap)
        self.truth = truth
        self.tracked: tuple[Example, ...] = ()
        self.tracked_splits = 0
        self.mistakes = 0
        self.shrink_ratios: list[float] = []
        self._last = None
        self.touched = 0

    def predict(self, a, b) -> int:
        same, diff = self.pool.votes(a, b)
        self.touched = len(self.pool)
        yhat = 0 if same >= diff else 1
        self._last = (a, b, yhat)
        return yhat

    def update(self, y: int) -> None:
        a, b, yhat = self._last
        if y == yhat:
            return
        self.mistakes += 1
        pool = self.pool
        before = pool.total_weight()
        if self.truth is not None:
            key = pool.base.canonical(self.tracked)
            e = pool.entries[key]
            if int(pool._class(e, a) != pool._class(e, b)) != y:
                self.tracked = self.tracked + ((a, self.truth(a)), (b, self.truth(b)))
                self.tracked_splits += 1
        pool.split(a, b, y)
        self.shrink_ratios.append(pool.total_weight() / before)

    def tracked_weight(self) -> float:
        return self.pool.weight_of(self.tracked)


def master_weight_ceiling(K: int, splits: int, beta: float = BETA) -> float:
    """Mistake ceiling implied by the weight argument for ``splits`` tracked splits."""
    if K < 2:
        return 0.0
    return splits * math.log(K * (K - 1) / beta) / math.log(2.0 / (1.0 + beta))


class ClassFromSimilarity:
    """Classifier driven by a similarity learner and one prototype per class.

    ``sim`` must expose ``predict(a, b) -> {0, 1}`` and ``update(y)``.
    ``sim_mistakes`` counts the similarity learner's errors on the examples
    it has been trained on.
    """

    def __init__(self, sim, K: int | None = None):
        self.sim = sim
        self.K = K
        self.prototypes: list[tuple[Hashable, int]] = []
        self.sim_mistakes = 0
        self.mistakes = 0
        self._last = None
        self.touched = 0

    def _judge(self, x) -> list[int]:
        # a pattern is always similar to itself; the base is not consulted
        return [0 if p == x else self.sim.predict(p, x) for p, _ in self.prototypes]

    def predict(self, x) -> int:
        verdicts = self._judge(x)
        similar = [c for (_, c), v in zip(self.prototypes, verdicts) if v == 0]
        yhat = min(similar) if similar else 1
        self.touched = len(self.prototypes)
        self._last = (x, verdicts, yhat)
        return yhat

    def update(self, c: int) -> None:
        x, verdicts, yhat = self._last
        if c == yhat:
            return
        self.mistakes += 1
        truth = [int(pc != c) for _, pc in self.prototypes]
        # wrongly judged pairs first: the first one is a guaranteed base mistake
        order = sorted(range(len(truth)), key=lambda k: verdicts[k] == truth[k])
        for k in order:
            p = self.prototypes[k][0]
            if p == x:
                continue
            if self.sim.predict(p, x) != truth[k]:
                self.sim_mistakes += 1
            self.sim.update(truth[k])
        if all(pc != c for _, pc in self.prototypes):
            self.prototypes.append((x, c))


class OracleSimilarity:
    """Similarity learner that answers from the true labels; never errs."""

    def __init__(self, lab: Labeling):
        self.lab = lab
        self.touched = 0

    def predict(self, a, b) -> int:
        return int(self.lab[a] != self.lab[b])

    def update(self, y: int) -> None:
        pass


class GraphPerceptron:
    """Binary kernel Perceptron on vertices with kernel ``L^+ + 1 1^T``.

    Predicts +1 iff the score is positive; labels are +1/-1.
    """

    def __init__(self, lp: LaplacianPseudoinverse):
        self.lp = lp
        self._idx: list[int] = []
        self._coef: list[float] = []
        self.mistakes = 0
        self._last = None

    def score(self, v: int) -> float:
        if not self._idx:
            return 0.0
        col = self.lp.matrix[np.array(self._idx), v - 1] + 1.0
        return float(np.dot(self._coef, col))

    def predict(self, v: int) -> int:
        yhat = 1 if self.score(v) > 0 else -1
        self._last = (v, yhat)
        return yhat

    def update(self, y: int) -> None:
        v, yhat = self._last
        if y == yhat:
            return
        self.mistakes += 1
        self._idx.append(v - 1)
        self._coef.append(float(y))


class OneVsRest:
    """K-class vertex classifier from per-class binary learners spawned on first sight."""

    def __init__(self, make_binary: Callable[[], object]):
        self.make_binary = make_binary
        self.learners: dict[int, object] = {}
        self.spawned = 0
        self._last = None
        self.touched = 0

    @classmethod
    def for_graph(cls, g: Graph, lp: LaplacianPseudoinverse | None = None):
        lp = lp if lp is not None else laplacian_pseudoinverse(g)
        return cls(lambda: GraphPerceptron(lp))

    def binary_mistakes(self) -> int:
        return sum(l.mistakes for l in self.learners.values())

    def predict(self, v) -> int:
        claims = [k for k, l in sorted(self.learners.items()) if l.predict(v) == 1]
        self.touched = len(self.learners)
        yhat = claims[0] if len(claims) == 1 else 1
        self._last = (v, yhat)
        return yhat

    def update(self, c: int) -> None:
        v, _ = self._last
        for k, l in self.learners.items():
            l.update(1 if k == c else -1)
        if c not in self.learners:
            l = self.make_binary()
            l.predict(v)
            l.update(1)
            self.learners[c] = l
            self.spawned += 1
