"""Experiment plumbing: generators, query streams, learner factory and reports."""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

import numpy as np

from .errors import ConfigError, GraphError
from .fastbst import FastBstPerceptron
from .graph import (
    Graph,
    Labeling,
    build_graph,
    cut_size,
    laplacian_pseudoinverse,
    max_resistance,
    per_class_cut_size,
    read_edge_list,
    read_labels,
    resistance_weighted_cutsize,
    shortest_path,
    similarity_label,
)
from .matrix import KernelPerceptron, MatrixWinnow
from .reductions import (
    DEFAULT_POOL_CAP,
    ClassFromSimilarity,
    HalvingBase,
    MasterSimilarity,
    OneVsRest,
    ReplayBase,
    halving_subsequential_bound,
)
from .spanning import build_bst, bst_cut_sizes, linearize, sample_uniform_spanning_tree
from .unknown import RnormPerceptron, TreeWinnow

GRAPH_KINDS = ("cliques", "grid", "cycle", "random-tree", "er")
LABEL_KINDS = ("by-cluster", "bfs-regions", "random")
PAIR_POLICIES = ("random", "all-pairs")
PATH_POLICIES = ("shortest", "random-walk", "dfs")
MAX_RESAMPLES = 10**4
MAX_MASTER_K = 3

KNOWN_LEARNERS = ("matrix-perceptron", "matrix-winnow", "fast-bst", "master-sim")
PATH_LEARNERS = ("rnorm", "tree-winnow")
CLASS_LEARNERS = ("class-from-sim", "one-vs-rest")
LEARNERS = KNOWN_LEARNERS + PATH_LEARNERS + CLASS_LEARNERS


# -- generators ---------------------------------------------------------------


def _int_param(params: dict, key: str, default=None) -> int:
    if key not in params:
        if default is None:
            raise ConfigError(f"missing generator parameter {key!r}")
        return default
    try:
        return int(params[key])
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key!r} must be an integer") from None


def generate_graph(kind: str, params: dict, seed=None) -> Graph:
    rng = np.random.default_rng(seed)
    if kind == "cycle":
        n = _int_param(params, "n")
        if n < 3:
            raise ConfigError("cycle needs n >= 3")
        return build_graph(n, [(v, v % n + 1) for v in range(1, n + 1)])
    if kind == "grid":
        rows, cols = _int_param(params, "rows"), _int_param(params, "cols")
        if rows < 1 or cols < 1 or rows * cols < 2:
            raise ConfigError("grid needs at least 2 cells")
        vid = lambda r, c: r * cols + c + 1
        edges = [(vid(r, c), vid(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
        edges += [(vid(r, c), vid(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
        return build_graph(rows * cols, edges)
    if kind == "random-tree":
        n = _int_param(params, "n")
        if n < 2:
            raise ConfigError("random-tree needs n >= 2")
        # random recursive tree on a random vertex relabeling
        perm = rng.permutation(n) + 1
        edges = [(int(perm[v]), int(perm[rng.integers(0, v)])) for v in range(1, n)]
        return build_graph(n, edges)
    if kind == "er":
        n = _int_param(params, "n")
        p = float(params.get("p", 0.3))
        if n < 2 or not 0.0 < p <= 1.0:
            raise ConfigError("er needs n >= 2 and 0 < p <= 1")
        pairs = np.array(list(combinations(range(1, n + 1), 2)))
        for _ in range(MAX_RESAMPLES):
            keep = pairs[rng.random(len(pairs)) < p]
            try:
                return build_graph(n, keep.tolist())
            except GraphError:
                continue
        raise ConfigError(f"er(n={n}, p={p}) stayed disconnected after {MAX_RESAMPLES} draws")
    if kind == "cliques":
        p, size = _int_param(params, "p"), _int_param(params, "size")
        q = _int_param(params, "q", max(p - 1, 0))
        if p < 1 or size < 1 or p * size < 2:
            raise ConfigError("cliques needs p >= 1, size >= 1 and at least 2 vertices")
        n = p * size
        base = [
            (c * size + a, c * size + b)
            for c in range(p)
            for a, b in combinations(range(1, size + 1), 2)
        ]
        cross = [(u, v) for u, v in combinations(range(1, n + 1), 2) if (u - 1) // size != (v - 1) // size]
        if q > len(cross):
            raise ConfigError(f"only {len(cross)} inter-clique edges exist, asked for {q}")
        for _ in range(MAX_RESAMPLES):
            pick = rng.choice(len(cross), size=q, replace=False) if q else []
            try:
                return build_graph(n, base + [cross[k] for k in sorted(pick)])
            except GraphError:
                continue
        raise ConfigError(f"cliques(p={p}, q={q}) stayed disconnected after {MAX_RESAMPLES} draws")
    raise ConfigError(f"unknown graph kind {kind!r}; choose from {', '.join(GRAPH_KINDS)}")


def generate_labeling(kind: str, params: dict, seed, g: Graph) -> Labeling:
    rng = np.random.default_rng(seed)
    n = g.n
    if kind == "by-cluster":
        size = _int_param(params, "size")
        if size < 1 or n % size:
            raise ConfigError("by-cluster needs a cluster size dividing n")
        return Labeling.from_sequence((v - 1) // size + 1 for v in range(1, n + 1))
    K = _int_param(params, "K", 2)
    if not 1 <= K <= n:
        raise ConfigError(f"K must lie in 1..{n}")
    if kind == "random":
        y = rng.integers(1, K + 1, size=n)
        first = rng.permutation(n)[:K]
        y[first] = np.arange(1, K + 1)
        return Labeling.from_sequence(y.tolist())
    if kind == "bfs-regions":
        seeds = rng.permutation(n)[:K] + 1
        y = [0] * (n + 1)
        queue = deque()
        for k, s in enumerate(seeds, start=1):
            y[s] = k
            queue.append(int(s))
        while queue:
            u = queue.popleft()
            for v in g.adjacency[u]:
                if not y[v]:
                    y[v] = y[u]
                    queue.append(v)
        return Labeling.from_sequence(y[1:])
    raise ConfigError(f"unknown labeling kind {kind!r}; choose from {', '.join(LABEL_KINDS)}")


def classes_connected(g: Graph, lab: Labeling) -> bool:
    for k in range(1, lab.K + 1):
        members = lab.members(k)
        seen = {members[0]}
        queue = deque([members[0]])
        while queue:
            u = queue.popleft()
            for v in g.adjacency[u]:
                if v not in seen and lab[v] == k:
                    seen.add(v)
                    queue.append(v)
        if len(seen) != len(members):
            return False
    return True


# -- query streams ------------------------------------------------------------


def pair_stream(policy: str, n: int, rng: np.random.Generator) -> Iterator[tuple[int, int]]:
    if policy == "random":
        while True:
            i, j = rng.choice(n, size=2, replace=False) + 1
            yield int(i), int(j)
    elif policy == "all-pairs":
        pairs = list(combinations(range(1, n + 1), 2))
        while True:
            for k in rng.permutation(len(pairs)):
                yield pairs[k]
    else:
        raise ConfigError(f"unknown pair policy {policy!r}")


def vertex_stream(policy: str, n: int, rng: np.random.Generator) -> Iterator[int]:
    if policy == "random":
        while True:
            yield int(rng.integers(1, n + 1))
    elif policy == "all-pairs":
        while True:
            for v in rng.permutation(n) + 1:
                yield int(v)
    else:
        raise ConfigError(f"unknown pair policy {policy!r}")


def pass_length(cfg: "ExperimentConfig", n: int) -> int:
    return n if cfg.learner in CLASS_LEARNERS else n * (n - 1) // 2


def random_walk_path(g: Graph, i: int, j: int, rng: np.random.Generator) -> list[int]:
    """Loop-erased random walk from ``i`` until it hits ``j``."""
    path = [i]
    pos = {i: 0}
    u = i
    while u != j:
        nb = g.adjacency[u]
        u = nb[int(rng.integers(len(nb)))]
        if u in pos:
            for w in path[pos[u] + 1:]:
                del pos[w]
            del path[pos[u] + 1:]
        else:
            pos[u] = len(path)
            path.append(u)
    return path


class DfsTreePaths:
    """Paths in the depth-first tree of ``g`` rooted at vertex 1."""

    def __init__(self, g: Graph):
        parent = [0] * (g.n + 1)
        depth = [0] * (g.n + 1)
        seen = [False] * (g.n + 1)
        stack = [(1, 0)]
        while stack:
            u, p = stack.pop()
            if seen[u]:
                continue
            seen[u] = True
            parent[u] = p
            depth[u] = depth[p] + 1 if p else 0
            stack.extend((v, u) for v in reversed(g.adjacency[u]) if not seen[v])
        self.parent, self.depth = parent, depth

    def __call__(self, i: int, j: int) -> list[int]:
        a, b = i, j
        up, down = [], []
        while self.depth[a] > self.depth[b]:
            up.append(a)
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            down.append(b)
            b = self.parent[b]
        while a != b:
            up.append(a)
            down.append(b)
            a, b = self.parent[a], self.parent[b]
        return up + [a] + down[::-1]


def path_provider(policy: str, g: Graph, rng: np.random.Generator):
    if policy == "shortest":
        return lambda i, j: shortest_path(g, i, j)
    if policy == "random-walk":
        return lambda i, j: random_walk_path(g, i, j, rng)
    if policy == "dfs":
        return DfsTreePaths(g)
    raise ConfigError(f"unknown path policy {policy!r}; choose from {', '.join(PATH_POLICIES)}")


# -- configuration --------------------------------------------------------------


@dataclass
class ExperimentConfig:
    learner: str
    graph_file: str | None = None
    gen: str | None = None
    gen_params: dict = field(default_factory=dict)
    labels_file: str | None = None
    labgen: str | None = None
    lab_params: dict = field(default_factory=dict)
    rounds: int = 1000
    pairs: str = "random"
    paths: str = "shortest"
    seed_graph: int = 0
    seed_tree: int = 0
    seed_seq: int = 0
    cutsize: int | None = None
    base: str = "halving"
    pool_cap: int = DEFAULT_POOL_CAP
    until_clean: bool = False  # stop after the first mistake-free all-pairs pass
    out: str | None = None

    def validate(self) -> None:
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}; choose from {', '.join(LEARNERS)}")
        if (self.graph_file is None) == (self.gen is None):
            raise ConfigError("give exactly one of a graph file or a graph generator")
        if (self.labels_file is None) == (self.labgen is None):
            raise ConfigError("give exactly one of a label file or a labeling generator")
        if self.rounds < 0:
            raise ConfigError("rounds must be nonnegative")
        if self.pairs not in PAIR_POLICIES:
            raise ConfigError(f"unknown pair policy {self.pairs!r}")
        if self.paths not in PATH_POLICIES:
            raise ConfigError(f"unknown path policy {self.paths!r}")
        if self.until_clean and self.pairs != "all-pairs":
            raise ConfigError("until_clean needs the all-pairs policy")
        if self.base not in ("halving", "tree-winnow"):
            raise ConfigError(f"unknown base {self.base!r}")
        if self.pool_cap < 1:
            raise ConfigError("pool cap must be positive")

    @property
    def regime(self) -> str:
        if self.learner in PATH_LEARNERS:
            return "unknown"
        if self.learner in CLASS_LEARNERS:
            return "classify"
        return "known"


def load_instance(cfg: ExperimentConfig) -> tuple[Graph, Labeling]:
    graph_seq, label_seq = np.random.SeedSequence(cfg.seed_graph).spawn(2)
    if cfg.graph_file is not None:
        g = read_edge_list(cfg.graph_file)
    else:
        g = generate_graph(cfg.gen, cfg.gen_params, graph_seq)
    if cfg.labels_file is not None:
        lab = read_labels(cfg.labels_file, g.n)
    else:
        params = dict(cfg.lab_params)
        if cfg.labgen == "by-cluster" and "size" not in params and "size" in cfg.gen_params:
            params["size"] = cfg.gen_params["size"]
        lab = generate_labeling(cfg.labgen, params, label_seq, g)
    if lab.n != g.n:
        raise ConfigError(f"labeling has {lab.n} vertices, graph has {g.n}")
    return g, lab


class PathFed:
    """Adapter giving a path-consuming learner the plain ``predict(i, j)`` interface."""

    def __init__(self, learner, paths):
        self.learner = learner
        self.paths = paths

    @property
    def touched(self):
        return self.learner.touched

    def predict(self, i, j):
        return self.learner.predict(i, j, self.paths(i, j))

    def update(self, y):
        self.learner.update(y)


def _require_tree_clusters(g: Graph, lab: Labeling, who: str) -> None:
    if not g.is_tree():
        raise ConfigError(f"{who} needs a tree graph")
    if not classes_connected(g, lab):
        raise ConfigError(f"{who} needs every class to be connected")


def make_learner(cfg: ExperimentConfig, g: Graph, lab: Labeling, tree_rng=None):
    """Build the learner named by ``cfg``; returns (learner, extra-info dict)."""
    name = cfg.learner
    info: dict = {}
    if name == "matrix-perceptron":
        return KernelPerceptron.for_graph(g), info
    if name == "matrix-winnow":
        cs = cfg.cutsize if cfg.cutsize is not None else max(cut_size(g, lab), 1)
        if cs < 1:
            raise ConfigError("matrix-winnow needs --cutsize >= 1")
        info["cutsize_param"] = cs
        return MatrixWinnow(g, cs), info
    if name == "fast-bst":
        t = sample_uniform_spanning_tree(g, tree_rng)
        b = build_bst(linearize(t), lab)
        phi_b, phi_t = bst_cut_sizes(b, lab, t)
        info["tree_cut"] = sum(phi_t.values()) // 2
        info["bst_cut"] = sum(phi_b.values()) // 2
        info["n_pad"] = b.n_pad
        return FastBstPerceptron(b), info
    if name == "rnorm":
        if g.n < 3:
            raise ConfigError("rnorm needs n >= 3")
        return RnormPerceptron(g.n), info
    if name == "tree-winnow":
        _require_tree_clusters(g, lab, "tree-winnow")
        return TreeWinnow(g.n), info
    if name == "master-sim":
        if lab.K > MAX_MASTER_K:
            raise ConfigError(f"master-sim is limited to K <= {MAX_MASTER_K}")
        K = max(lab.K, 2)
        if cfg.base == "halving":
            base = HalvingBase(K)
        else:
            _require_tree_clusters(g, lab, "master-sim --base tree-winnow")
            paths = path_provider("shortest", g, None)
            base = ReplayBase(K, lambda: ClassFromSimilarity(PathFed(TreeWinnow(g.n), paths)))
        return MasterSimilarity(base, pool_cap=cfg.pool_cap, truth=lambda v: lab[v]), info
    if name == "class-from-sim":
        return ClassFromSimilarity(KernelPerceptron.for_graph(g), lab.K), info
    if name == "one-vs-rest":
        return OneVsRest.for_graph(g), info
    raise ConfigError(f"unknown learner {name!r}")


# -- running ------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    round: int
    i: int
    j: int | None
    y: int
    yhat: int
    mistake: bool
    cum_mistakes: int
    touched: int
    path: tuple[int, ...] | None = None


def run_experiment(cfg: ExperimentConfig, g: Graph | None = None, lab: Labeling | None = None):
    """Run one configured experiment; returns ``(records, summary)``."""
    cfg.validate()
    if g is None or lab is None:
        g, lab = load_instance(cfg)
    tree_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed_tree))
    seq_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed_seq))
    learner, info = make_learner(cfg, g, lab, tree_rng)
    regime = cfg.regime
    paths = path_provider(cfg.paths, g, seq_rng) if regime == "unknown" else None
    plen = pass_length(cfg, g.n)

    records: list[RoundRecord] = []
    cum = 0
    pass_mistakes = 0
    clean_pass = None
    if regime == "classify":
        stream = ((v, None) for v in vertex_stream(cfg.pairs, g.n, seq_rng))
    else:
        stream = pair_stream(cfg.pairs, g.n, seq_rng)
    for t in range(1, cfg.rounds + 1):
        i, j = next(stream)
        path = None
        if regime == "classify":
            y = lab[i]
            yhat = learner.predict(i)
        elif regime == "unknown":
            path = tuple(paths(i, j))
            y = similarity_label(lab, i, j)
            yhat = learner.predict(i, j, path)
        else:
            y = similarity_label(lab, i, j)
            yhat = learner.predict(i, j)
        learner.update(y)
        miss = yhat != y
        cum += miss
        pass_mistakes += miss
        records.append(RoundRecord(t, i, j, y, yhat, miss, cum, int(learner.touched), path))
        if t % plen == 0:
            if pass_mistakes == 0 and clean_pass is None:
                clean_pass = t // plen
                if cfg.until_clean:
                    break
            pass_mistakes = 0

    summary = summarize(g, lab, cfg, cum, len(records), info)
    summary["clean_pass"] = clean_pass
    if isinstance(learner, MasterSimilarity):
        summary["tracked_splits"] = learner.tracked_splits
        summary["pool_size"] = len(learner.pool)
        ex = [(r.i, lab[r.i]) for r in records] + [(r.j, lab[r.j]) for r in records]
        summary["base_bound"] = halving_subsequential_bound(ex) if cfg.base == "halving" else None
    if isinstance(learner, ClassFromSimilarity):
        summary["sim_mistakes"] = learner.sim_mistakes
    if isinstance(learner, OneVsRest):
        summary["binary_mistakes"] = learner.binary_mistakes()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(records_to_csv(records, regime == "unknown"))
    return records, summary


def bound_terms(g: Graph, lab: Labeling) -> dict:
    """Bound expressions without constants, evaluated numerically."""
    lp = laplacian_pseudoinverse(g)
    cut = cut_size(g, lab)
    R = max_resistance(lp)
    phi = resistance_weighted_cutsize(g, lab, lp)
    n = g.n
    log2n = math.log2(n)
    return {
        "n": n,
        "m": g.m,
        "K": lab.K,
        "cut_size": cut,
        "per_class_cut": {k: per_class_cut_size(g, lab, k) for k in range(1, lab.K + 1)},
        "phi": phi,
        "R": R,
        "bound_matrix_perceptron": cut**2 * R**2,
        "bound_matrix_winnow": cut * R * log2n,
        "bound_bst_winnow": phi * log2n**3,
        "bound_bst_perceptron": phi**2 * log2n**4,
        "bound_rnorm": cut**4 * math.log(n),
        "bound_tree_winnow": lab.K * log2n if g.is_tree() else None,
    }


LEARNER_BOUND = {
    "matrix-perceptron": "bound_matrix_perceptron",
    "matrix-winnow": "bound_matrix_winnow",
    "fast-bst": "bound_bst_perceptron",
    "rnorm": "bound_rnorm",
    "tree-winnow": "bound_tree_winnow",
}


def summarize(g, lab, cfg, mistakes, rounds, info) -> dict:
    out = {"learner": cfg.learner, "rounds": rounds, "mistakes": mistakes}
    out.update(bound_terms(g, lab))
    out.update(info)
    key = LEARNER_BOUND.get(cfg.learner)
    bound = out.get(key) if key else None
    out["bound"] = bound
    out["ratio"] = mistakes / bound if bound else None
    return out


def records_to_csv(records, with_path: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["round", "i", "j", "y", "yhat", "mistake", "cum_mistakes", "touched"]
    w.writerow(header + (["path"] if with_path else []))
    for r in records:
        row = [r.round, r.i, "" if r.j is None else r.j, r.y, r.yhat, int(r.mistake), r.cum_mistakes, r.touched]
        if with_path:
            row.append(";".join(map(str, r.path or ())))
        w.writerow(row)
    return buf.getvalue()


def bounds_report(g: Graph, lab: Labeling) -> str:
    terms = bound_terms(g, lab)
    lines = ["quantity,value"]
    for k, v in terms.items():
        if k == "per_class_cut":
            for c, x in v.items():
                lines.append(f"per_class_cut_{c},{x}")
        else:
            lines.append(f"{k},{'' if v is None else v}")
    lines.append("# bound_* rows are big-O expressions evaluated without constants")
    return "\n".join(lines) + "\n"


# -- standard suite -----------------------------------------------------------------

# (graph kind, graph params, labeling kind, labeling params); n <= 64 throughout
STANDARD_SUITE = (
    ("cliques", {"p": 2, "size": 8, "q": 1}, "by-cluster", {}),
    ("cliques", {"p": 3, "size": 6, "q": 3}, "by-cluster", {}),
    ("cliques", {"p": 4, "size": 8, "q": 4}, "by-cluster", {}),
    ("cliques", {"p": 4, "size": 16, "q": 5}, "by-cluster", {}),
    ("grid", {"rows": 6, "cols": 6}, "bfs-regions", {"K": 2}),
    ("grid", {"rows": 8, "cols": 8}, "bfs-regions", {"K": 3}),
    ("cycle", {"n": 32}, "bfs-regions", {"K": 2}),
    ("random-tree", {"n": 48}, "bfs-regions", {"K": 3}),
    ("er", {"n": 24, "p": 0.3}, "bfs-regions", {"K": 2}),
)


def suite_config(entry, learner: str, seed: int = 0, **kw) -> ExperimentConfig:
    gen, gp, labgen, lp = entry
    return ExperimentConfig(
        learner=learner,
        gen=gen,
        gen_params=dict(gp),
        labgen=labgen,
        lab_params=dict(lp),
        pairs="all-pairs",
        seed_graph=seed,
        seed_tree=seed,
        seed_seq=seed,
        **kw,
    )
