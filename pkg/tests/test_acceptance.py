"""Acceptance criteria.  Each test registers one verdict line via ``record_acceptance``.

Frozen empirical constants come from ``scripts/calibrate.py`` (standard suite,
seeds 0-2, at most 50 all-pairs passes); see the decisions ledger for the
observed values.
"""

import functools
import math
import time

import numpy as np
import pytest

from graphsim.fastbst import FastBstPerceptron
from graphsim.graph import (
    Labeling,
    build_graph,
    effective_resistance,
    laplacian_pseudoinverse,
    resistance_weighted_cutsize,
    shortest_path,
    similarity_label,
)
from graphsim.harness import (
    STANDARD_SUITE,
    ExperimentConfig,
    generate_labeling,
    load_instance,
    pass_length,
    random_walk_path,
    run_experiment,
    suite_config,
)
from graphsim.matrix import KernelPerceptron, comparator_matrix, pseudo_incidence
from graphsim.reductions import (
    BETA,
    ClassFromSimilarity,
    HalvingBase,
    MasterSimilarity,
    OracleSimilarity,
    halving_subsequential_bound,
)
from graphsim.spanning import bst_cut_sizes, build_bst, linearize, sample_uniform_spanning_tree
from graphsim.unknown import IncrementalForest, RnormPerceptron, build_comparator

from conftest import record_acceptance
from oracles import path_qp

MAX_PASSES = 50
SUITE_SEEDS = (0, 1, 2)

# frozen at calibration
RNORM_RATIO_CEILING = 11.0  # observed max 7.21
WINNOW_RATIO_CEILING = 1.3  # observed max 0.85
TOUCHED_CEILING = 8.0  # observed max 4.56 on the suite; 7 is the supremum, at n_pad = 2
TREE_WINNOW_CONSTANT = 8.0

# trees with connected classes used wherever tree-winnow needs valid input
TREE_ENTRIES = (
    ("random-tree", {"n": 16}, "bfs-regions", {"K": 2}),
    ("random-tree", {"n": 32}, "bfs-regions", {"K": 3}),
    ("random-tree", {"n": 48}, "bfs-regions", {"K": 3}),
    ("random-tree", {"n": 64}, "bfs-regions", {"K": 4}),
)


def label(entry):
    gen, gp, _, lp = entry
    return f"{gen}({','.join(f'{k}={v}' for k, v in {**gp, **lp}.items())})"


@functools.lru_cache(maxsize=None)
def suite_run(learner, entry_index, seed, trees=False):
    entry = (TREE_ENTRIES if trees else STANDARD_SUITE)[entry_index]
    cfg = suite_config(entry, learner, seed, until_clean=True)
    g, lab = load_instance(cfg)
    cfg.rounds = MAX_PASSES * pass_length(cfg, g.n)
    records, summary = run_experiment(cfg, g, lab)
    summary["max_touched"] = max(r.touched for r in records)
    return summary


def all_runs(learner, trees=False):
    entries = TREE_ENTRIES if trees else STANDARD_SUITE
    for k, entry in enumerate(entries):
        for seed in SUITE_SEEDS:
            yield entry, seed, suite_run(learner, k, seed, trees)


def random_connected(rng, n, extra):
    edges = [(v, int(rng.integers(1, v))) for v in range(2, n + 1)]
    edges += [tuple(int(x) for x in rng.choice(n, 2, replace=False) + 1) for _ in range(extra)]
    return build_graph(n, edges)


def random_labeling(rng, n, K):
    y = np.concatenate([np.arange(1, K + 1), rng.integers(1, K + 1, n - K)])
    return Labeling.from_sequence(rng.permutation(y).tolist())


# -- 1 ------------------------------------------------------------------------------


def test_1_fast_dense_equivalence():
    t0 = time.time()
    bad = runs = 0
    for seed in range(20):
        for n in (8, 16, 32, 64):
            for K in (2, 3, 5):
                rng = np.random.default_rng([seed, n, K])
                g = random_connected(rng, n, n)
                lab = random_labeling(rng, n, K)
                b = build_bst(linearize(sample_uniform_spanning_tree(g, rng)), lab)
                fast, dense = FastBstPerceptron(b), KernelPerceptron.on_bst(b)
                for _ in range(2000):
                    i, j = (int(v) for v in rng.choice(n, 2, replace=False) + 1)
                    y = similarity_label(lab, i, j)
                    bad += fast.predict(i, j) != dense.predict(i, j)
                    fast.update(y)
                    dense.update(y)
                runs += 1
    elapsed = time.time() - t0
    ok = bad == 0 and elapsed < 120
    record_acceptance("1", ok, f"{runs} runs x 2000 rounds, {bad} discrepancies, {elapsed:.1f}s")
    assert bad == 0
    assert elapsed < 120


# -- 2 ------------------------------------------------------------------------------


def test_2a_known_graph_separability():
    rng = np.random.default_rng(2)
    violations = checked = 0
    for _ in range(100):
        n = int(rng.integers(2, 33))
        g = random_connected(rng, n, int(rng.integers(0, 2 * n)))
        lab = random_labeling(rng, n, int(rng.integers(1, min(n, 6) + 1)))
        P = pseudo_incidence(g, laplacian_pseudoinverse(g))
        C = P @ comparator_matrix(g, lab)
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                z = P[i - 1] - P[j - 1]
                val = float(z @ (C[i - 1] - C[j - 1]))
                v = round(val)
                violations += abs(val - v) > 1e-6 or v != 2 * similarity_label(lab, i, j)
                checked += 1
    record_acceptance("2a", violations == 0, f"<U,X> in {{0,2}} on {checked} pairs of 100 graphs, {violations} violations")
    assert violations == 0


def test_2b_unknown_graph_separability():
    rng = np.random.default_rng(22)
    violations = checked = 0
    for _ in range(100):
        n = int(rng.integers(3, 33))
        g = random_connected(rng, n, int(rng.integers(0, 2 * n)))
        lab = random_labeling(rng, n, int(rng.integers(1, min(n, 6) + 1)))
        f = IncrementalForest(n)
        xs = []
        for _ in range(150):
            i, j = (int(v) for v in rng.choice(n, 2, replace=False) + 1)
            xs.append(f.ingest_path(random_walk_path(g, i, j, rng)))
        U = build_comparator(f.completed(g), lab)
        for x in xs:
            violations += int(np.sum((U @ x.dense(n - 1)) ** 2)) != 2 * similarity_label(lab, *x.pair)
            checked += 1
    record_acceptance("2b", violations == 0, f"sum_k (u_k.x)^2 = 2y on {checked} rounds of 100 runs, {violations} violations")
    assert violations == 0


# -- 3 ------------------------------------------------------------------------------


@pytest.mark.parametrize("learner", ["matrix-perceptron", "matrix-winnow", "fast-bst", "rnorm", "tree-winnow"])
def test_3_all_pairs_convergence(learner):
    trees = learner == "tree-winnow"
    failures, worst, total = [], 0, 0
    for entry, seed, s in all_runs(learner, trees):
        total += 1
        if s["clean_pass"] is None:
            failures.append(f"{label(entry)} seed {seed} (cut {s['cut_size']})")
        else:
            worst = max(worst, s["clean_pass"])
    detail = f"{learner}: {total - len(failures)}/{total} runs clean within {MAX_PASSES} passes (slowest {worst})"
    if failures:
        detail += "; not clean: " + ", ".join(failures)
    record_acceptance(f"3.{learner}", not failures, detail)
    assert not failures, detail


# -- 4 ------------------------------------------------------------------------------


def test_4_figures(fig4a_graph):
    f = IncrementalForest(7)
    seq = [
        ([2, 1, 3], (-1, 1, 0, 0, 0, 0)),
        ([4, 1, 2, 5], (1, 0, -1, 1, 0, 0)),
        ([6, 7], (0, 0, 0, 0, 1, 0)),
        ([4, 6, 7, 5], (1, 0, -1, 1, 0, 0)),
        ([6, 4], (0, 0, 0, 0, 0, -1)),
    ]
    got = [tuple(f.ingest_path(p).dense(6)) for p, _ in seq]
    ok3 = got == [x for _, x in seq]

    t = IncrementalForest(7)
    for p in [[1, 2], [1, 3], [1, 4], [1, 5], [2, 7], [3, 6]]:
        t.ingest_path(p)
    u = build_comparator(t, Labeling.from_sequence([2, 3, 3, 1, 1, 1, 1]))[0]
    qp = path_qp(t, fig4a_graph, [6, 3, 1, 2, 7])
    ok4 = tuple(u) == (0, 0, -1, -1, -1, -1) and tuple(qp) == (1, -1, 0, 0, 1, -1) and int(u @ qp) == 0
    record_acceptance("4", ok3 and ok4, f"path-disclosure sequence {'exact' if ok3 else 'MISMATCH'}; cutset identities {'exact' if ok4 else 'MISMATCH'}")
    assert ok3 and ok4


# -- 5 ------------------------------------------------------------------------------


def tree_statistics(g, labelings, N, rng):
    edge_pos = {e: k for k, e in enumerate(g.edges)}
    inc = np.zeros(g.m)
    cuts = np.zeros((len(labelings), N))
    cut_mask = np.array([[lab[u] != lab[v] for u, v in g.edges] for lab in labelings], dtype=float)
    for s in range(N):
        t = sample_uniform_spanning_tree(g, rng)
        row = np.zeros(g.m)
        row[[edge_pos[e] for e in t.edges()]] = 1.0
        inc += row
        cuts[:, s] = cut_mask @ row
    return inc / N, cuts


def test_5_spanning_tree_statistics(cycle8, two_cliques):
    t0 = time.time()
    rng = np.random.default_rng(5)
    N = 100_000
    worst_freq, worst_z = 0.0, 0.0
    ok = True
    cases = [
        (cycle8, [[1] * 4 + [2] * 4, [1, 2, 1, 1, 2, 2, 1, 2]]),
        (two_cliques, [[1] * 4 + [2] * 4, [1, 1, 2, 2, 2, 2, 1, 1]]),
    ]
    for g, ys in cases:
        labs = [Labeling.from_sequence(y) for y in ys]
        lp = laplacian_pseudoinverse(g)
        freq, cuts = tree_statistics(g, labs, N, rng)
        R = np.array([effective_resistance(lp, u, v) for u, v in g.edges])
        worst_freq = max(worst_freq, float(np.max(np.abs(freq - R))))
        for lab, c in zip(labs, cuts):
            phi = resistance_weighted_cutsize(g, lab, lp)
            se = c.std(ddof=1) / math.sqrt(N)
            dev = abs(c.mean() - phi)
            # a constant tree cut has zero spread; allow float slack in phi
            ok &= dev <= 3 * se + 1e-9
            if se > 0:
                worst_z = max(worst_z, dev / se)
    elapsed = time.time() - t0
    ok &= worst_freq <= 0.01 and elapsed < 60
    record_acceptance(
        "5", ok, f"max |freq - R| = {worst_freq:.4f}, worst |mean cut - phi| = {worst_z:.2f} SE, {elapsed:.1f}s"
    )
    assert ok


# -- 6 ------------------------------------------------------------------------------


def test_6_bst_cut_inequality():
    rng = np.random.default_rng(6)
    violations = 0
    for s in range(1000):
        n = int(rng.integers(2, 65))
        g = random_connected(rng, n, int(rng.integers(0, 2 * n)))
        K = int(rng.integers(1, min(n, 6) + 1))
        if s % 2:
            lab = generate_labeling("bfs-regions", {"K": K}, rng, g)
        else:
            lab = random_labeling(rng, n, K)
        t = sample_uniform_spanning_tree(g, rng)
        b = build_bst(linearize(t), lab)
        phi_b, phi_t = bst_cut_sizes(b, lab, t)
        violations += any(phi_b[k] > 2 * phi_t[k] * b.depth for k in phi_b)
    record_acceptance("6", violations == 0, f"1000 sampled instances, {violations} violations")
    assert violations == 0


# -- 7 ------------------------------------------------------------------------------


def test_7_tree_winnow_ceiling():
    worst, count = 0.0, 0
    for n in (16, 64, 128, 256):
        for K in (2, 4, 8):
            for seed in range(2):
                cfg = ExperimentConfig(
                    learner="tree-winnow", gen="random-tree", gen_params={"n": n},
                    labgen="bfs-regions", lab_params={"K": K}, pairs="random",
                    rounds=4000, seed_graph=seed, seed_seq=seed,
                )
                _, s = run_experiment(cfg)
                worst = max(worst, s["mistakes"] / (K * math.log2(n)))
                count += 1
    ok = worst <= TREE_WINNOW_CONSTANT
    record_acceptance("7.tree-winnow", ok, f"max mistakes/(K log2 n) = {worst:.3f} <= {TREE_WINNOW_CONSTANT} over {count} trees")
    assert ok


@pytest.mark.parametrize(
    "learner, ceiling",
    [("rnorm", RNORM_RATIO_CEILING), ("matrix-winnow", WINNOW_RATIO_CEILING)],
)
def test_7_ratio_ceilings(learner, ceiling):
    ratios = []
    for entry, seed, s in all_runs(learner):
        cut = max(s["cut_size"], 1)
        if learner == "rnorm":
            ratios.append(s["mistakes"] / (cut**4 * math.log(s["n"])))
        else:
            ratios.append(s["mistakes"] / (cut * s["R"] * math.log2(s["n"])))
    worst = max(ratios)
    ok = worst <= ceiling
    record_acceptance(f"7.{learner}", ok, f"max mistake/bound ratio {worst:.3f} <= frozen {ceiling} over {len(ratios)} suite runs")
    assert ok


# -- 8 ------------------------------------------------------------------------------


def test_8_reduction_bounds():
    rng = np.random.default_rng(8)
    master_bad = class_bad = trials = 0
    for K in (2, 3):
        for _ in range(100):
            p = int(rng.integers(3, 9 if K == 2 else 7))
            concept = {x: int(rng.integers(1, K + 1)) for x in range(p)}
            m = MasterSimilarity(HalvingBase(K), truth=concept.get)
            examples = []
            for _ in range(60):
                a, b = (int(v) for v in rng.choice(p, 2, replace=False))
                m.predict(a, b)
                m.update(int(concept[a] != concept[b]))
                examples += [(a, concept[a]), (b, concept[b])]
            B = halving_subsequential_bound(examples)
            assert B <= 8
            master_bad += m.mistakes > 5 * B * math.log2(K)
            master_bad += any(r > (1 + BETA) / 2 + 1e-12 for r in m.shrink_ratios)
            trials += 1
    for _ in range(200):
        n = int(rng.integers(2, 30))
        K = int(rng.integers(1, min(n, 6) + 1))
        lab = random_labeling(rng, n, K)
        c = ClassFromSimilarity(OracleSimilarity(lab), K)
        for _ in range(3 * n):
            v = int(rng.integers(1, n + 1))
            c.predict(v)
            c.update(lab[v])
        class_bad += c.mistakes > c.sim_mistakes + K
    ok = master_bad == 0 and class_bad == 0
    record_acceptance(
        "8", ok, f"master-sim {trials} toy runs, {master_bad} violations; class-from-sim 200 oracle runs, {class_bad} violations"
    )
    assert ok


# -- 9 ------------------------------------------------------------------------------


def test_9_fast_bst_touched():
    worst = max(s["max_touched"] / math.log2(s["n_pad"]) ** 2 for _, _, s in all_runs("fast-bst"))
    rng = np.random.default_rng(99)
    for n in (2, 3, 4, 5, 9, 17, 33, 64):
        g = random_connected(rng, n, n)
        b = build_bst(linearize(sample_uniform_spanning_tree(g, rng)))
        fast = FastBstPerceptron(b)
        d2 = math.log2(b.n_pad) ** 2
        for _ in range(500):
            i, j = (int(v) for v in rng.choice(n, 2, replace=False) + 1)
            fast.round(i, j, int(rng.integers(0, 2)))
            worst = max(worst, fast.touched / d2)
    ok = worst <= TOUCHED_CEILING
    record_acceptance("9.fast-bst", ok, f"max touched/log2^2(n_pad) = {worst:.3f} <= frozen {TOUCHED_CEILING}")
    assert ok


def test_9_rnorm_work():
    bad = rounds = 0
    for entry in STANDARD_SUITE[:3] + STANDARD_SUITE[6:8]:
        cfg = suite_config(entry, "rnorm", 0)
        g, lab = load_instance(cfg)
        p = RnormPerceptron(g.n)
        rng = np.random.default_rng(9)
        theta_size, mistakes = 0, 0
        for _ in range(3000):
            i, j = (int(v) for v in rng.choice(g.n, 2, replace=False) + 1)
            yhat = p.predict(i, j, shortest_path(g, i, j))
            s = len(p._last[0].coords)
            y = similarity_label(lab, i, j)
            p.update(y)
            if y == yhat:
                bad += p.touched != s * s or len(p.theta) != theta_size
            else:
                mistakes += 1
                bad += p.touched != 2 * s * s + len(p.theta)
                theta_size = len(p.theta)
            rounds += 1
    ok = bad == 0
    record_acceptance(
        "9.rnorm", ok, f"work = support^2 (+ support^2 + |theta| on mistakes), |theta| changes only on mistakes; {rounds} rounds, {bad} violations"
    )
    assert ok
