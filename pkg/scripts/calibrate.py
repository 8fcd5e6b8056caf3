"""Calibration run for the frozen empirical constants used by the acceptance tests.

Runs every learner on the standard suite (three seeds, all-pairs passes, at
most MAX_PASSES passes) and prints one row per run plus the largest observed
mistake/bound ratios, the largest fast-bst touched/log2(n_pad)^2 ratio, and
the tree-winnow mistakes/(K log2 n) ratio on connected-cluster trees.

    python3 scripts/calibrate.py [--json FILE]
"""

import argparse
import json
import math
import time

from graphsim.harness import (
    STANDARD_SUITE,
    ExperimentConfig,
    load_instance,
    pass_length,
    run_experiment,
    suite_config,
)

MAX_PASSES = 50
SEEDS = range(3)
SUITE_LEARNERS = ("matrix-perceptron", "matrix-winnow", "fast-bst", "rnorm")


def ratio_for(learner, s, recs):
    if learner == "rnorm":
        return s["mistakes"] / (max(s["cut_size"], 1) ** 4 * math.log(s["n"]))
    if learner == "matrix-winnow":
        return s["mistakes"] / (max(s["cut_size"], 1) * s["R"] * math.log2(s["n"]))
    if learner == "fast-bst":
        return max(r.touched for r in recs) / math.log2(s["n_pad"]) ** 2
    return s["mistakes"] / max(s["bound"], 1e-12)


def suite_rows():
    rows = []
    for learner in SUITE_LEARNERS:
        for entry in STANDARD_SUITE:
            for seed in SEEDS:
                cfg = suite_config(entry, learner, seed, until_clean=True)
                g, lab = load_instance(cfg)
                cfg.rounds = MAX_PASSES * pass_length(cfg, g.n)
                t0 = time.time()
                recs, s = run_experiment(cfg, g, lab)
                rows.append({
                    "learner": learner,
                    "graph": entry[0],
                    "params": entry[1],
                    "seed": seed,
                    "n": s["n"],
                    "cut": s["cut_size"],
                    "R": round(s["R"], 3),
                    "mistakes": s["mistakes"],
                    "clean_pass": s["clean_pass"],
                    "ratio": ratio_for(learner, s, recs),
                    "seconds": round(time.time() - t0, 2),
                })
                print(json.dumps(rows[-1]), flush=True)
    return rows


def tree_winnow_rows():
    rows = []
    for n in (16, 64, 128, 256):
        for K in (2, 4, 8):
            for seed in SEEDS:
                cfg = ExperimentConfig(
                    learner="tree-winnow", gen="random-tree", gen_params={"n": n},
                    labgen="bfs-regions", lab_params={"K": K}, pairs="random",
                    rounds=20000, seed_graph=seed, seed_seq=seed,
                )
                _, s = run_experiment(cfg)
                rows.append({"n": n, "K": K, "seed": seed, "mistakes": s["mistakes"],
                             "ratio": s["mistakes"] / (K * math.log2(n))})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", help="write all rows here")
    args = ap.parse_args(argv)
    rows = suite_rows()
    tw = tree_winnow_rows()
    print()
    for learner in SUITE_LEARNERS:
        mine = [r for r in rows if r["learner"] == learner]
        stuck = sum(r["clean_pass"] is None for r in mine)
        print(f"{learner}: worst ratio {max(r['ratio'] for r in mine):.4f}, "
              f"runs without a clean pass in {MAX_PASSES}: {stuck}/{len(mine)}")
    print(f"tree-winnow: worst mistakes/(K log2 n) {max(r['ratio'] for r in tw):.4f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"suite": rows, "tree_winnow": tw}, fh, indent=1, default=str)


if __name__ == "__main__":
    main()
