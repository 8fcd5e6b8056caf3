"""Command-line interface: ``graphsim simulate|bounds|verify-equivalence|sample-tree``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import ConfigError, NumericalError, PoolCapExceeded
from .fastbst import FastBstPerceptron
from .graph import laplacian_pseudoinverse, resistance_matrix, similarity_label
from .harness import (
    LEARNERS,
    PAIR_POLICIES,
    PATH_POLICIES,
    ExperimentConfig,
    bounds_report,
    load_instance,
    pair_stream,
    records_to_csv,
    run_experiment,
)
from .matrix import KernelPerceptron
from .reductions import DEFAULT_POOL_CAP
from .spanning import build_bst, linearize, sample_uniform_spanning_tree

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def parse_params(text: str | None) -> dict:
    """Parse ``K=V,K=V`` into a dict; values become int or float when they parse."""
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"bad parameter {item!r}; expected KEY=VALUE")
        k, v = (s.strip() for s in item.split("=", 1))
        for conv in (int, float):
            try:
                v = conv(v)
                break
            except ValueError:
                continue
        out[k] = v
    return out


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", metavar="FILE", help="edge-list file")
    p.add_argument("--gen", help="graph generator: cliques, grid, cycle, random-tree, er")
    p.add_argument("--gen-params", default="", help="generator parameters K=V,...")
    p.add_argument("--labels", metavar="FILE", help="label file")
    p.add_argument("--labgen", help="labeling generator: by-cluster, bfs-regions, random")
    p.add_argument("--lab-params", default="", help="labeling parameters K=V,...")
    p.add_argument("--seed-graph", type=int, default=0)
    p.add_argument("--seed-tree", "--tree-seed", dest="seed_tree", type=int, default=0)
    p.add_argument("--seed-seq", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsim", description="Online similarity prediction on graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a learner and write per-round CSV")
    _add_instance_args(sim)
    sim.add_argument("--learner", required=True, choices=LEARNERS)
    sim.add_argument("--rounds", type=int, default=1000)
    sim.add_argument("--pairs", choices=PAIR_POLICIES, default="random")
    sim.add_argument("--paths", choices=PATH_POLICIES, default="shortest")
    sim.add_argument("--cutsize", type=int, help="cut-size given to matrix-winnow")
    sim.add_argument("--base", choices=("halving", "tree-winnow"), default="halving")
    sim.add_argument("--pool-cap", type=int, default=DEFAULT_POOL_CAP)
    sim.add_argument("--out", metavar="FILE", help="CSV output (default: stdout)")
    sim.add_argument("--summary", metavar="FILE", help="write the JSON summary here")

    bnd = sub.add_parser("bounds", help="report cut-sizes, resistances and bound terms")
    _add_instance_args(bnd)

    eq = sub.add_parser("verify-equivalence", help="compare fast-bst with the dense Perceptron")
    _add_instance_args(eq)
    eq.add_argument("--rounds", type=int, default=2000)

    st = sub.add_parser("sample-tree", help="draw uniform spanning trees with Wilson's algorithm")
    _add_instance_args(st)
    st.add_argument("--samples", type=int, default=1)
    return parser


def _config(args, learner: str = "matrix-perceptron") -> ExperimentConfig:
    return ExperimentConfig(
        learner=getattr(args, "learner", learner),
        graph_file=args.graph,
        gen=args.gen,
        gen_params=parse_params(args.gen_params),
        labels_file=args.labels,
        labgen=args.labgen,
        lab_params=parse_params(args.lab_params),
        rounds=getattr(args, "rounds", 0),
        pairs=getattr(args, "pairs", "random"),
        paths=getattr(args, "paths", "shortest"),
        seed_graph=args.seed_graph,
        seed_tree=args.seed_tree,
        seed_seq=args.seed_seq,
        cutsize=getattr(args, "cutsize", None),
        base=getattr(args, "base", "halving"),
        pool_cap=getattr(args, "pool_cap", DEFAULT_POOL_CAP),
    )


def cmd_simulate(args) -> int:
    cfg = _config(args)
    cfg.out = args.out
    records, summary = run_experiment(cfg)
    if not args.out:
        sys.stdout.write(records_to_csv(records, cfg.regime == "unknown"))
    text = json.dumps(summary, indent=2, sort_keys=True, default=str)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=sys.stderr)
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _config(args)
    cfg.validate()
    g, lab = load_instance(cfg)
    sys.stdout.write(bounds_report(g, lab))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    cfg.validate()
    g, lab = load_instance(cfg)
    t = sample_uniform_spanning_tree(g, np.random.default_rng(np.random.SeedSequence(args.seed_tree)))
    b = build_bst(linearize(t), lab)
    fast, dense = FastBstPerceptron(b), KernelPerceptron.on_bst(b)
    stream = pair_stream("random", g.n, np.random.default_rng(np.random.SeedSequence(args.seed_seq)))
    bad = 0
    for _ in range(args.rounds):
        i, j = next(stream)
        y = similarity_label(lab, i, j)
        bad += fast.predict(i, j) != dense.predict(i, j)
        fast.update(y)
        dense.update(y)
    print(f"rounds={args.rounds} n={g.n} n_pad={b.n_pad} discrepancies={bad}")
    return EXIT_OK if bad == 0 else EXIT_MISMATCH


def cmd_sample_tree(args) -> int:
    cfg = _config(args)
    if cfg.labels_file is None and cfg.labgen is None:
        cfg.labgen = "random"
        cfg.lab_params = {"K": 1}
    cfg.validate()
    g, _ = load_instance(cfg)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed_tree))
    if args.samples < 1:
        raise ConfigError("samples must be positive")
    if args.samples == 1:
        t = sample_uniform_spanning_tree(g, rng)
        print(f"# n={g.n} root={t.root}")
        for u, v in t.edges():
            print(u, v)
        print("# order " + " ".join(map(str, linearize(t))))
        return EXIT_OK
    counts = dict.fromkeys(g.edges, 0)
    for _ in range(args.samples):
        for e in sample_uniform_spanning_tree(g, rng).edges():
            counts[e] += 1
    R = resistance_matrix(laplacian_pseudoinverse(g))
    print("u,v,frequency,resistance")
    for (u, v), c in counts.items():
        print(f"{u},{v},{c / args.samples:.6f},{R[u - 1, v - 1]:.6f}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "verify-equivalence": cmd_verify,
    "sample-tree": cmd_sample_tree,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, PoolCapExceeded) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
