"""Online similarity prediction on graphs.

Known-graph learners (matrix Perceptron, matrix Winnow, the fast BST
Perceptron), unknown-graph learners (r-norm Perceptron over revealed
paths, tree Winnow), and the class/similarity reductions.
"""

from .errors import ConfigError, GraphError, NumericalError, PoolCapExceeded
from .graph import (
    Graph,
    Labeling,
    LaplacianPseudoinverse,
    build_graph,
    cut_size,
    effective_resistance,
    laplacian_pseudoinverse,
    per_class_cut_size,
    resistance_weighted_cutsize,
    similarity_label,
)
from .spanning import (
    Bst,
    SpanningTree,
    bst_cut_sizes,
    bst_path,
    build_bst,
    linearize,
    sample_uniform_spanning_tree,
)
from .matrix import KernelPerceptron, MatrixWinnow, pair_kernel, winnow_instance
from .fastbst import FastBstPerceptron, compute_path_context
from .unknown import (
    IncrementalForest,
    PathInstance,
    RnormPerceptron,
    TreeWinnow,
    build_comparator,
    primal_from_dual,
)

__version__ = "0.1.0"

__all__ = [
    "Bst",
    "ConfigError",
    "FastBstPerceptron",
    "Graph",
    "GraphError",
    "IncrementalForest",
    "KernelPerceptron",
    "Labeling",
    "LaplacianPseudoinverse",
    "MatrixWinnow",
    "NumericalError",
    "PathInstance",
    "PoolCapExceeded",
    "RnormPerceptron",
    "SpanningTree",
    "TreeWinnow",
    "bst_cut_sizes",
    "bst_path",
    "build_bst",
    "build_comparator",
    "build_graph",
    "compute_path_context",
    "cut_size",
    "effective_resistance",
    "laplacian_pseudoinverse",
    "linearize",
    "pair_kernel",
    "per_class_cut_size",
    "primal_from_dual",
    "resistance_weighted_cutsize",
    "sample_uniform_spanning_tree",
    "similarity_label",
    "winnow_instance",
]
