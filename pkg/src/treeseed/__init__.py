"""Fast k-means++ seeding via tree embeddings, with exact and rejection-sampling variants."""

from .baselines import d2_probabilities, kmeanspp_exact, uniform_sampling
from .bench import BenchConfig, BenchResult, emit_tables, run_bench
from .dataset import (DataError, Dataset, PreprocessReport, clustering_cost, dist, load_csv,
                      quantize)
from .fast import SeederState, fast_kmeanspp
from .lsh import LshIndex, collision_prob, derive_params
from .multitree import MultiTree, multitree_dist, multitree_init
from .quadtree import QuadTree, tree_dist
from .rejection import RejectionRunStats, rejection_sampling, sampling_bias_report
from .sampletree import SampleTree
from .synthetic import gaussian_mixture

__all__ = [
    "BenchConfig", "BenchResult", "DataError", "Dataset", "LshIndex", "MultiTree",
    "PreprocessReport", "QuadTree", "RejectionRunStats", "SampleTree", "SeederState",
    "clustering_cost", "collision_prob", "d2_probabilities", "derive_params", "dist",
    "emit_tables", "fast_kmeanspp", "gaussian_mixture", "kmeanspp_exact", "load_csv",
    "multitree_dist", "multitree_init", "quantize", "rejection_sampling", "run_bench",
    "sampling_bias_report", "tree_dist", "uniform_sampling",
]
