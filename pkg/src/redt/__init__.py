"""Rectified decision trees: decision trees distilled from teacher soft labels."""

from .data import Dataset, SplitSpec, load_benchmark, load_csv, one_hot, train_test_split
from .distill import AlphaGrid, CvParams, cv_soft_labels, grid_search_alpha, mix_labels
from .evaluation import (BenchmarkConfig, BenchmarkReport, accuracy, explain,
                         impurity_value_count, run_benchmark, wilcoxon_signed_rank)
from .teacher import (Forest, ForestParams, RandomForestTeacher, SoftLabels, fit_forest,
                      import_soft_labels, write_soft_labels)
from .tree import Tree, TreeParams, best_split, fit, node_count, predict_distribution, predict_label

__version__ = "0.1.0"

__all__ = [
    "AlphaGrid", "BenchmarkConfig", "BenchmarkReport", "CvParams", "Dataset", "Forest",
    "ForestParams", "RandomForestTeacher", "SoftLabels", "SplitSpec", "Tree", "TreeParams",
    "accuracy", "best_split", "cv_soft_labels", "explain", "fit", "fit_forest",
    "grid_search_alpha", "impurity_value_count", "import_soft_labels", "load_benchmark",
    "load_csv", "mix_labels", "node_count", "one_hot", "predict_distribution",
    "predict_label", "run_benchmark", "train_test_split", "wilcoxon_signed_rank",
    "write_soft_labels",
]
