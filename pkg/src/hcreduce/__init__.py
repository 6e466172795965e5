"""Condense labeled image datasets by homogeneous clustering.

The pipeline: parse a dataset into raw uint8 feature rows, split it into
label-homogeneous clusters by recursive class-seeded k-means, select a
condensed set with one of the geometric strategies, and score the result
with an exact nearest-neighbor harness.
"""

from .clustering import (
    Cluster,
    Partition,
    class_centroid_seeds,
    cluster_size_histogram,
    is_homogeneous,
    kmeans,
    load_partition,
    partition_homogeneous,
    save_partition,
)
from .config import METHODS, ReductionConfig
from .datasets import (
    CondensedSet,
    Dataset,
    dataset_hash,
    generate_blobs,
    load_cifar10,
    load_idx_pair,
    read_condensed,
    write_condensed,
)
from .evaluation import EvalReport, evaluate, knn_classify
from .selection import (
    calibrate_alpha,
    cluster_quota,
    compute_beta,
    reduction_percent,
    select_by_config,
    select_cwkc,
    select_ghcidr,
    select_koncw,
    select_random,
    select_rhc,
    select_rhckon,
)

__version__ = "0.1.0"

__all__ = [
    "Cluster",
    "CondensedSet",
    "Dataset",
    "EvalReport",
    "METHODS",
    "Partition",
    "ReductionConfig",
    "calibrate_alpha",
    "class_centroid_seeds",
    "cluster_quota",
    "cluster_size_histogram",
    "compute_beta",
    "dataset_hash",
    "evaluate",
    "generate_blobs",
    "is_homogeneous",
    "kmeans",
    "knn_classify",
    "load_cifar10",
    "load_idx_pair",
    "load_partition",
    "partition_homogeneous",
    "read_condensed",
    "reduction_percent",
    "save_partition",
    "select_by_config",
    "select_cwkc",
    "select_ghcidr",
    "select_koncw",
    "select_random",
    "select_rhc",
    "select_rhckon",
    "write_condensed",
]
