"""Recursive label-homogeneous clustering.

The partition starts from the whole dataset as one cluster and repeatedly
splits every mixed-label cluster with Lloyd k-means seeded by the per-class
centroids of that cluster, until every cluster is single-label or provably
unsplittable. Mixed-label clusters that k-means cannot separate (all
features identical, or class centroids that coincide) are emitted whole and
flagged terminal-degenerate.

Numeric discipline: features are raw uint8 and distance comparisons are
squared Euclidean in float64. Squared norms and centroid sums are integer
sums that stay below 2**53, so they are exact; assignment ties resolve to
the lowest seed index, which makes the whole construction deterministic and
invariant under scaling all features by a power of two.
"""

from __future__ import annotations

import json
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import Dataset, dataset_hash
from .errors import EmptyCluster, EmptyDataset, InvalidSeeds, IoError, StalePartition

DEFAULT_MAX_ITERS = 100

# Rows per distance-computation block. Constant so per-row results never
# depend on how work is chunked or how many worker threads run.
_CHUNK_ROWS = 8192


@dataclass(frozen=True)
class Cluster:
    """A set of dataset rows with its exact mean vector.

    member_indices is ascending. label is the shared class label, or the
    majority label (lowest on ties) for terminal-degenerate clusters.
    """

    member_indices: np.ndarray
    centroid: np.ndarray
    label: int
    is_terminal_degenerate: bool = False

    @property
    def size(self) -> int:
        return self.member_indices.shape[0]


@dataclass(frozen=True)
class Partition:
    """All emitted clusters plus the dataset they index into.

    Clusters are canonically ordered by smallest member index, so the
    partition is identical no matter how many worker threads built it.
    """

    clusters: tuple[Cluster, ...]
    source_hash: str
    dataset: Dataset

    def __len__(self) -> int:
        return len(self.clusters)

    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.clusters], dtype=np.int64)


def is_homogeneous(dataset: Dataset, members: np.ndarray) -> bool:
    """True iff every member carries the same label."""
    members = np.asarray(members)
    if members.size == 0:
        raise EmptyCluster("homogeneity is undefined for an empty member list")
    labels = dataset.labels[members]
    return bool(np.all(labels == labels[0]))


def _exact_mean(features: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # uint8 summed in float64 stays an exact integer, so the mean is the
    # correctly rounded rational sum/count.
    return features[rows].sum(axis=0, dtype=np.float64) / rows.shape[0]


def class_centroid_seeds(
    dataset: Dataset, members: np.ndarray
) -> list[tuple[int, np.ndarray]]:
    """Per-class mean vectors of the given members, ascending by label."""
    members = np.asarray(members)
    if members.size == 0:
        raise EmptyCluster("cannot seed from an empty member list")
    labels = dataset.labels[members]
    return [
        (int(lab), _exact_mean(dataset.features, members[labels == lab]))
        for lab in np.unique(labels)
    ]


def _squared_norms(features: np.ndarray) -> np.ndarray:
    x = features.astype(np.int64)
    return np.einsum("ij,ij->i", x, x).astype(np.float64)


def _assign_members(
    features: np.ndarray,
    norms: np.ndarray,
    members: np.ndarray,
    centroids: np.ndarray,
    wcss_out: list[float] | None = None,
) -> np.ndarray:
    """Nearest-centroid index per member, ties to the lowest seed index."""
    centroid_norms = (centroids * centroids).sum(axis=1)
    out = np.empty(members.shape[0], dtype=np.int64)
    wcss = 0.0
    for lo in range(0, members.shape[0], _CHUNK_ROWS):
        rows = members[lo : lo + _CHUNK_ROWS]
        block = features[rows].astype(np.float64)
        d2 = norms[rows][:, None] - 2.0 * (block @ centroids.T) + centroid_norms
        got = np.argmin(d2, axis=1)
        out[lo : lo + rows.shape[0]] = got
        if wcss_out is not None:
            wcss += float(d2[np.arange(rows.shape[0]), got].sum())
    if wcss_out is not None:
        wcss_out.append(wcss)
    return out


def _kmeans_groups(
    features: np.ndarray,
    norms: np.ndarray,
    members: np.ndarray,
    seeds: np.ndarray,
    max_iters: int,
    wcss_trace: list[float] | None = None,
) -> list[np.ndarray]:
    """Lloyd iterations until the assignment is a fixpoint or max_iters.

    Groups that lose all members are dropped on the spot; the surviving
    centroid list keeps its order, so tie-breaking stays well defined.
    """
    centroids = np.array(seeds, dtype=np.float64)
    prev: np.ndarray | None = None
    assign = np.zeros(members.shape[0], dtype=np.int64)
    for _ in range(max_iters):
        assign = _assign_members(features, norms, members, centroids, wcss_trace)
        live = np.unique(assign)
        compacted = live.size < centroids.shape[0]
        if compacted:
            assign = np.searchsorted(live, assign)
            centroids = centroids[live]
        # A fixpoint is only meaningful when group ids kept their identity.
        if not compacted and prev is not None and np.array_equal(prev, assign):
            break
        prev = assign
        counts = np.bincount(assign, minlength=centroids.shape[0])
        sums = np.stack(
            [features[members[assign == g]].sum(axis=0, dtype=np.float64)
             for g in range(centroids.shape[0])]
        )
        centroids = sums / counts[:, None]
    return [members[assign == g] for g in range(centroids.shape[0])]


def kmeans(
    dataset: Dataset,
    members: np.ndarray,
    seeds: list[np.ndarray] | np.ndarray,
    max_iters: int = DEFAULT_MAX_ITERS,
    wcss_trace: list[float] | None = None,
) -> list[np.ndarray]:
    """Cluster the given members around the given seed vectors.

    Returns nonempty groups in seed order. Pass a list as wcss_trace to
    collect the within-cluster sum of squared distances after each
    assignment step (it is non-increasing).
    """
    members = np.asarray(members, dtype=np.int64)
    seeds = np.asarray(seeds, dtype=np.float64)
    if seeds.ndim != 2 or seeds.shape[0] < 2:
        raise InvalidSeeds(f"need at least 2 seeds, got {seeds.shape}")
    if members.size == 0:
        raise EmptyCluster("cannot cluster an empty member list")
    norms = _squared_norms(dataset.features)
    return _kmeans_groups(dataset.features, norms, members, seeds, max_iters, wcss_trace)


def _majority_label(labels: np.ndarray) -> int:
    # argmax returns the first maximum, i.e. the lowest label on ties.
    return int(np.bincount(labels).argmax())


def _emit_cluster(dataset: Dataset, members: np.ndarray, degenerate: bool) -> Cluster:
    labels = dataset.labels[members]
    label = int(labels[0]) if not degenerate else _majority_label(labels)
    return Cluster(
        member_indices=members,
        centroid=_exact_mean(dataset.features, members),
        label=label,
        is_terminal_degenerate=degenerate,
    )


def _step(
    dataset: Dataset, norms: np.ndarray, members: np.ndarray, max_iters: int
) -> tuple[str, Cluster | list[np.ndarray]]:
    """Process one worklist entry: emit a finished cluster or split it."""
    labels = dataset.labels[members]
    if np.all(labels == labels[0]):
        return "emit", _emit_cluster(dataset, members, degenerate=False)
    seeds = np.stack([v for _, v in class_centroid_seeds(dataset, members)])
    groups = _kmeans_groups(dataset.features, norms, members, seeds, max_iters)
    if len(groups) <= 1:
        # No progress possible: identical features, or class centroids that
        # coincide. Emit whole; selection condenses it by majority label.
        return "emit", _emit_cluster(dataset, members, degenerate=True)
    return "split", groups


def partition_homogeneous(
    dataset: Dataset, threads: int = 1, max_iters: int = DEFAULT_MAX_ITERS
) -> Partition:
    """Split the dataset into label-homogeneous clusters.

    Worklist recursion: pop a cluster, emit it if single-label, otherwise
    split with class-centroid-seeded k-means and push the parts. Each
    popped cluster is processed independently, so any number of worker
    threads produces the identical partition.
    """
    if dataset.n == 0:
        raise EmptyDataset("cannot partition an empty dataset")
    norms = _squared_norms(dataset.features)
    all_rows = np.arange(dataset.n, dtype=np.int64)
    emitted: list[Cluster] = []

    if threads <= 1:
        stack: list[np.ndarray] = [all_rows]
        while stack:
            members = stack.pop()
            kind, payload = _step(dataset, norms, members, max_iters)
            if kind == "emit":
                emitted.append(payload)
            else:
                stack.extend(payload)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending = {pool.submit(_step, dataset, norms, all_rows, max_iters)}
            while pending:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    kind, payload = fut.result()
                    if kind == "emit":
                        emitted.append(payload)
                    else:
                        pending |= {
                            pool.submit(_step, dataset, norms, g, max_iters)
                            for g in payload
                        }

    emitted.sort(key=lambda c: int(c.member_indices[0]))
    partition = Partition(tuple(emitted), dataset_hash(dataset), dataset)
    check_partition_soundness(partition)
    return partition


def check_partition_soundness(partition: Partition) -> None:
    """Assert disjointness, completeness and homogeneity; cheap, run always."""
    n = partition.dataset.n
    if partition.clusters:
        joined = np.concatenate([c.member_indices for c in partition.clusters])
    else:
        joined = np.zeros(0, dtype=np.int64)
    if joined.shape[0] != n or not np.array_equal(np.sort(joined), np.arange(n)):
        raise AssertionError("partition members do not cover the dataset exactly once")
    labels = partition.dataset.labels
    for c in partition.clusters:
        if not c.is_terminal_degenerate:
            got = labels[c.member_indices]
            if not np.all(got == got[0]):
                raise AssertionError("non-degenerate cluster mixes labels")


def cluster_size_histogram(
    partition: Partition, bin_edges: list[int]
) -> list[tuple[tuple[int, int], int]]:
    """Cluster counts per size bin [lo, hi), the last bin closed."""
    edges = list(bin_edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bin edges must be strictly increasing with >= 2 entries")
    sizes = partition.sizes()
    out = []
    for i, (lo, hi) in enumerate(zip(edges, edges[1:])):
        last = i == len(edges) - 2
        mask = (sizes >= lo) & ((sizes <= hi) if last else (sizes < hi))
        out.append(((lo, hi), int(mask.sum())))
    return out


def size_histogram_table(
    partition: Partition, bin_edges: list[int]
) -> list[tuple[int, int, int, int]]:
    """Rows of (bin_lo, bin_hi, cluster_count, images_in_bin) for reports."""
    sizes = partition.sizes()
    rows = []
    for (lo, hi), count in cluster_size_histogram(partition, bin_edges):
        last = (lo, hi) == (bin_edges[-2], bin_edges[-1])
        mask = (sizes >= lo) & ((sizes <= hi) if last else (sizes < hi))
        rows.append((lo, hi, count, int(sizes[mask].sum())))
    return rows


def default_bin_edges(partition: Partition) -> list[int]:
    """Unit bins through size 5, then widening bins out to the max size."""
    edges = [1, 2, 3, 4, 5, 6, 11, 21, 51, 101, 201, 501, 1001, 2001, 5001]
    top = int(partition.sizes().max())
    while edges[-1] <= top:
        edges.append(edges[-1] * 2 - 1)
    return edges


def save_partition(partition: Partition, path: str | Path) -> Path:
    """JSON dump with per-cluster member indices and label."""
    path = Path(path)
    doc = {
        "source_hash": partition.source_hash,
        "clusters": [
            {
                "members": c.member_indices.tolist(),
                "label": c.label,
                "degenerate": c.is_terminal_degenerate,
            }
            for c in partition.clusters
        ],
    }
    try:
        path.write_text(json.dumps(doc) + "\n")
    except OSError as e:
        raise IoError(f"writing {path}: {e}") from e
    return path


def load_partition(path: str | Path, dataset: Dataset) -> Partition:
    """Rehydrate a partition dump against its source dataset.

    Centroids are recomputed from the member rows, which reproduces them
    exactly. Raises StalePartition when the checksum does not match.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise IoError(f"reading {path}: {e}") from e
    if doc["source_hash"] != dataset_hash(dataset):
        raise StalePartition(f"{path} was built from a different dataset")
    clusters = []
    for entry in doc["clusters"]:
        members = np.asarray(entry["members"], dtype=np.int64)
        clusters.append(
            Cluster(
                member_indices=members,
                centroid=_exact_mean(dataset.features, members),
                label=int(entry["label"]),
                is_terminal_degenerate=bool(entry["degenerate"]),
            )
        )
    partition = Partition(tuple(clusters), doc["source_hash"], dataset)
    check_partition_soundness(partition)
    return partition
