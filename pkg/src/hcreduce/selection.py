"""Map a partition to a condensed set.

Five strategies plus a size-matched random baseline:

    rhc      one synthetic centroid per cluster
    rhckon   the nearest member plus the K farthest members per cluster
    koncw    like rhckon with a per-cluster quota proportional to size
    cwkc     greedy max-min (k-center) coverage up to the quota
    ghcidr   one medial representative per distance annulus plus the nearest
    random   uniform subset of a requested size

Everything except rhc returns verbatim rows of the source dataset, so the
condensed data stays human-readable. All ties resolve to the lowest
original row index (the annulus representative additionally prefers the
smaller distance on exact midpoint ties), selections are pure functions of
their inputs, and per-cluster work is independent so output never depends
on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .clustering import Cluster, Partition
from .config import ReductionConfig
from .datasets import CondensedSet, Dataset, dataset_hash
from .errors import DegenerateGeometry, InvalidAlpha, InvalidCount


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha < 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1), got {alpha}")


def kept_fraction(alpha: float) -> Fraction:
    """(1 - alpha) as the exact rational the decimal literal denotes.

    Going through str() reads the float back as its shortest decimal, so
    quotas like (1 - 0.7) * 10 come out as exactly 3 instead of picking up
    a binary-representation carry and ceiling to 4.
    """
    _check_alpha(alpha)
    return 1 - Fraction(str(float(alpha)))


def cluster_quota(cluster_size: int, alpha: float) -> int:
    """Images to keep from a cluster: max(ceil((1-alpha) * size), 1)."""
    if cluster_size < 1:
        raise InvalidCount(f"cluster_size must be >= 1, got {cluster_size}")
    kept = kept_fraction(alpha) * cluster_size
    return min(max(math.ceil(kept), 1), cluster_size)


def compute_beta(max_dist: float, cluster_size: int, alpha: float) -> float:
    """Annulus width: max_dist / ((1 - alpha) * cluster_size).

    Raises DegenerateGeometry when every member sits on the centroid; the
    caller then keeps just the nearest member.
    """
    _check_alpha(alpha)
    if max_dist <= 0.0:
        raise DegenerateGeometry("all members coincide with the centroid")
    return max_dist / float(kept_fraction(alpha) * cluster_size)


@dataclass(frozen=True)
class ClusterGeometry:
    """Distance layout of one cluster around its centroid."""

    distances: np.ndarray  # per-member Euclidean distance to the centroid
    nearest_pos: int  # position in the member list (lowest index on ties)
    nearest_index: int  # the same member as a dataset row
    max_dist: float
    beta: float | None = None
    quota: int | None = None


def cluster_geometry(
    dataset: Dataset, cluster: Cluster, alpha: float | None = None
) -> ClusterGeometry:
    """Member distances to the centroid, plus quota and annulus width.

    Distances are square roots of exact integer-grid squared distances, so
    their ordering matches the integer comparisons used everywhere else and
    scales exactly with the features.
    """
    diff = dataset.features[cluster.member_indices].astype(np.float64) - cluster.centroid
    distances = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    nearest_pos = int(np.argmin(distances))
    max_dist = float(distances.max())
    beta = None
    quota = None
    if alpha is not None:
        quota = cluster_quota(cluster.size, alpha)
        if max_dist > 0.0:
            beta = compute_beta(max_dist, cluster.size, alpha)
    return ClusterGeometry(
        distances=distances,
        nearest_pos=nearest_pos,
        nearest_index=int(cluster.member_indices[nearest_pos]),
        max_dist=max_dist,
        beta=beta,
        quota=quota,
    )


def _subset_from_picks(
    partition: Partition, picks: list[np.ndarray], config: ReductionConfig
) -> CondensedSet:
    indices = (
        np.sort(np.concatenate(picks)) if picks else np.zeros(0, dtype=np.int64)
    )
    return CondensedSet(
        kind="subset",
        source_hash=partition.source_hash,
        config=config,
        source=partition.dataset,
        indices=indices,
    )


def select_rhc(partition: Partition) -> CondensedSet:
    """One synthetic point per cluster: its exact centroid with its label."""
    points = np.stack([c.centroid for c in partition.clusters])
    labels = np.array([c.label for c in partition.clusters], dtype=np.int64)
    return CondensedSet(
        kind="synthetic",
        source_hash=partition.source_hash,
        config=ReductionConfig(method="rhc"),
        source=partition.dataset,
        points=points,
        point_labels=labels,
    )


def _nearest_plus_farthest(
    cluster: Cluster, geometry: ClusterGeometry, n_far: int
) -> np.ndarray:
    """The nearest member plus the n_far farthest among the others."""
    order = np.argsort(-geometry.distances, kind="stable")  # ties: lowest index
    far = order[order != geometry.nearest_pos][:n_far]
    return cluster.member_indices[np.concatenate(([geometry.nearest_pos], far))]


def select_rhckon(partition: Partition, k_farthest: int) -> CondensedSet:
    """Nearest member plus min(K, size - 1) farthest members per cluster."""
    if k_farthest < 1:
        raise InvalidCount(f"k_farthest must be >= 1, got {k_farthest}")
    picks = []
    for cluster in partition.clusters:
        geometry = cluster_geometry(partition.dataset, cluster)
        picks.append(
            _nearest_plus_farthest(cluster, geometry, min(k_farthest, cluster.size - 1))
        )
    return _subset_from_picks(
        partition, picks, ReductionConfig(method="rhckon", k_farthest=k_farthest)
    )


def select_koncw(partition: Partition, alpha: float) -> CondensedSet:
    """Nearest member plus quota-1 farthest members per cluster."""
    _check_alpha(alpha)
    picks = []
    for cluster in partition.clusters:
        geometry = cluster_geometry(partition.dataset, cluster, alpha)
        picks.append(_nearest_plus_farthest(cluster, geometry, geometry.quota - 1))
    return _subset_from_picks(
        partition, picks, ReductionConfig(method="koncw", alpha=alpha)
    )


def _sq_dists_to(features_f8: np.ndarray, point: np.ndarray) -> np.ndarray:
    diff = features_f8 - point
    return np.einsum("ij,ij->i", diff, diff)


def _cwkc_cluster(
    dataset: Dataset, cluster: Cluster, geometry: ClusterGeometry
) -> np.ndarray:
    """Greedy max-min coverage seeded with the nearest and farthest member."""
    if geometry.quota == 1:
        return cluster.member_indices[[geometry.nearest_pos]]
    farthest_pos = int(np.argmax(geometry.distances))
    chosen = [geometry.nearest_pos]
    if farthest_pos != geometry.nearest_pos:
        chosen.append(farthest_pos)
    feats = dataset.features[cluster.member_indices].astype(np.float64)
    min_d2 = _sq_dists_to(feats, feats[chosen[0]])
    for pos in chosen[1:]:
        np.minimum(min_d2, _sq_dists_to(feats, feats[pos]), out=min_d2)
    while len(chosen) < geometry.quota:
        masked = min_d2.copy()
        masked[chosen] = -1.0  # never re-pick; squared distances are >= 0
        nxt = int(np.argmax(masked))
        chosen.append(nxt)
        np.minimum(min_d2, _sq_dists_to(feats, feats[nxt]), out=min_d2)
    return cluster.member_indices[chosen]


def select_cwkc(partition: Partition, alpha: float) -> CondensedSet:
    """Per-cluster greedy k-center selection under the size quota."""
    _check_alpha(alpha)
    picks = []
    for cluster in partition.clusters:
        geometry = cluster_geometry(partition.dataset, cluster, alpha)
        picks.append(_cwkc_cluster(partition.dataset, cluster, geometry))
    return _subset_from_picks(
        partition, picks, ReductionConfig(method="cwkc", alpha=alpha)
    )


def _ghcidr_cluster(cluster: Cluster, geometry: ClusterGeometry, alpha: float) -> np.ndarray:
    """The nearest member for the central sphere, plus one medial
    representative per nonempty annulus around it.

    Region i covers distances [i*beta, (i+1)*beta), the outermost closed at
    max_dist so the farthest member always belongs somewhere. Region 0 is
    the sphere and contributes only the nearest-to-centroid member; each
    annulus i >= 1 contributes the member closest to its mid-radius.
    """
    if geometry.max_dist <= 0.0:
        return cluster.member_indices[[0]]
    beta = geometry.beta
    # ceil(max_dist / beta) evaluated exactly; equals the pre-clamp quota.
    n_regions = max(math.ceil(kept_fraction(alpha) * cluster.size), 1)
    region = np.minimum(
        np.floor_divide(geometry.distances, beta).astype(np.int64), n_regions - 1
    )
    picked = {geometry.nearest_pos}
    for a in np.unique(region):
        if a == 0:
            continue  # the sphere is represented by the nearest member
        mid = (a * beta + (a + 1) * beta) / 2.0
        cand = np.flatnonzero(region == a)
        d = geometry.distances[cand]
        # Closest to the mid-radius; on exact ties prefer the smaller
        # distance, then the lower row index.
        best = cand[np.lexsort((cand, d, np.abs(d - mid)))[0]]
        picked.add(int(best))
    return cluster.member_indices[sorted(picked)]


def select_ghcidr(partition: Partition, alpha: float) -> CondensedSet:
    """Annulus-medial selection over every cluster."""
    _check_alpha(alpha)
    picks = []
    for cluster in partition.clusters:
        geometry = cluster_geometry(partition.dataset, cluster, alpha)
        picks.append(_ghcidr_cluster(cluster, geometry, alpha))
    return _subset_from_picks(
        partition, picks, ReductionConfig(method="ghcidr", alpha=alpha)
    )


def select_random(dataset: Dataset, target_count: int, seed: int) -> CondensedSet:
    """Uniform sample without replacement; deterministic per seed."""
    if target_count < 0 or target_count > dataset.n:
        raise InvalidCount(
            f"target_count must be in 0..{dataset.n}, got {target_count}"
        )
    rng = np.random.default_rng(seed)
    indices = np.sort(rng.choice(dataset.n, size=target_count, replace=False))
    return CondensedSet(
        kind="subset",
        source_hash=dataset_hash(dataset),
        config=ReductionConfig(method="random", seed=seed),
        source=dataset,
        indices=indices.astype(np.int64),
    )


def reduction_percent(original_n: int, condensed_n: int) -> float:
    """100 * (1 - condensed/original)."""
    if original_n < 1:
        raise InvalidCount("original_n must be >= 1")
    if condensed_n > original_n:
        raise InvalidCount("condensed_n cannot exceed original_n")
    return 100.0 * (1.0 - condensed_n / original_n)


def select_by_config(
    partition: Partition,
    config: ReductionConfig,
    random_count: int | None = None,
) -> CondensedSet:
    """Dispatch a strategy by configuration; random needs a target count."""
    if config.method == "rhc":
        return select_rhc(partition)
    if config.method == "rhckon":
        return select_rhckon(partition, config.k_farthest)
    if config.method == "koncw":
        return select_koncw(partition, config.alpha)
    if config.method == "cwkc":
        return select_cwkc(partition, config.alpha)
    if config.method == "ghcidr":
        return select_ghcidr(partition, config.alpha)
    if random_count is None:
        raise InvalidCount("random selection needs an explicit target count")
    return select_random(partition.dataset, random_count, config.seed)


def calibrate_alpha(
    partition: Partition,
    method: str,
    target_reduction: float,
    max_runs: int = 8,
    lo: float = 0.0,
    hi: float = 0.995,
) -> tuple[float, float, CondensedSet]:
    """Bisect alpha so the achieved reduction approaches a target percent.

    Works because larger alpha never enlarges any per-cluster quota, so the
    reduction percent is non-decreasing in alpha. Returns the best
    (alpha, achieved_reduction, condensed_set) seen within max_runs runs.
    """
    best: tuple[float, float, CondensedSet] | None = None
    n = partition.dataset.n
    for _ in range(max_runs):
        mid = (lo + hi) / 2.0
        cset = select_by_config(partition, ReductionConfig(method=method, alpha=mid))
        achieved = reduction_percent(n, cset.n)
        if best is None or abs(achieved - target_reduction) < abs(best[1] - target_reduction):
            best = (mid, achieved, cset)
        if achieved < target_reduction:
            lo = mid
        else:
            hi = mid
    assert best is not None
    return best
