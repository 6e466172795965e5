"""Independent writers and reference implementations used as test oracles.

Nothing here imports the package's loaders or algorithms: the writers
build files byte by byte with struct, and the reference algorithms are
naive scans with the same documented tie rules, so agreement between the
two sides is meaningful.
"""

from __future__ import annotations

import math
import struct

import numpy as np


def write_idx_image_file(path, images: np.ndarray, rows: int, cols: int) -> None:
    """images is (N, rows*cols) uint8. Written big-endian, magic 2051."""
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, images.shape[0], rows, cols))
        f.write(bytes(images.astype(np.uint8).ravel().tolist()))


def write_idx_label_file(path, labels) -> None:
    labels = list(labels)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(int(x) for x in labels))


def write_cifar_batch(path, labels, pixel_rows: np.ndarray) -> None:
    """pixel_rows is (N, 3072) uint8; records are label byte + pixels."""
    with open(path, "wb") as f:
        for label, pixels in zip(labels, pixel_rows):
            f.write(bytes([int(label)]))
            f.write(bytes(pixels.astype(np.uint8).tolist()))


def reference_lloyd(features, members, seeds, max_iters=100):
    """Plain-Python Lloyd's algorithm with the package's tie rules.

    Assignment minimizes squared Euclidean distance to the nearest live
    centroid, ties to the lowest centroid index; empty groups are dropped
    immediately; new centroids are exact means; stops when an assignment
    repeats without any group having been dropped in between.
    """
    centroids = [list(map(float, s)) for s in seeds]
    members = list(members)
    prev = None
    assign = [0] * len(members)
    for _ in range(max_iters):
        assign = []
        for m in members:
            x = features[m]
            best, best_d = 0, None
            for j, c in enumerate(centroids):
                d = sum((float(a) - b) ** 2 for a, b in zip(x, c))
                if best_d is None or d < best_d:
                    best, best_d = j, d
            assign.append(best)
        live = sorted(set(assign))
        compacted = len(live) < len(centroids)
        if compacted:
            remap = {g: i for i, g in enumerate(live)}
            assign = [remap[g] for g in assign]
            centroids = [centroids[g] for g in live]
        if not compacted and prev is not None and assign == prev:
            break
        prev = assign
        new_centroids = []
        for g in range(len(centroids)):
            rows = [members[i] for i, a in enumerate(assign) if a == g]
            acc = [0.0] * len(features[rows[0]])
            for r in rows:
                for j, v in enumerate(features[r]):
                    acc[j] += float(v)
            new_centroids.append([v / len(rows) for v in acc])
        centroids = new_centroids
    return [[m for m, a in zip(members, assign) if a == g] for g in range(len(centroids))]


def reference_knn(train_x, train_y, test_x, k):
    """Quadratic-scan k-NN: distance ties to the lower train row, vote ties
    to the lowest label."""
    preds = []
    for t in test_x:
        dists = []
        for i, x in enumerate(train_x):
            d = sum((float(a) - float(b)) ** 2 for a, b in zip(x, t))
            dists.append((d, i))
        dists.sort()
        top = dists[: min(k, len(dists))]
        counts: dict[int, int] = {}
        for _, i in top:
            counts[int(train_y[i])] = counts.get(int(train_y[i]), 0) + 1
        best_label = min(counts, key=lambda lab: (-counts[lab], lab))
        preds.append(best_label)
    return preds


def reference_cwkc(features, members, distances, quota):
    """Brute-force greedy max-min selection, rescanning every candidate.

    Starts from the nearest-to-centroid member, adds the farthest member,
    then repeatedly the member whose minimum squared distance to the
    chosen set is largest; every tie goes to the lowest row index.
    """
    def sq(a, b):
        return sum((float(x) - float(y)) ** 2 for x, y in zip(a, b))

    nearest = min(range(len(members)), key=lambda i: (distances[i], i))
    if quota == 1:
        return [members[nearest]]
    farthest = min(range(len(members)), key=lambda i: (-distances[i], i))
    chosen = [nearest] if farthest == nearest else [nearest, farthest]
    while len(chosen) < quota:
        best_pos, best_score = None, None
        for i in range(len(members)):
            if i in chosen:
                continue
            score = min(sq(features[members[i]], features[members[j]]) for j in chosen)
            if best_score is None or score > best_score:
                best_pos, best_score = i, score
        chosen.append(best_pos)
    return [members[i] for i in chosen]


def reference_ghcidr(members, distances, beta, n_regions, nearest_pos):
    """Exhaustive per-region scan with the documented tie rules.

    Region of a member is min(floor(d / beta), n_regions - 1). Region 0 is
    the central sphere and is represented by the globally nearest member,
    which is always included; each annulus (region >= 1) contributes the
    member minimizing (|d - mid|, d, index) for mid its mid-radius.
    """
    by_region: dict[int, list[int]] = {}
    for i, d in enumerate(distances):
        a = min(int(math.floor(d / beta)), n_regions - 1)
        by_region.setdefault(a, []).append(i)
    picked = {nearest_pos}
    for a, cand in by_region.items():
        if a == 0:
            continue
        mid = (a * beta + (a + 1) * beta) / 2.0
        rep = min(cand, key=lambda i: (abs(distances[i] - mid), distances[i], i))
        picked.add(rep)
    return sorted(members[i] for i in picked)


def make_dataset(features, labels, dims=None):
    """Build a Dataset directly from arrays (bypasses all loaders)."""
    from hcreduce import Dataset

    features = np.asarray(features, dtype=np.uint8)
    if dims is None:
        dims = (1, features.shape[1], 1)
    return Dataset(features, np.asarray(labels, dtype=np.int64), dims)


def random_blob_dataset(rng, max_classes=4, max_per_class=60, max_dim=6):
    """Random small labeled dataset for property tests, via the package's
    generator but with randomized shape parameters."""
    from hcreduce import generate_blobs

    n_classes = int(rng.integers(2, max_classes + 1))
    per_class = int(rng.integers(3, max_per_class + 1))
    dim = int(rng.integers(2, max_dim + 1))
    spread = float(rng.uniform(0.5, 14.0))
    seed = int(rng.integers(0, 2**31))
    return generate_blobs(n_classes, per_class, dim, spread, seed)
