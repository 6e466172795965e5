"""Load, generate and write labeled image datasets.

Binary layouts handled here (all counts big-endian unsigned 32-bit):

    image file:  magic 2051 | count N | rows | cols | N*rows*cols pixel bytes
    label file:  magic 2049 | count N | N label bytes
    batch file:  repeated 3073-byte records, 1 label byte + 3072 pixel bytes
                 (channel-planar, kept exactly as on disk)

Pixels stay raw uint8 end to end; nothing in this package normalizes them.
Every loader accepts a plain file or the same file gzip-compressed with a
``.gz`` suffix.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .config import ReductionConfig
from .errors import (
    CountMismatch,
    FormatError,
    IoError,
    StaleCondensedSet,
    TruncatedFile,
)

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
CIFAR_RECORD_BYTES = 3073
CIFAR_DIMS = (32, 32, 3)
CIFAR_CLASSES = 10

MANIFEST_NAME = "manifest.json"
INDEX_FILE_NAME = "indices.txt"
IMAGES_FILE_NAME = "images.idx"
LABELS_FILE_NAME = "labels.idx"
POINTS_FILE_NAME = "points.npy"


@dataclass(frozen=True)
class Dataset:
    """Immutable table of uint8 feature vectors with integer class labels.

    features is (N, D) with D equal to the product of dims, the original
    image shape as (height, width, channels).
    """

    features: np.ndarray
    labels: np.ndarray
    dims: tuple[int, int, int]
    class_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        features = np.ascontiguousarray(self.features, dtype=np.uint8)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise ValueError(
                f"labels length {labels.shape} does not match {features.shape[0]} feature rows"
            )
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be nonnegative")
        h, w, c = self.dims
        if h * w * c != features.shape[1]:
            raise ValueError(f"dims {self.dims} do not multiply to D={features.shape[1]}")
        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", (int(h), int(w), int(c)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def take(self, rows: np.ndarray) -> "Dataset":
        """New Dataset holding the given rows, in the given order."""
        return Dataset(self.features[rows], self.labels[rows], self.dims, self.class_names)


def dataset_hash(dataset: Dataset) -> str:
    """Checksum used to tie condensed sets and partitions to their source."""
    h = hashlib.sha256()
    h.update(struct.pack(">3I", *dataset.dims))
    h.update(dataset.features.tobytes())
    h.update(dataset.labels.tobytes())
    return h.hexdigest()


def _open_maybe_gz(path: Path) -> IO[bytes]:
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(f: IO[bytes], n_bytes: int, path: Path, what: str) -> bytes:
    data = f.read(n_bytes)
    if len(data) < n_bytes:
        raise TruncatedFile(
            f"{path}: expected {n_bytes} bytes of {what}, got {len(data)}"
        )
    return data


def _read_idx_images(path: Path) -> tuple[np.ndarray, int, int]:
    with _open_maybe_gz(path) as f:
        magic, count, rows, cols = struct.unpack(">4I", _read_exact(f, 16, path, "image header"))
        if magic != IMAGE_MAGIC:
            raise FormatError(f"{path}: bad image magic {magic}, expected {IMAGE_MAGIC}")
        payload = _read_exact(f, count * rows * cols, path, "pixel data")
    features = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)
    return features, rows, cols


def _read_idx_labels(path: Path) -> np.ndarray:
    with _open_maybe_gz(path) as f:
        magic, count = struct.unpack(">2I", _read_exact(f, 8, path, "label header"))
        if magic != LABEL_MAGIC:
            raise FormatError(f"{path}: bad label magic {magic}, expected {LABEL_MAGIC}")
        payload = _read_exact(f, count, path, "label data")
    return np.frombuffer(payload, dtype=np.uint8)


def load_idx_pair(images_path: str | Path, labels_path: str | Path) -> Dataset:
    """Load an image/label file pair into a Dataset.

    Pixel bytes are preserved exactly; dims come out as (rows, cols, 1).
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    features, rows, cols = _read_idx_images(images_path)
    labels = _read_idx_labels(labels_path)
    if labels.shape[0] != features.shape[0]:
        raise CountMismatch(
            f"{images_path} declares {features.shape[0]} items "
            f"but {labels_path} declares {labels.shape[0]}"
        )
    return Dataset(features, labels.astype(np.int64), (rows, cols, 1))


def load_cifar10(batch_paths: list[str | Path]) -> Dataset:
    """Load one or more binary batch files, concatenated in file order."""
    feature_parts: list[np.ndarray] = []
    label_parts: list[np.ndarray] = []
    for p in map(Path, batch_paths):
        with _open_maybe_gz(p) as f:
            raw = f.read()
        if len(raw) % CIFAR_RECORD_BYTES != 0:
            raise FormatError(
                f"{p}: length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        labels = records[:, 0]
        if labels.size and labels.max() >= CIFAR_CLASSES:
            raise FormatError(f"{p}: label byte {labels.max()} out of range 0..9")
        label_parts.append(labels)
        feature_parts.append(records[:, 1:])
    d = CIFAR_DIMS[0] * CIFAR_DIMS[1] * CIFAR_DIMS[2]
    features = (
        np.concatenate(feature_parts) if feature_parts else np.zeros((0, d), np.uint8)
    )
    labels = np.concatenate(label_parts) if label_parts else np.zeros(0, np.uint8)
    return Dataset(features, labels.astype(np.int64), CIFAR_DIMS)


def generate_blobs(
    n_classes: int, per_class: int, dim: int, spread: float, seed: int
) -> Dataset:
    """Deterministic synthetic fixture: one Gaussian blob per class.

    Class centers sit on distinct gray levels so classes separate cleanly
    when spread is small relative to the center gap. Values are rounded and
    clamped into 0..255. Pure function of its arguments.
    """
    if n_classes < 1 or per_class < 1 or dim < 1:
        raise ValueError("n_classes, per_class and dim must all be >= 1")
    if n_classes > 200:
        raise ValueError("n_classes must fit distinct uint8 gray levels (max 200)")
    if spread < 0:
        raise ValueError("spread must be nonnegative")
    rng = np.random.default_rng(seed)
    # Centers evenly spaced in 28..228 so modest spread never clips.
    levels = np.linspace(28.0, 228.0, n_classes)
    blocks = []
    for c in range(n_classes):
        pts = rng.normal(loc=levels[c], scale=spread, size=(per_class, dim))
        blocks.append(np.clip(np.rint(pts), 0, 255).astype(np.uint8))
    features = np.concatenate(blocks)
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), per_class)
    return Dataset(features, labels, (1, dim, 1))


def write_idx_pair(
    features: np.ndarray,
    labels: np.ndarray,
    dims: tuple[int, int, int],
    images_path: str | Path,
    labels_path: str | Path,
) -> None:
    """Write uint8 rows as an image/label file pair.

    Channels fold into the column count (cols = width * channels) so any
    dims round-trip through the two-dimensional image header.
    """
    features = np.ascontiguousarray(features, dtype=np.uint8)
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise FormatError("labels outside 0..255 cannot be written as single bytes")
    h, w, c = dims
    if h * w * c != features.shape[1]:
        raise FormatError(f"dims {dims} do not match feature width {features.shape[1]}")
    try:
        with open(images_path, "wb") as f:
            f.write(struct.pack(">4I", IMAGE_MAGIC, features.shape[0], h, w * c))
            f.write(features.tobytes())
        with open(labels_path, "wb") as f:
            f.write(struct.pack(">2I", LABEL_MAGIC, labels.shape[0]))
            f.write(labels.astype(np.uint8).tobytes())
    except OSError as e:
        raise IoError(f"writing {images_path} / {labels_path}: {e}") from e


def quantize_points(points: np.ndarray) -> np.ndarray:
    """Round synthetic feature vectors half-up to uint8 for file export."""
    return np.clip(np.floor(np.asarray(points, dtype=np.float64) + 0.5), 0, 255).astype(
        np.uint8
    )


@dataclass(frozen=True)
class CondensedSet:
    """Output of a selection strategy.

    Subset kind keeps an ascending list of original row indices and stays
    human-readable; synthetic kind keeps real-valued centroid points with
    labels. source keeps the originating Dataset in memory so subset rows
    can be materialized; it is never serialized.
    """

    kind: str  # "subset" | "synthetic"
    source_hash: str
    config: ReductionConfig
    source: Dataset
    indices: np.ndarray | None = None
    points: np.ndarray | None = None
    point_labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind == "subset":
            idx = np.ascontiguousarray(self.indices, dtype=np.int64)
            if idx.size:
                if idx.min() < 0 or idx.max() >= self.source.n:
                    raise ValueError("subset indices out of dataset bounds")
                if np.unique(idx).size != idx.size:
                    raise ValueError("subset indices must be unique")
            idx.flags.writeable = False
            object.__setattr__(self, "indices", idx)
        elif self.kind == "synthetic":
            pts = np.ascontiguousarray(self.points, dtype=np.float64)
            lbl = np.ascontiguousarray(self.point_labels, dtype=np.int64)
            if pts.ndim != 2 or pts.shape[1] != self.source.d:
                raise ValueError(f"synthetic points must be (M, {self.source.d})")
            if lbl.shape[0] != pts.shape[0] or (lbl.size and lbl.min() < 0):
                raise ValueError("labels must pair with points and be nonnegative")
            pts.flags.writeable = False
            lbl.flags.writeable = False
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "point_labels", lbl)
        else:
            raise ValueError(f"kind must be 'subset' or 'synthetic', got {self.kind!r}")

    @property
    def n(self) -> int:
        return self.indices.shape[0] if self.kind == "subset" else self.points.shape[0]

    def materialize(self) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix and labels ready for training.

        Subset rows come back as uint8 views of the source; synthetic
        centroids stay double precision (quantization happens only at file
        export).
        """
        if self.kind == "subset":
            return self.source.features[self.indices], self.source.labels[self.indices]
        return self.points, self.point_labels


def write_condensed(cset: CondensedSet, out_dir: str | Path) -> Path:
    """Write a condensed set under out_dir and return the manifest path.

    Emits the plain-text index file (subset kind), re-exported image/label
    files of the condensed data, exact double-precision points (synthetic
    kind, so evaluation never double-rounds), and a JSON manifest with a
    fixed key order.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"creating {out_dir}: {e}") from e

    files: dict[str, str] = {}
    if cset.kind == "subset":
        features, labels = cset.materialize()
        try:
            with open(out_dir / INDEX_FILE_NAME, "w") as f:
                for i in cset.indices:
                    f.write(f"{int(i)}\n")
        except OSError as e:
            raise IoError(f"writing {out_dir / INDEX_FILE_NAME}: {e}") from e
        files["indices"] = INDEX_FILE_NAME
    else:
        features = quantize_points(cset.points)
        labels = cset.point_labels
        try:
            np.save(out_dir / POINTS_FILE_NAME, np.asarray(cset.points, dtype=np.float64))
        except OSError as e:
            raise IoError(f"writing {out_dir / POINTS_FILE_NAME}: {e}") from e
        files["points"] = POINTS_FILE_NAME

    write_idx_pair(
        features, labels, cset.source.dims, out_dir / IMAGES_FILE_NAME, out_dir / LABELS_FILE_NAME
    )
    files["images"] = IMAGES_FILE_NAME
    files["labels"] = LABELS_FILE_NAME

    manifest = {
        "kind": cset.kind,
        "config": cset.config.to_dict(),
        "counts": {"source": cset.source.n, "condensed": cset.n},
        "dims": list(cset.source.dims),
        "source_hash": cset.source_hash,
        "files": files,
    }
    manifest_path = out_dir / MANIFEST_NAME
    try:
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as e:
        raise IoError(f"writing {manifest_path}: {e}") from e
    return manifest_path


def read_condensed(manifest_path: str | Path, source: Dataset) -> CondensedSet:
    """Rehydrate a condensed set written by write_condensed.

    Raises StaleCondensedSet when the manifest checksum does not match the
    supplied dataset.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except OSError as e:
        raise IoError(f"reading {manifest_path}: {e}") from e
    if manifest["source_hash"] != dataset_hash(source):
        raise StaleCondensedSet(
            f"{manifest_path} was built from a different dataset than the one supplied"
        )
    config = ReductionConfig.from_dict(manifest["config"])
    run_dir = manifest_path.parent
    if manifest["kind"] == "subset":
        text = (run_dir / manifest["files"]["indices"]).read_text()
        indices = np.array([int(line) for line in text.splitlines()], dtype=np.int64)
        return CondensedSet(
            kind="subset",
            source_hash=manifest["source_hash"],
            config=config,
            source=source,
            indices=indices,
        )
    points = np.load(run_dir / manifest["files"]["points"])
    labels = _read_idx_labels(run_dir / manifest["files"]["labels"]).astype(np.int64)
    return CondensedSet(
        kind="synthetic",
        source_hash=manifest["source_hash"],
        config=config,
        source=source,
        points=points,
        point_labels=labels,
    )
