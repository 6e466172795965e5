"""Command-line front end.

Subcommands wire ingestion, clustering, selection, evaluation and
statistics into reproducible runs:

    synth    write a synthetic blob dataset as image/label file pairs
    reduce   partition a training set and write a condensed run
    eval     score a condensed run with the k-NN harness
    stats    cluster-size histogram as CSV plus a rendered figure
    sweep    reduce+eval across alphas with size-matched random baselines

Artifacts land under a run-id subdirectory derived from the configuration
hash, so repeated runs and sweeps never clobber each other. Exit codes:
2 usage, 3 data format, 4 configuration, 5 I/O, 6 stale artifact.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import (
    Partition,
    default_bin_edges,
    load_partition,
    partition_homogeneous,
    save_partition,
    size_histogram_table,
)
from .config import METHODS, ReductionConfig
from .datasets import (
    Dataset,
    generate_blobs,
    load_cifar10,
    load_idx_pair,
    read_condensed,
    write_condensed,
    write_idx_pair,
)
from .errors import (
    ConfigError,
    DataFormatError,
    InvalidCount,
    IoError,
    ReductionError,
    StaleArtifact,
)
from .evaluation import evaluate
from .figures import save_size_histogram_figure, save_tradeoff_figure
from .selection import reduction_percent, select_by_config, select_random

DATA_DIR_ENV = "HCREDUCE_DATA_DIR"
DATASETS = ("mnist", "fmnist", "cifar10", "synth-file")
ALPHA_METHODS = ("koncw", "cwkc", "ghcidr")

_IDX_TRAIN = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
_IDX_TEST = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
_SYNTH_TRAIN = ("train-images.idx", "train-labels.idx")
_SYNTH_TEST = ("test-images.idx", "test-labels.idx")
_CIFAR_TRAIN = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
_CIFAR_TEST = ("test_batch.bin",)

TSV_HEADER = "method\talpha\treduction\taccuracy"


@dataclass(frozen=True)
class RunSpec:
    """One validated command invocation."""

    command: str
    dataset: str
    data_dir: Path
    config: ReductionConfig | None
    out_dir: Path
    limit: int | None = None
    threads: int = 1


def _resolve_files(data_dir: Path, dataset: str, names: tuple[str, ...]) -> list[Path]:
    bases = [data_dir, data_dir / dataset]
    if dataset == "cifar10":
        bases += [data_dir / "cifar-10-batches-bin",
                  data_dir / dataset / "cifar-10-batches-bin"]
    found = []
    for name in names:
        candidates = [b / n for b in bases for n in (name, name + ".gz")]
        hit = next((c for c in candidates if c.is_file()), None)
        if hit is None:
            raise IoError(
                f"missing {name!r} for dataset {dataset!r}; looked under {data_dir} "
                f"(set ${DATA_DIR_ENV} or pass --data-dir)"
            )
        found.append(hit)
    return found


def _load_split(dataset: str, data_dir: Path, train: bool, limit: int | None) -> Dataset:
    if dataset == "cifar10":
        paths = _resolve_files(data_dir, dataset, _CIFAR_TRAIN if train else _CIFAR_TEST)
        ds = load_cifar10(paths)
    else:
        names = {
            ("mnist", True): _IDX_TRAIN,
            ("mnist", False): _IDX_TEST,
            ("fmnist", True): _IDX_TRAIN,
            ("fmnist", False): _IDX_TEST,
            ("synth-file", True): _SYNTH_TRAIN,
            ("synth-file", False): _SYNTH_TEST,
        }[(dataset, train)]
        images, labels = _resolve_files(data_dir, dataset, names)
        ds = load_idx_pair(images, labels)
    if limit is not None and train and limit < ds.n:
        ds = ds.take(np.arange(limit))
    return ds


def _run_id(dataset: str, config: ReductionConfig | None, extra: dict) -> str:
    doc: dict = {"dataset": dataset, **extra}
    if config is not None:
        doc.update(config.to_dict())
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:10]


def _append_tsv(path: Path, rows: list[str]) -> None:
    # Re-running an identical command must not grow the table: metrics are
    # deterministic, so an exact-duplicate row carries no information.
    existing = set(path.read_text().splitlines()) if path.exists() else None
    try:
        with open(path, "a") as f:
            if existing is None:
                f.write(TSV_HEADER + "\n")
            for row in rows:
                if existing is None or row not in existing:
                    f.write(row + "\n")
    except OSError as e:
        raise IoError(f"writing {path}: {e}") from e


def _build_partition(spec: RunSpec, dataset: Dataset) -> Partition:
    return partition_homogeneous(dataset, threads=spec.threads)


def cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    test_per_class = args.test_per_class or max(args.per_class // 5, 1)
    train = generate_blobs(args.classes, args.per_class, args.dim, args.spread, args.seed)
    test = generate_blobs(args.classes, test_per_class, args.dim, args.spread, args.seed + 1)
    write_idx_pair(train.features, train.labels, train.dims, out / _SYNTH_TRAIN[0], out / _SYNTH_TRAIN[1])
    write_idx_pair(test.features, test.labels, test.dims, out / _SYNTH_TEST[0], out / _SYNTH_TEST[1])
    print(f"[synth] wrote {train.n} train / {test.n} test rows to {out}")
    return 0


def cmd_reduce(args: argparse.Namespace) -> int:
    config = ReductionConfig(
        method=args.method,
        alpha=_require_alpha(args),
        k_farthest=args.k_farthest,
        seed=args.seed,
    )
    if args.method == "random" and (args.count is None or args.count < 1):
        raise InvalidCount("reduce --method random needs --count >= 1")
    spec = RunSpec(
        command="reduce",
        dataset=args.dataset,
        data_dir=Path(args.data_dir),
        config=config,
        out_dir=Path(args.out),
        limit=args.limit,
        threads=args.threads,
    )
    train = _load_split(spec.dataset, spec.data_dir, True, spec.limit)
    run_dir = spec.out_dir / f"{config.method}-{_run_id(spec.dataset, config, {'limit': spec.limit, 'count': args.count})}"

    if config.method == "random":
        cset = select_random(train, args.count, config.seed)
        partition = None
    else:
        partition = _build_partition(spec, train)
        cset = select_by_config(partition, config)

    manifest_path = write_condensed(cset, run_dir)
    reduction = reduction_percent(train.n, cset.n)
    if partition is not None:
        sizes = partition.sizes()
        summary = {
            "clusters": len(partition),
            "degenerate": sum(c.is_terminal_degenerate for c in partition.clusters),
            "largest_cluster": int(sizes.max()),
            "reduction_percent": reduction,
        }
        (run_dir / "partition_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        if args.dump_partition:
            save_partition(partition, run_dir / "partition.json")
    print(f"[reduce] {config.method} on {spec.dataset}: reduction {reduction:.2f}% "
          f"({cset.n} of {train.n} kept)")
    print(manifest_path)
    return 0


def _require_alpha(args: argparse.Namespace) -> float:
    if args.method in ALPHA_METHODS:
        if args.alpha is None:
            raise ConfigError(f"--alpha is required for method {args.method!r}")
        return args.alpha
    return args.alpha if args.alpha is not None else 0.0


def cmd_eval(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.is_file():
        raise IoError(f"manifest not found: {manifest_path}")
    data_dir = Path(args.data_dir)
    # Resolve every input up front so failures leave no partial output.
    test = _load_split(args.dataset, data_dir, False, None)
    train = _load_split(args.dataset, data_dir, True, args.limit)
    cset = read_condensed(manifest_path, train)
    report = evaluate(cset, train, test, k=args.knn)

    out_dir = Path(args.out) if args.out else manifest_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    _append_tsv(out_dir / "results.tsv", [report.tsv_row()])
    print(f"[eval] {report.method}: accuracy {report.accuracy:.4f} at "
          f"{report.reduction_percent:.2f}% reduction ({report.n_train} train rows)")
    print(out_dir / "report.json")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    data_dir = Path(args.data_dir)
    train = _load_split(args.dataset, data_dir, True, args.limit)
    if args.partition:
        partition = load_partition(Path(args.partition), train)
    else:
        partition = partition_homogeneous(train, threads=args.threads)
    edges = (
        [int(x) for x in args.bins.split(",") if x.strip()]
        if args.bins
        else default_bin_edges(partition)
    )
    rows = size_histogram_table(partition, edges)
    run_dir = Path(args.out) / f"stats-{_run_id(args.dataset, None, {'limit': args.limit, 'bins': edges})}"
    run_dir.mkdir(parents=True, exist_ok=True)
    csv_path = run_dir / "histogram.csv"
    try:
        with open(csv_path, "w") as f:
            f.write("bin_lo,bin_hi,count,images\n")
            for lo, hi, count, images in rows:
                f.write(f"{lo},{hi},{count},{images}\n")
    except OSError as e:
        raise IoError(f"writing {csv_path}: {e}") from e
    save_size_histogram_figure(rows, run_dir / "histogram.png",
                               title=f"Cluster sizes: {args.dataset}")
    print(f"[stats] {len(partition)} clusters over {train.n} rows")
    print(csv_path)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.method not in ALPHA_METHODS:
        raise ConfigError(f"sweep supports {ALPHA_METHODS}, got {args.method!r}")
    alphas = [float(x) for x in args.alphas.split(",") if x.strip()]
    if not alphas:
        raise ConfigError("sweep needs at least one alpha")
    data_dir = Path(args.data_dir)
    test = _load_split(args.dataset, data_dir, False, None)
    train = _load_split(args.dataset, data_dir, True, args.limit)
    partition = partition_homogeneous(train, threads=args.threads)

    rows: list[dict] = []
    for alpha in alphas:
        config = ReductionConfig(method=args.method, alpha=alpha)
        cset = select_by_config(partition, config)
        report = evaluate(cset, train, test, k=args.knn)
        rows.append({
            "method": args.method, "alpha": alpha,
            "reduction": report.reduction_percent, "accuracy": report.accuracy,
        })
        baseline_accs = []
        for i in range(args.baseline_seeds):
            sample = select_random(train, cset.n, args.seed + i)
            baseline_accs.append(evaluate(sample, train, test, k=args.knn).accuracy)
        rows.append({
            "method": "random", "alpha": alpha,
            "reduction": report.reduction_percent,
            "accuracy": float(np.mean(baseline_accs)),
        })

    run_dir = Path(args.out) / f"sweep-{_run_id(args.dataset, None, {'method': args.method, 'alphas': alphas, 'limit': args.limit, 'knn': args.knn, 'seeds': args.baseline_seeds, 'seed': args.seed})}"
    run_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = run_dir / "sweep.tsv"
    tsv_rows = [
        f"{r['method']}\t{r['alpha']:.6g}\t{r['reduction']:.4f}\t{r['accuracy']:.6f}"
        for r in rows
    ]
    try:
        tsv_path.write_text(TSV_HEADER + "\n" + "\n".join(tsv_rows) + "\n")
    except OSError as e:
        raise IoError(f"writing {tsv_path}: {e}") from e
    save_tradeoff_figure(rows, run_dir / "tradeoff.png")
    print(f"[sweep] {len(rows)} rows ({args.method} + random baseline)")
    print(tsv_path)
    return 0


def _add_data_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--dataset", required=True, choices=DATASETS)
    sp.add_argument(
        "--data-dir",
        default=os.environ.get(DATA_DIR_ENV, "data"),
        help=f"dataset directory (default ${DATA_DIR_ENV} or ./data)",
    )
    sp.add_argument("--limit", type=int, default=None,
                    help="use only the first N training rows")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hcreduce",
        description="Condense labeled image datasets by homogeneous clustering",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic blob dataset")
    sp.add_argument("--classes", type=int, default=3)
    sp.add_argument("--per-class", type=int, default=50)
    sp.add_argument("--dim", type=int, default=4)
    sp.add_argument("--spread", type=float, default=8.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--test-per-class", type=int, default=None)
    sp.add_argument("--out", default="data/synth")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("reduce", help="partition and write a condensed run")
    _add_data_args(sp)
    sp.add_argument("--method", required=True, choices=METHODS)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--k-farthest", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=None,
                    help="target size for --method random")
    sp.add_argument("--out", default="runs")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--dump-partition", action="store_true",
                    help="also write the full per-cluster member dump")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("eval", help="score a condensed run with k-NN")
    _add_data_args(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--knn", type=int, default=1)
    sp.add_argument("--out", default=None,
                    help="report directory (default: next to the manifest)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("stats", help="cluster-size histogram CSV and figure")
    _add_data_args(sp)
    sp.add_argument("--partition", default=None,
                    help="reuse a partition dump instead of recomputing")
    sp.add_argument("--bins", default=None, help="comma-separated bin edges")
    sp.add_argument("--out", default="runs")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("sweep", help="reduce+eval across alphas with baselines")
    _add_data_args(sp)
    sp.add_argument("--method", required=True)
    sp.add_argument("--alphas", required=True, help="comma-separated alpha values")
    sp.add_argument("--knn", type=int, default=1)
    sp.add_argument("--baseline-seeds", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="runs")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    return p


_EXIT_FAMILIES: list[tuple[type, int]] = [
    (DataFormatError, 3),
    (ConfigError, 4),
    (IoError, 5),
    (StaleArtifact, 6),
]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ReductionError as e:
        print(f"error: {e}", file=sys.stderr)
        for family, code in _EXIT_FAMILIES:
            if isinstance(e, family):
                return code
        return 7


if __name__ == "__main__":
    sys.exit(main())
