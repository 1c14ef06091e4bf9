"""Dataset directories and labeled anomaly-detection tasks.

A dataset directory holds exactly four files:

    meta.json      {"name", "num_nodes", "num_features", "num_classes"}
    edges.txt      one "u v" pair per line, 0-indexed, each unordered pair once
    features.bin   one matrix block (see `formats`)
    labels.txt     one integer class label per line

`load_dataset` cross-checks every count in meta.json against the files and
raises a distinct error per failure mode. `make_anomaly_task` relabels the
globally smallest class as anomalous and draws the seeded labeled pool.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .formats import (
    BadMagic,
    CountMismatch,
    DatasetError,
    MissingDatasetFile,
    read_features,
    write_features,
)
from .graph_core import SparseGraph, build_graph

META_KEYS = ("name", "num_nodes", "num_features", "num_classes")


@dataclass
class Dataset:
    """A loaded dataset: graph + dense features + integer class labels."""

    name: str
    graph: SparseGraph
    features: np.ndarray
    class_labels: np.ndarray
    num_classes: int

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])


@dataclass
class AnomalyTask:
    """Binary relabeling plus the labeled/unlabeled split for one seed.

    train_idx, val_idx and test_idx partition disjointly; test_idx is every
    node outside the labeled pool. ``label_mode`` is "normal_only" (labeled
    pool drawn from normal nodes) or "both".
    """

    binary_labels: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    anomaly_class: int
    label_rate: float
    label_mode: str
    seed: int

    def to_manifest(self) -> dict:
        return {
            "anomaly_class": int(self.anomaly_class),
            "label_rate": float(self.label_rate),
            "label_mode": self.label_mode,
            "seed": int(self.seed),
            "train_idx": [int(i) for i in self.train_idx],
            "val_idx": [int(i) for i in self.val_idx],
            "test_idx": [int(i) for i in self.test_idx],
        }


def task_from_manifest(ds: Dataset, manifest: dict) -> AnomalyTask:
    binary = (ds.class_labels == int(manifest["anomaly_class"])).astype(np.int64)
    return AnomalyTask(
        binary_labels=binary,
        train_idx=np.asarray(manifest["train_idx"], dtype=np.int64),
        val_idx=np.asarray(manifest["val_idx"], dtype=np.int64),
        test_idx=np.asarray(manifest["test_idx"], dtype=np.int64),
        anomaly_class=int(manifest["anomaly_class"]),
        label_rate=float(manifest["label_rate"]),
        label_mode=str(manifest["label_mode"]),
        seed=int(manifest["seed"]),
    )


def _read_meta(directory: Path) -> dict:
    meta_path = directory / "meta.json"
    if not meta_path.is_file():
        raise MissingDatasetFile(f"missing {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as e:
        raise CountMismatch(f"{meta_path}: invalid JSON: {e}") from e
    for key in META_KEYS:
        if key not in meta:
            raise CountMismatch(f"{meta_path}: missing key {key!r}")
    return meta


def _read_edges(path: Path, num_nodes: int) -> np.ndarray:
    if not path.is_file():
        raise MissingDatasetFile(f"missing {path}")
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise CountMismatch(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as e:
                raise CountMismatch(f"{path}:{lineno}: non-integer endpoint") from e
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise CountMismatch(
                    f"{path}:{lineno}: edge ({u}, {v}) out of range for {num_nodes} nodes"
                )
            if u == v:
                raise CountMismatch(f"{path}:{lineno}: self-loop ({u}, {v})")
            pairs.append((u, v))
    return np.asarray(pairs, dtype=np.int64).reshape(len(pairs), 2)


def load_dataset(directory) -> Dataset:
    """Load and validate a dataset directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingDatasetFile(f"dataset directory {directory} does not exist")
    meta = _read_meta(directory)
    n = int(meta["num_nodes"])
    f = int(meta["num_features"])
    c = int(meta["num_classes"])
    if n < 1 or f < 1 or c < 1:
        raise CountMismatch(f"{directory}/meta.json: counts must be positive")

    pairs = _read_edges(directory / "edges.txt", n)
    graph = build_graph(pairs, n)
    if graph.num_edges != pairs.shape[0]:
        raise CountMismatch(
            f"{directory}/edges.txt: {pairs.shape[0]} lines but only "
            f"{graph.num_edges} distinct undirected edges (duplicates present)"
        )

    features = read_features(directory / "features.bin")
    if features.shape != (n, f):
        raise CountMismatch(
            f"{directory}/features.bin: block is {features.shape}, "
            f"meta.json declares ({n}, {f})"
        )

    labels_path = directory / "labels.txt"
    if not labels_path.is_file():
        raise MissingDatasetFile(f"missing {labels_path}")
    try:
        labels = np.array(
            [int(s) for s in labels_path.read_text().split()], dtype=np.int64
        )
    except ValueError as e:
        raise CountMismatch(f"{labels_path}: non-integer label") from e
    if labels.shape[0] != n:
        raise CountMismatch(
            f"{labels_path}: {labels.shape[0]} labels, meta.json declares {n} nodes"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise CountMismatch(
            f"{labels_path}: labels outside [0, {c}) present"
        )
    return Dataset(str(meta["name"]), graph, features, labels, c)


def save_dataset(directory, ds: Dataset) -> None:
    """Write the four-file layout (useful for toys and round-trip tests)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": ds.name,
        "num_nodes": ds.num_nodes,
        "num_features": ds.num_features,
        "num_classes": int(ds.num_classes),
    }
    (directory / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    lines = [f"{u} {v}" for u, v in ds.graph.edges()]
    (directory / "edges.txt").write_text("\n".join(lines) + ("\n" if lines else ""))
    write_features(directory / "features.bin", ds.features)
    (directory / "labels.txt").write_text(
        "\n".join(str(int(l)) for l in ds.class_labels) + "\n"
    )


def smallest_class(ds: Dataset) -> int:
    """Globally smallest non-empty class; ties break toward the lower id."""
    counts = np.bincount(ds.class_labels, minlength=ds.num_classes)
    counts = np.where(counts > 0, counts, np.iinfo(np.int64).max)
    return int(np.argmin(counts))


def make_anomaly_task(
    ds: Dataset, label_rate: float, seed: int, label_mode: str = "normal_only"
) -> AnomalyTask:
    """Build the seeded semi-supervised split.

    The labeled pool has round(label_rate * N) nodes drawn uniformly without
    replacement (from normal nodes only under "normal_only"), split 80/20
    into train/validation (stratified when both classes are present). Every
    node outside the pool is test.
    """
    if not 0.0 < label_rate < 1.0:
        raise ValueError("label_rate must lie strictly between 0 and 1")
    if label_mode not in ("normal_only", "both"):
        raise ValueError(f"unknown label_mode {label_mode!r}")
    anomaly = smallest_class(ds)
    binary = (ds.class_labels == anomaly).astype(np.int64)
    n = ds.num_nodes
    n_labeled = int(round(label_rate * n))
    if n_labeled < 1:
        raise ValueError(
            f"label_rate {label_rate} yields an empty labeled pool on {n} nodes"
        )
    rng = np.random.default_rng(seed)
    source = np.flatnonzero(binary == 0) if label_mode == "normal_only" else np.arange(n)
    if n_labeled > source.shape[0]:
        raise ValueError(
            f"labeled pool of {n_labeled} exceeds the {source.shape[0]} eligible nodes"
        )
    pool = rng.choice(source, size=n_labeled, replace=False)

    def split_80_20(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k = int(round(0.8 * nodes.shape[0]))
        if nodes.shape[0] >= 2:
            k = min(max(k, 1), nodes.shape[0] - 1)
        return nodes[:k], nodes[k:]

    classes_in_pool = np.unique(binary[pool])
    if label_mode == "both" and classes_in_pool.shape[0] == 2:
        train_parts, val_parts = [], []
        for cls in classes_in_pool:
            tr, va = split_80_20(pool[binary[pool] == cls])
            train_parts.append(tr)
            val_parts.append(va)
        train = np.concatenate(train_parts)
        val = np.concatenate(val_parts)
    else:
        train, val = split_80_20(pool)

    in_pool = np.zeros(n, dtype=bool)
    in_pool[pool] = True
    return AnomalyTask(
        binary_labels=binary,
        train_idx=np.sort(train),
        val_idx=np.sort(val),
        test_idx=np.flatnonzero(~in_pool),
        anomaly_class=anomaly,
        label_rate=float(label_rate),
        label_mode=label_mode,
        seed=int(seed),
    )
