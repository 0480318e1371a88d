"""Breast Cancer Wisconsin (Diagnostic) ingestion and per-node partitioning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InsufficientData, ParseError, SchemaError
from .rng import PARTITION, SPLIT, substream

N_FEATURES = 30

_MEASURES = (
    "radius", "texture", "perimeter", "area", "smoothness",
    "compactness", "concavity", "concave_points", "symmetry", "fractal_dimension",
)
WDBC_FEATURE_NAMES = tuple(
    f"{m}_{suffix}" for suffix in ("mean", "se", "worst") for m in _MEASURES
)


class Label(Enum):
    MALIGNANT = 1
    BENIGN = -1


class PartitionMode(Enum):
    IID = "iid"
    NON_IID = "noniid"


@dataclass(frozen=True)
class LabeledExample:
    features: np.ndarray  # (30,) float64, finite
    label: Label


@dataclass
class NodePartition:
    node_id: int
    train: list[LabeledExample]
    test: list[LabeledExample]


def load_wdbc(path: str | Path) -> list[LabeledExample]:
    """Load a WDBC-layout CSV: id, diagnosis ('M'/'B'), 30 numeric features.

    An optional header row is auto-detected by checking whether the first
    field parses as a number (data rows start with a numeric id). Features are
    standardized per column to zero mean and unit variance over the full file.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if not rows:
        raise ParseError("empty input: no data rows", row=1)

    start = 0
    try:
        float(rows[0][0].strip())
    except ValueError:
        start = 1
    data_rows = rows[start:]
    if not data_rows:
        raise ParseError("no data rows after header", row=2)

    feats = np.empty((len(data_rows), N_FEATURES), dtype=np.float64)
    labels: list[Label] = []
    for ri, row in enumerate(data_rows):
        rownum = ri + start + 1
        if len(row) - 2 != N_FEATURES:
            raise SchemaError(
                f"row {rownum}: expected {N_FEATURES} feature columns, got {len(row) - 2}"
            )
        diag = row[1].strip()
        if diag not in ("M", "B"):
            raise ParseError(f"diagnosis must be 'M' or 'B', got {diag!r}", row=rownum, column=2)
        for ci in range(N_FEATURES):
            cell = row[2 + ci].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", row=rownum, column=3 + ci) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value: {cell!r}", row=rownum, column=3 + ci)
            feats[ri, ci] = v
        labels.append(Label.MALIGNANT if diag == "M" else Label.BENIGN)

    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std == 0.0] = 1.0
    feats = (feats - mean) / std
    return [LabeledExample(feats[i].copy(), labels[i]) for i in range(len(labels))]


def _deal_shares(data_size: int, n_nodes: int, mode: PartitionMode,
                 labels: np.ndarray, seed: int) -> list[np.ndarray]:
    rng = substream(seed, PARTITION)
    order = rng.permutation(data_size)
    if mode is PartitionMode.IID:
        base, rem = divmod(data_size, n_nodes)
        shares = []
        pos = 0
        for i in range(n_nodes):
            size = base + (1 if i < rem else 0)
            shares.append(order[pos:pos + size])
            pos += size
        return shares

    # label skew: sort the shuffled order by label, cut into shards of size
    # ceil(n / (2 * nodes)), deal the shuffled shards round-robin (two per
    # node when the data stretches that far)
    order = order[np.argsort(labels[order], kind="stable")]
    shard_size = math.ceil(data_size / (2 * n_nodes))
    shards = [order[s:s + shard_size] for s in range(0, data_size, shard_size)]
    shard_order = rng.permutation(len(shards))
    shares: list[list[int]] = [[] for _ in range(n_nodes)]
    for i, sid in enumerate(shard_order):
        shares[i % n_nodes].extend(shards[sid].tolist())
    return [np.array(s, dtype=np.int64) for s in shares]


def partition(
    data: list[LabeledExample],
    n_nodes: int,
    mode: PartitionMode,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> list[NodePartition]:
    """Split the dataset across nodes, IID or label-skewed, then carve each
    node's test split from its own share.

    Deterministic for a given seed; the union of all partitions is a
    permutation of the input.
    """
    if n_nodes < 1:
        raise ValueError(f"n_nodes must be >= 1, got {n_nodes}")
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in [0, 1), got {test_fraction}")
    n = len(data)
    if n < 2 * n_nodes:
        raise InsufficientData(f"{n} examples cannot give {n_nodes} nodes 2 train examples each")

    labels = np.array([1 if ex.label is Label.MALIGNANT else 0 for ex in data], dtype=np.int64)
    shares = _deal_shares(n, n_nodes, mode, labels, seed)

    partitions: list[NodePartition] = []
    for node_id, share in enumerate(shares):
        if share.size == 0:
            raise InsufficientData(f"node {node_id} received no examples")
        local = share[substream(seed, SPLIT, node_id).permutation(share.size)]
        n_test = int(share.size * test_fraction)
        train_idx, test_idx = local[:share.size - n_test], local[share.size - n_test:]
        if train_idx.size < 2:
            raise InsufficientData(f"node {node_id} has only {train_idx.size} train examples")
        partitions.append(NodePartition(
            node_id=node_id,
            train=[data[i] for i in train_idx],
            test=[data[i] for i in test_idx],
        ))
    return partitions
