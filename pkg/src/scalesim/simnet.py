"""Round-synchronous orchestration of both training modes.

Runs the clustered protocol (formation once, then rounds of per-cluster
training / exchange / aggregation with checkpointed uploads and failover) and
the traditional baseline (every node uploads to the server every round, the
server averages and broadcasts back). Both runs account every message through
the same cost model and emit comparable reports. Clusters execute
sequentially in cluster-id order, which fixes the message log order and makes
whole reports reproducible from the seed alone.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .clustering import ClusterAssignment, MixWeights, build_cluster_features, form_clusters
from .data import NodePartition
from .fleet import Fleet
from .messages import (
    CLUSTER_ASSIGN_BYTES,
    PROFILE_UPLOAD_BYTES,
    SERVER,
    CostModel,
    MessageLog,
    MsgKind,
    weight_payload_bytes,
)
from .model import ModelWeights, TrainConfig, evaluate_xy, to_xy, train_local_xy
from .protocol import (
    CheckpointPolicy,
    ClusterState,
    HealthState,
    RoundContext,
    driver_consensus_aggregate,
    elect_driver,
    ensure_driver,
    run_cluster_round,
)
from .report import ClusterRow, RunReport, RunTotals
from .rng import TRAIN


class FaultAction(Enum):
    CRASH = "crash"
    RECOVER = "recover"


@dataclass(frozen=True)
class FaultEntry:
    round_no: int
    node_id: int
    action: FaultAction


@dataclass(frozen=True)
class FaultPlan:
    entries: tuple[FaultEntry, ...] = ()

    def __post_init__(self) -> None:
        per_node: dict[int, list[FaultEntry]] = {}
        for e in self.entries:
            if e.round_no < 1:
                raise ValueError(f"fault round must be >= 1, got {e.round_no}")
            per_node.setdefault(e.node_id, []).append(e)
        for nid, events in per_node.items():
            rounds = [e.round_no for e in events]
            if rounds != sorted(rounds) or len(set(rounds)) != len(rounds):
                raise ValueError(f"fault rounds for node {nid} must strictly increase")
            expected = FaultAction.CRASH
            for e in events:
                if e.action is not expected:
                    raise ValueError(
                        f"node {nid}: fault actions must alternate crash/recover")
                expected = (FaultAction.RECOVER if expected is FaultAction.CRASH
                            else FaultAction.CRASH)


def apply_fault(plan: FaultPlan, round_no: int, crashed: set[int]) -> set[int]:
    """Apply this round's crash/recover actions to the crashed-node set."""
    for e in plan.entries:
        if e.round_no == round_no:
            if e.action is FaultAction.CRASH:
                crashed.add(e.node_id)
            else:
                crashed.discard(e.node_id)
    return crashed


@dataclass(frozen=True)
class SimParams:
    """Everything a run needs beyond the data and the fleet."""

    rounds: int
    k: int
    mix: MixWeights = MixWeights()
    geo_scale_km: float = 1000.0
    k_peers: int = 3
    checkpoint: CheckpointPolicy = CheckpointPolicy()
    suspect_threshold: int = 2
    dead_threshold: int = 3
    train: TrainConfig = TrainConfig()
    cost: CostModel = CostModel()
    faults: FaultPlan = FaultPlan()
    seed: int = 0


@dataclass
class RunDiagnostics:
    """Internal counters used by invariant tests, not part of the report."""

    consumed_peer_weights: int = 0
    aggregation_rounds: int = 0
    log: MessageLog | None = None
    assignment: ClusterAssignment | None = None
    states: list[ClusterState] = field(default_factory=list)
    global_weights: ModelWeights | None = None


def partition_digest(partitions: list[NodePartition]) -> str:
    """Content hash of the node partitions (features, labels, split sides)."""
    h = hashlib.sha256()
    for p in partitions:
        h.update(str(p.node_id).encode())
        for tag, examples in (("train", p.train), ("test", p.test)):
            h.update(tag.encode())
            for ex in examples:
                h.update(ex.features.tobytes())
                h.update(ex.label.name.encode())
    return h.hexdigest()


def _node_arrays(partitions: list[NodePartition]) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    return {p.node_id: to_xy(p.train) for p in partitions}


def _test_union(partitions: list[NodePartition], node_ids: list[int] | None = None):
    parts = [p for p in partitions if node_ids is None or p.node_id in node_ids]
    examples = [ex for p in parts for ex in p.test]
    if not examples:
        dim = parts[0].train[0].features.shape[0] if parts else 0
        return np.empty((0, dim)), np.empty((0,))
    return to_xy(examples)


def form_fleet_clusters(fleet: Fleet, params: SimParams) -> ClusterAssignment:
    """Cluster formation from the fleet's profiles, shared by both modes."""
    features = build_cluster_features(fleet.profiles)
    return form_clusters(features, params.k, params.mix,
                         seed=params.seed, geo_scale_km=params.geo_scale_km)


def _fuse_checkpoints(states: list[ClusterState]) -> ModelWeights | None:
    """Global model: mean of each cluster's latest checkpoint weights,
    weighted by that cluster's checkpoint count."""
    contributing = [st for st in states if st.checkpoints]
    if not contributing:
        return None
    total = sum(len(st.checkpoints) for st in contributing)
    dim = contributing[0].checkpoints[-1].weights.w.shape[0]
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    for st in contributing:
        share = len(st.checkpoints) / total
        last = st.checkpoints[-1].weights
        w += share * last.w
        b += share * last.b
    return ModelWeights(w, b)


def run_scale(
    partitions: list[NodePartition],
    fleet: Fleet,
    params: SimParams,
    assignment: ClusterAssignment | None = None,
    keep_records: bool = True,
) -> tuple[RunReport, RunDiagnostics]:
    """Execute the clustered protocol end to end and report per Table layout."""
    log = MessageLog(params.cost, keep_records=keep_records)
    diag = RunDiagnostics(log=log)
    node_ids = sorted(p.node_id for p in partitions)

    for nid in node_ids:
        log.log(0, MsgKind.PROFILE_UPLOAD, nid, SERVER, PROFILE_UPLOAD_BYTES)
    if assignment is None:
        assignment = form_fleet_clusters(fleet, params)
    diag.assignment = assignment
    for nid in node_ids:
        log.log(0, MsgKind.CLUSTER_ASSIGN, SERVER, nid, CLUSTER_ASSIGN_BYTES)

    train_data = _node_arrays(partitions)
    dim = next(iter(train_data.values()))[0].shape[1]

    states: list[ClusterState] = []
    for cluster in assignment.clusters:
        members = sorted(cluster.members)
        driver = elect_driver(fleet.criteria, members)
        cluster.driver = driver
        test_X, test_y = _test_union(partitions, members)
        states.append(ClusterState(
            cluster_id=cluster.cluster_id,
            members=members,
            driver=driver,
            weights={m: ModelWeights.zeros(dim) for m in members},
            health=HealthState.fresh(members),
            test_X=test_X,
            test_y=test_y,
            initial_driver=driver,
        ))
    diag.states = states

    crashed: set[int] = set()
    ctx = RoundContext(
        seed=params.seed,
        k_peers=params.k_peers,
        policy=params.checkpoint,
        suspect_threshold=params.suspect_threshold,
        dead_threshold=params.dead_threshold,
        train_template=params.train,
        train_data=train_data,
        crashed=crashed,
        log=log,
    )
    for rnd in range(1, params.rounds + 1):
        apply_fault(params.faults, rnd, crashed)
        for st in states:
            ensure_driver(st, fleet.criteria, rnd)
            stats = run_cluster_round(st, rnd, ctx)
            diag.consumed_peer_weights += stats.consumed_weights
            diag.aggregation_rounds += int(stats.aggregated)

    global_weights = _fuse_checkpoints(states)
    diag.global_weights = global_weights
    full_X, full_y = _test_union(partitions)
    global_acc = None
    if global_weights is not None and full_y.size > 0:
        global_acc = evaluate_xy(global_weights, full_X, full_y).accuracy

    rows = []
    for st in states:
        acc = st.last_cluster_accuracy
        if acc is None and st.checkpoints:
            acc = st.checkpoints[-1].cluster_accuracy
        rows.append(ClusterRow(
            cluster_id=st.cluster_id,
            members=st.members,
            rounds=params.rounds,
            uploads=len(st.checkpoints),
            accuracy=acc,
            initial_driver=st.initial_driver,
            final_driver=st.driver,
            failovers=[
                {"round": ev.round_no, "old_driver": ev.old_driver, "new_driver": ev.new_driver}
                for ev in st.failovers
            ],
        ))

    report = RunReport(
        mode="scale",
        seed=params.seed,
        partition_digest=partition_digest(partitions),
        clusters=rows,
        totals=RunTotals(
            nodes=len(node_ids),
            rounds=params.rounds,
            global_uploads=log.count(MsgKind.GLOBAL_UPLOAD),
            accuracy=global_acc,
            messages_by_kind=log.counts_by_kind(),
            total_messages=log.total_messages(),
            total_payload_bytes=log.total_payload_bytes,
            total_latency_ms=log.total_latency_ms,
            total_energy_nj=log.total_energy_nj,
        ),
    )
    return report, diag


def run_baseline_fl(
    partitions: list[NodePartition],
    params: SimParams,
    grouping: ClusterAssignment,
    keep_records: bool = True,
) -> tuple[RunReport, RunDiagnostics]:
    """Traditional federated learning: every node uploads every round.

    The server averages all node weights and broadcasts the result back.
    `grouping` (the deterministic cluster formation) is used only to shape
    report rows for side-by-side comparison; the protocol itself is flat.
    Fault plans do not apply to the baseline.
    """
    log = MessageLog(params.cost, keep_records=keep_records)
    diag = RunDiagnostics(log=log, assignment=grouping)
    node_ids = sorted(p.node_id for p in partitions)
    train_data = _node_arrays(partitions)
    dim = next(iter(train_data.values()))[0].shape[1]
    wpb = weight_payload_bytes(dim)

    global_weights = ModelWeights.zeros(dim)
    for rnd in range(1, params.rounds + 1):
        local = []
        for nid in node_ids:
            X, y = train_data[nid]
            cfg = replace(params.train, seed=(params.seed, TRAIN, rnd, nid))
            local.append(train_local_xy(global_weights, X, y, cfg))
            log.log(rnd, MsgKind.GLOBAL_UPLOAD, nid, SERVER, wpb)
        global_weights = driver_consensus_aggregate(local)
        for nid in node_ids:
            log.log(rnd, MsgKind.DRIVER_BROADCAST, SERVER, nid, wpb)
    diag.global_weights = global_weights

    full_X, full_y = _test_union(partitions)
    global_acc = evaluate_xy(global_weights, full_X, full_y).accuracy if full_y.size else None

    rows = []
    for cluster in grouping.clusters:
        members = sorted(cluster.members)
        test_X, test_y = _test_union(partitions, members)
        acc = evaluate_xy(global_weights, test_X, test_y).accuracy if test_y.size else None
        rows.append(ClusterRow(
            cluster_id=cluster.cluster_id,
            members=members,
            rounds=params.rounds,
            uploads=len(members) * params.rounds,
            accuracy=acc,
        ))

    report = RunReport(
        mode="baseline",
        seed=params.seed,
        partition_digest=partition_digest(partitions),
        clusters=rows,
        totals=RunTotals(
            nodes=len(node_ids),
            rounds=params.rounds,
            global_uploads=log.count(MsgKind.GLOBAL_UPLOAD),
            accuracy=global_acc,
            messages_by_kind=log.counts_by_kind(),
            total_messages=log.total_messages(),
            total_payload_bytes=log.total_payload_bytes,
            total_latency_ms=log.total_latency_ms,
            total_energy_nj=log.total_energy_nj,
        ),
    )
    return report, diag
