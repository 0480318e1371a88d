"""The per-cluster round engine.

One round runs, for every non-crashed member: local training, a seeded pull
of peer weights with one-sided averaging, forwarding of the updated weights
to the cluster driver, driver-side consensus averaging, a checkpoint decision
that gates the single upload to the global server, and a broadcast of the
consensus back to the members. Heartbeats recorded at the end of the round
feed the health tracker; a driver declared dead triggers re-election at the
start of the next round.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCluster, NoAliveMembers
from .messages import HEARTBEAT_BYTES, SERVER, MessageLog, MsgKind, weight_payload_bytes
from .model import ModelWeights, TrainConfig, evaluate_xy, train_local_xy
from .rng import PEERS, TRAIN, substream

# driver-election criteria, in weight order
CRITERIA = (
    "computational_capacity",
    "network_connectivity",
    "battery_level",
    "reliability",
    "data_representativeness",
    "trust",
)


@dataclass
class DriverCriteria:
    """Per-node election criterion values (each in [0, 1]) and their weights."""

    values: dict[int, np.ndarray]  # node_id -> (6,) array, CRITERIA order
    weights: np.ndarray            # (6,) non-negative

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(CRITERIA),):
            raise ValueError(f"expected {len(CRITERIA)} criterion weights")
        if np.any(self.weights < 0):
            raise ValueError("criterion weights must be non-negative")
        if self.weights.sum() <= 0:
            raise ValueError("criterion weights sum to zero")
        for nid, vals in self.values.items():
            vals = np.asarray(vals, dtype=np.float64)
            if vals.shape != (len(CRITERIA),):
                raise ValueError(f"node {nid}: expected {len(CRITERIA)} criterion values")
            if np.any(vals < 0) or np.any(vals > 1):
                raise ValueError(f"node {nid}: criterion values must lie in [0, 1]")
            self.values[nid] = vals


def elect_driver(criteria: DriverCriteria, alive: Iterable[int]) -> int:
    """Alive member with the highest weighted criterion sum; ties go to the
    lowest node id."""
    best_id: int | None = None
    best_score = -np.inf
    for nid in sorted(set(alive)):
        score = float(criteria.weights @ criteria.values[nid])
        if score > best_score:
            best_id, best_score = nid, score
    if best_id is None:
        raise NoAliveMembers("no alive members to elect from")
    return best_id


def select_peers(
    alive_members: Sequence[int],
    node_id: int,
    k_peers: int,
    round_no: int,
    seed: int,
) -> list[int]:
    """Seeded per-(round, node) draw of up to k_peers alive peers, self excluded.

    The exchange is a one-sided pull; symmetry is not enforced. Fewer alive
    peers than k_peers yields all of them.
    """
    pool = sorted(m for m in set(alive_members) if m != node_id)
    if k_peers <= 0 or not pool:
        return []
    rng = substream(seed, PEERS, round_no, node_id)
    picked = rng.permutation(len(pool))[:min(k_peers, len(pool))]
    return sorted(pool[i] for i in picked)


def peer_exchange_update(own: ModelWeights, received: Sequence[ModelWeights]) -> ModelWeights:
    """Unweighted per-coordinate mean of own plus received weights (bias included)."""
    for r in received:
        if r.w.shape != own.w.shape:
            raise DimensionMismatch(f"expected dim {own.w.shape}, got {r.w.shape}")
    if not received:
        return own.copy()
    stack = np.stack([own.w] + [r.w for r in received])
    bias = float(np.mean([own.b] + [r.b for r in received]))
    return ModelWeights(stack.mean(axis=0), bias)


def driver_consensus_aggregate(updated: Sequence[ModelWeights]) -> ModelWeights:
    """Per-coordinate arithmetic mean over the cluster's updated weights."""
    if not updated:
        raise EmptyCluster("cannot aggregate zero weight vectors")
    dim = updated[0].w.shape
    for u in updated:
        if u.w.shape != dim:
            raise DimensionMismatch(f"expected dim {dim}, got {u.w.shape}")
    stack = np.stack([u.w for u in updated])
    bias = float(np.mean([u.b for u in updated]))
    return ModelWeights(stack.mean(axis=0), bias)


@dataclass(frozen=True)
class CheckpointPolicy:
    min_improvement: float = 0.005
    max_gap: int = 5


def should_checkpoint(
    last_uploaded_accuracy: float | None,
    current_accuracy: float,
    rounds_since_upload: int,
    policy: CheckpointPolicy,
) -> bool:
    """Upload when nothing was uploaded yet, the cluster improved by at least
    min_improvement, or max_gap rounds passed since the last upload."""
    if last_uploaded_accuracy is None:
        return True
    if current_accuracy - last_uploaded_accuracy >= policy.min_improvement:
        return True
    return rounds_since_upload >= policy.max_gap


@dataclass(frozen=True)
class CheckpointRecord:
    cluster_id: int
    round_no: int
    weights: ModelWeights
    cluster_accuracy: float


class NodeStatus(Enum):
    ALIVE = "alive"
    SUSPECT = "suspect"
    DEAD = "dead"


@dataclass
class NodeHealth:
    last_heartbeat_round: int = 0
    missed: int = 0
    status: NodeStatus = NodeStatus.ALIVE


@dataclass
class HealthState:
    nodes: dict[int, NodeHealth]

    @classmethod
    def fresh(cls, members: Iterable[int]) -> "HealthState":
        return cls({m: NodeHealth() for m in members})

    def status_of(self, node_id: int) -> NodeStatus:
        return self.nodes[node_id].status

    def alive(self) -> list[int]:
        return sorted(m for m, h in self.nodes.items() if h.status is NodeStatus.ALIVE)


def record_heartbeat(state: HealthState, node_id: int, round_no: int) -> None:
    state.nodes[node_id].last_heartbeat_round = round_no


def check_health(
    state: HealthState,
    round_no: int,
    suspect_threshold: int,
    dead_threshold: int,
) -> list[int]:
    """Refresh missed counts and statuses after round_no's heartbeats.

    A node missing m consecutive heartbeats is Suspect at m >= suspect
    threshold and Dead at m >= dead threshold. Returns nodes that died this
    check, sorted.
    """
    if not 1 <= suspect_threshold < dead_threshold:
        raise ValueError("need 1 <= suspect_threshold < dead_threshold")
    newly_dead: list[int] = []
    for nid in sorted(state.nodes):
        health = state.nodes[nid]
        health.missed = round_no - health.last_heartbeat_round
        if health.missed >= dead_threshold:
            if health.status is not NodeStatus.DEAD:
                newly_dead.append(nid)
            health.status = NodeStatus.DEAD
        elif health.missed >= suspect_threshold:
            health.status = NodeStatus.SUSPECT
        else:
            health.status = NodeStatus.ALIVE
    return newly_dead


@dataclass(frozen=True)
class FailoverEvent:
    round_no: int
    cluster_id: int
    old_driver: int | None
    new_driver: int


@dataclass
class ClusterState:
    """Mutable per-cluster protocol state carried across rounds."""

    cluster_id: int
    members: list[int]  # sorted node ids
    driver: int | None
    weights: dict[int, ModelWeights]
    health: HealthState
    test_X: np.ndarray
    test_y: np.ndarray
    initial_driver: int | None = None
    last_uploaded_accuracy: float | None = None
    rounds_since_upload: int = 0
    last_cluster_accuracy: float | None = None
    checkpoints: list[CheckpointRecord] = field(default_factory=list)
    failovers: list[FailoverEvent] = field(default_factory=list)


@dataclass
class RoundContext:
    """Everything run_cluster_round needs beyond the cluster's own state."""

    seed: int
    k_peers: int
    policy: CheckpointPolicy
    suspect_threshold: int
    dead_threshold: int
    train_template: TrainConfig
    train_data: Mapping[int, tuple[np.ndarray, np.ndarray]]
    crashed: set[int]
    log: MessageLog


@dataclass
class RoundStats:
    consumed_weights: int = 0
    aggregated: bool = False
    uploaded: bool = False


def ensure_driver(state: ClusterState, criteria: DriverCriteria, round_no: int) -> None:
    """Re-elect the driver if the current one is dead or missing.

    Election draws on members whose health status is Alive; the change is
    recorded as a failover event.
    """
    cur = state.driver
    if cur is not None and state.health.status_of(cur) is not NodeStatus.DEAD:
        return
    alive = state.health.alive()
    if not alive:
        state.driver = None
        return
    new = elect_driver(criteria, alive)
    state.failovers.append(FailoverEvent(round_no, state.cluster_id, cur, new))
    state.driver = new


def run_cluster_round(state: ClusterState, round_no: int, ctx: RoundContext) -> RoundStats:
    """Advance one cluster by one round, logging every transmission.

    Crashed nodes neither train, message, nor heartbeat; peers are drawn from
    status-alive members, and a pull from a selected peer that is actually
    crashed simply delivers nothing. A designated driver that is crashed but
    not yet declared dead receives member updates into the void: no
    aggregation, upload, or broadcast happens that round.
    """
    stats = RoundStats()
    participants = [m for m in state.members if m not in ctx.crashed]
    alive_status = state.health.alive()
    dim_bytes = None

    trained: dict[int, ModelWeights] = {}
    for m in participants:
        X, y = ctx.train_data[m]
        cfg = replace(ctx.train_template, seed=(ctx.seed, TRAIN, round_no, m))
        trained[m] = train_local_xy(state.weights[m], X, y, cfg)
        if dim_bytes is None:
            dim_bytes = weight_payload_bytes(trained[m].w.shape[0])

    updated: dict[int, ModelWeights] = {}
    for m in participants:
        peers = select_peers(alive_status, m, ctx.k_peers, round_no, ctx.seed)
        received = []
        for p in peers:
            if p in trained:
                ctx.log.log(round_no, MsgKind.PEER_EXCHANGE, p, m, dim_bytes)
                received.append(trained[p])
        stats.consumed_weights += len(received)
        updated[m] = peer_exchange_update(trained[m], received)
    for m, mw in updated.items():
        state.weights[m] = mw

    driver = state.driver
    if driver is not None and participants:
        for m in participants:
            if m != driver:
                ctx.log.log(round_no, MsgKind.MEMBER_TO_DRIVER, m, driver, dim_bytes)
        if driver in trained:
            consensus = driver_consensus_aggregate([updated[m] for m in participants])
            if state.test_y.size > 0:
                acc = evaluate_xy(consensus, state.test_X, state.test_y).accuracy
            else:
                acc = 0.0
            state.last_cluster_accuracy = acc
            state.rounds_since_upload += 1
            stats.aggregated = True
            if should_checkpoint(state.last_uploaded_accuracy, acc,
                                 state.rounds_since_upload, ctx.policy):
                ctx.log.log(round_no, MsgKind.GLOBAL_UPLOAD, driver, SERVER, dim_bytes)
                state.checkpoints.append(
                    CheckpointRecord(state.cluster_id, round_no, consensus.copy(), acc))
                state.last_uploaded_accuracy = acc
                state.rounds_since_upload = 0
                stats.uploaded = True
            for m in participants:
                if m != driver:
                    ctx.log.log(round_no, MsgKind.DRIVER_BROADCAST, driver, m, dim_bytes)
                state.weights[m] = consensus.copy()

    for m in participants:
        record_heartbeat(state.health, m, round_no)
        if m == driver:
            ctx.log.log(round_no, MsgKind.HEARTBEAT, m, SERVER, HEARTBEAT_BYTES)
        elif driver is not None:
            ctx.log.log(round_no, MsgKind.HEARTBEAT, m, driver, HEARTBEAT_BYTES)
    check_health(state.health, round_no, ctx.suspect_threshold, ctx.dead_threshold)
    return stats
