"""Message records, cost accounting, and the simulated transmission log."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

SERVER = -1  # src/dst sentinel for the global server

# declared payload sizes for the non-weight message kinds
PROFILE_UPLOAD_BYTES = 96
CLUSTER_ASSIGN_BYTES = 16
HEARTBEAT_BYTES = 16


class MsgKind(Enum):
    PROFILE_UPLOAD = "ProfileUpload"
    CLUSTER_ASSIGN = "ClusterAssign"
    PEER_EXCHANGE = "PeerExchange"
    MEMBER_TO_DRIVER = "MemberToDriver"
    DRIVER_BROADCAST = "DriverBroadcast"
    GLOBAL_UPLOAD = "GlobalUpload"
    HEARTBEAT = "Heartbeat"


WEIGHT_KINDS = frozenset({
    MsgKind.PEER_EXCHANGE,
    MsgKind.MEMBER_TO_DRIVER,
    MsgKind.DRIVER_BROADCAST,
    MsgKind.GLOBAL_UPLOAD,
})


def weight_payload_bytes(dim: int) -> int:
    """Bytes carried by a weight-bearing message: 8-byte reals plus the bias."""
    return dim * 8 + 8


@dataclass(frozen=True)
class MessageRecord:
    round_no: int
    kind: MsgKind
    src: int
    dst: int
    payload_bytes: int


@dataclass(frozen=True)
class CostModel:
    """Declared per-message latency and energy costs.

    Messages that touch the global server (src or dst) pay the server channel
    multiplier on both latency and energy, modeling the long-haul link the
    clustered protocol exists to avoid; intra-cluster traffic pays base cost.
    All outputs are accounting units, compared only against each other.
    """

    base_latency_ms: float = 2.0
    bandwidth_bytes_per_ms: float = 1.25e6
    energy_nj_per_byte: float = 50.0
    energy_fixed_nj: float = 1000.0
    server_channel_multiplier: float = 10.0

    def __post_init__(self) -> None:
        if self.bandwidth_bytes_per_ms <= 0:
            raise ValueError("bandwidth_bytes_per_ms must be > 0")
        if min(self.base_latency_ms, self.energy_nj_per_byte,
               self.energy_fixed_nj) < 0:
            raise ValueError("cost coefficients must be non-negative")
        if self.server_channel_multiplier <= 0:
            raise ValueError("server_channel_multiplier must be > 0")

    def _multiplier(self, src: int, dst: int) -> float:
        return self.server_channel_multiplier if SERVER in (src, dst) else 1.0

    def latency_ms(self, rec: MessageRecord) -> float:
        return (self.base_latency_ms + rec.payload_bytes / self.bandwidth_bytes_per_ms) \
            * self._multiplier(rec.src, rec.dst)

    def energy_nj(self, rec: MessageRecord) -> float:
        return (self.energy_nj_per_byte * rec.payload_bytes + self.energy_fixed_nj) \
            * self._multiplier(rec.src, rec.dst)


@dataclass
class MessageLog:
    """Append-only log of simulated transmissions with running cost totals."""

    cost_model: CostModel
    keep_records: bool = True
    records: list[MessageRecord] = field(default_factory=list)
    counts: dict[MsgKind, int] = field(default_factory=dict)
    total_payload_bytes: int = 0
    total_latency_ms: float = 0.0
    total_energy_nj: float = 0.0

    def log(self, round_no: int, kind: MsgKind, src: int, dst: int, payload_bytes: int) -> None:
        rec = MessageRecord(round_no, kind, src, dst, payload_bytes)
        if self.keep_records:
            self.records.append(rec)
        self.counts[kind] = self.counts.get(kind, 0) + 1
        self.total_payload_bytes += payload_bytes
        self.total_latency_ms += self.cost_model.latency_ms(rec)
        self.total_energy_nj += self.cost_model.energy_nj(rec)

    def count(self, kind: MsgKind) -> int:
        return self.counts.get(kind, 0)

    def total_messages(self) -> int:
        return sum(self.counts.values())

    def counts_by_kind(self) -> dict[str, int]:
        return {kind.value: self.counts.get(kind, 0) for kind in MsgKind}
