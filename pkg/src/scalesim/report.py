"""Run reports, the comparison table, and their JSON/CSV rendering."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class ClusterRow:
    cluster_id: int
    members: list[int]
    rounds: int
    uploads: int
    accuracy: float | None
    initial_driver: int | None = None
    final_driver: int | None = None
    failovers: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class RunTotals:
    nodes: int
    rounds: int
    global_uploads: int
    accuracy: float | None
    messages_by_kind: dict[str, int]
    total_messages: int
    total_payload_bytes: int
    total_latency_ms: float
    total_energy_nj: float


@dataclass
class RunReport:
    mode: str  # "scale" or "baseline"
    seed: int
    partition_digest: str
    clusters: list[ClusterRow]
    totals: RunTotals

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "partition_digest": self.partition_digest,
            "clusters": [
                {
                    "cluster_id": c.cluster_id,
                    "members": list(c.members),
                    "rounds": c.rounds,
                    "uploads": c.uploads,
                    "accuracy": c.accuracy,
                    "initial_driver": c.initial_driver,
                    "final_driver": c.final_driver,
                    "failovers": c.failovers,
                }
                for c in self.clusters
            ],
            "totals": {
                "nodes": self.totals.nodes,
                "rounds": self.totals.rounds,
                "global_uploads": self.totals.global_uploads,
                "accuracy": self.totals.accuracy,
                "messages_by_kind": self.totals.messages_by_kind,
                "total_messages": self.totals.total_messages,
                "total_payload_bytes": self.totals.total_payload_bytes,
                "total_latency_ms": self.totals.total_latency_ms,
                "total_energy_nj": self.totals.total_energy_nj,
            },
        }


TABLE_COLUMNS = ("run", "nodes", "rounds", "updates_fl", "acc_fl", "updates_scale", "acc_scale")


def _fmt_acc(v: Any) -> str:
    return "" if v in (None, "") else f"{float(v):.4f}"


def build_table(scale: RunReport | None, baseline: RunReport | None) -> list[dict[str, Any]]:
    """One row per cluster plus a totals row, in the comparison-table layout.

    Scale and baseline reports share the same cluster grouping, so rows can be
    zipped by cluster id; columns for a mode that did not run stay empty.
    """
    ref = scale or baseline
    if ref is None:
        raise ValueError("need at least one report")
    by_id_scale = {c.cluster_id: c for c in scale.clusters} if scale else {}
    by_id_base = {c.cluster_id: c for c in baseline.clusters} if baseline else {}
    rows: list[dict[str, Any]] = []
    for c in ref.clusters:
        b = by_id_base.get(c.cluster_id)
        s = by_id_scale.get(c.cluster_id)
        rows.append({
            "run": f"cluster_{c.cluster_id + 1}",
            "nodes": len(c.members),
            "rounds": c.rounds,
            "updates_fl": b.uploads if b else "",
            "acc_fl": b.accuracy if b else "",
            "updates_scale": s.uploads if s else "",
            "acc_scale": s.accuracy if s else "",
        })
    rows.append({
        "run": "total",
        "nodes": ref.totals.nodes,
        "rounds": ref.totals.rounds,
        "updates_fl": baseline.totals.global_uploads if baseline else "",
        "acc_fl": baseline.totals.accuracy if baseline else "",
        "updates_scale": scale.totals.global_uploads if scale else "",
        "acc_scale": scale.totals.accuracy if scale else "",
    })
    return rows


def render_table_csv(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in rows:
        writer.writerow([
            row["run"], row["nodes"], row["rounds"],
            row["updates_fl"], _fmt_acc(row["acc_fl"]),
            row["updates_scale"], _fmt_acc(row["acc_scale"]),
        ])
    return buf.getvalue()


def render_report_json(
    *,
    mode: str,
    seed: int,
    config_echo: dict[str, Any],
    scale: RunReport | None,
    baseline: RunReport | None,
) -> str:
    """Deterministic JSON document for a run: same inputs, same bytes."""
    doc = {
        "format": "scale-sim-report/1",
        "mode": mode,
        "seed": seed,
        "config": config_echo,
        "reports": {
            "scale": scale.to_jsonable() if scale else None,
            "baseline": baseline.to_jsonable() if baseline else None,
        },
        "table": build_table(scale, baseline),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
