import dataclasses

import numpy as np
import pytest

from scalesim.data import PartitionMode, partition
from scalesim.fleet import generate_fleet
from scalesim.messages import SERVER, CostModel, MsgKind, weight_payload_bytes
from scalesim.protocol import CheckpointPolicy
from scalesim.report import render_report_json
from scalesim.simnet import (
    FaultAction,
    FaultEntry,
    FaultPlan,
    SimParams,
    apply_fault,
    form_fleet_clusters,
    partition_digest,
    run_baseline_fl,
    run_scale,
)


@pytest.fixture(scope="module")
def small_world(wdbc, wdbc_schema):
    parts = partition(wdbc, 30, PartitionMode.IID, 0.2, seed=7)
    fleet = generate_fleet(30, 7, wdbc_schema)
    return parts, fleet


def run_pair(parts, fleet, params):
    assignment = form_fleet_clusters(fleet, params)
    scale, sdiag = run_scale(parts, fleet, params, assignment=assignment)
    baseline, bdiag = run_baseline_fl(parts, params, grouping=assignment)
    return scale, baseline, sdiag, bdiag


class TestFaultPlan:
    def test_empty_plan_no_change(self):
        crashed = {3}
        assert apply_fault(FaultPlan(), 5, crashed) == {3}

    def test_crash_then_recover(self):
        plan = FaultPlan((
            FaultEntry(2, 1, FaultAction.CRASH),
            FaultEntry(4, 1, FaultAction.RECOVER),
        ))
        crashed: set[int] = set()
        apply_fault(plan, 2, crashed)
        assert crashed == {1}
        apply_fault(plan, 3, crashed)
        assert crashed == {1}
        apply_fault(plan, 4, crashed)
        assert crashed == set()

    def test_rejects_non_alternating(self):
        with pytest.raises(ValueError):
            FaultPlan((
                FaultEntry(2, 1, FaultAction.CRASH),
                FaultEntry(4, 1, FaultAction.CRASH),
            ))

    def test_rejects_recover_first(self):
        with pytest.raises(ValueError):
            FaultPlan((FaultEntry(2, 1, FaultAction.RECOVER),))

    def test_rejects_unordered_rounds(self):
        with pytest.raises(ValueError):
            FaultPlan((
                FaultEntry(4, 1, FaultAction.CRASH),
                FaultEntry(2, 1, FaultAction.RECOVER),
            ))


class TestRunScale:
    def test_zero_rounds_only_setup_messages(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=0, k=3, seed=7)
        report, diag = run_scale(parts, fleet, params)
        nonzero = {k: v for k, v in report.totals.messages_by_kind.items() if v}
        assert nonzero == {"ProfileUpload": 30, "ClusterAssign": 30}
        assert report.totals.global_uploads == 0
        assert report.totals.accuracy is None

    def test_degenerate_policy_uploads_every_round(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=6, k=3, seed=7,
                           checkpoint=CheckpointPolicy(min_improvement=0.0, max_gap=1))
        report, _ = run_scale(parts, fleet, params)
        assert report.totals.global_uploads == 6 * 3
        assert all(c.uploads == 6 for c in report.clusters)

    def test_degenerate_policy_full_scale_exact_count(self, wdbc, wdbc_schema):
        # 10 clusters x 30 rounds with an always-upload policy
        parts = partition(wdbc, 100, PartitionMode.IID, 0.2, seed=42)
        fleet = generate_fleet(100, 42, wdbc_schema)
        params = SimParams(rounds=30, k=10, seed=42,
                           checkpoint=CheckpointPolicy(min_improvement=0.0, max_gap=1))
        report, _ = run_scale(parts, fleet, params)
        assert report.totals.global_uploads == 300

    def test_upload_bound(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=8, k=3, seed=7)
        report, _ = run_scale(parts, fleet, params)
        assert report.totals.global_uploads <= 3 * 8
        for c in report.clusters:
            assert 1 <= c.uploads <= 8

    def test_rerun_is_identical(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=4, k=3, seed=7)
        docs = []
        for _ in range(2):
            scale, baseline, _, _ = run_pair(parts, fleet, params)
            docs.append(render_report_json(mode="both", seed=7, config_echo={},
                                           scale=scale, baseline=baseline))
        assert docs[0] == docs[1]

    def test_peer_weight_conservation(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=5, k=3, seed=7)
        report, diag = run_scale(parts, fleet, params)
        assert diag.consumed_peer_weights == diag.log.count(MsgKind.PEER_EXCHANGE)
        assert diag.consumed_peer_weights > 0

    def test_weight_message_payloads(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=2, k=3, seed=7)
        _, diag = run_scale(parts, fleet, params)
        expected = weight_payload_bytes(30)
        assert expected == 30 * 8 + 8
        for rec in diag.log.records:
            if rec.kind in (MsgKind.PEER_EXCHANGE, MsgKind.MEMBER_TO_DRIVER,
                            MsgKind.DRIVER_BROADCAST, MsgKind.GLOBAL_UPLOAD):
                assert rec.payload_bytes == expected
            elif rec.kind is MsgKind.HEARTBEAT:
                assert rec.payload_bytes == 16

    def test_cost_totals_match_per_record_recompute(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=3, k=3, seed=7)
        _, diag = run_scale(parts, fleet, params)
        cm = params.cost
        latency = sum(cm.latency_ms(r) for r in diag.log.records)
        energy = sum(cm.energy_nj(r) for r in diag.log.records)
        assert latency == pytest.approx(diag.log.total_latency_ms, rel=1e-12)
        assert energy == pytest.approx(diag.log.total_energy_nj, rel=1e-12)

    def test_costs_monotone_in_rounds(self, small_world):
        parts, fleet = small_world
        short, _ = run_scale(parts, fleet, SimParams(rounds=2, k=3, seed=7))
        long, _ = run_scale(parts, fleet, SimParams(rounds=5, k=3, seed=7))
        assert long.totals.total_messages > short.totals.total_messages
        assert long.totals.total_latency_ms > short.totals.total_latency_ms
        assert long.totals.total_energy_nj > short.totals.total_energy_nj


class TestBaseline:
    def test_uploads_equal_nodes_times_rounds(self, wdbc, wdbc_schema):
        for nodes, rounds in ((9, 30), (30, 4)):
            parts = partition(wdbc, nodes, PartitionMode.IID, 0.2, seed=3)
            fleet = generate_fleet(nodes, 3, wdbc_schema)
            params = SimParams(rounds=rounds, k=min(3, nodes), seed=3)
            grouping = form_fleet_clusters(fleet, params)
            report, _ = run_baseline_fl(parts, params, grouping=grouping)
            assert report.totals.global_uploads == nodes * rounds

    def test_single_node_single_round(self, wdbc, wdbc_schema):
        parts = partition(wdbc, 1, PartitionMode.IID, 0.2, seed=3)
        fleet = generate_fleet(1, 3, wdbc_schema)
        params = SimParams(rounds=1, k=1, seed=3)
        grouping = form_fleet_clusters(fleet, params)
        report, _ = run_baseline_fl(parts, params, grouping=grouping)
        assert report.totals.global_uploads == 1

    def test_scale_never_exceeds_baseline(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=5, k=3, seed=7)
        scale, baseline, _, _ = run_pair(parts, fleet, params)
        assert scale.totals.global_uploads < baseline.totals.global_uploads

    def test_equal_when_every_node_is_a_cluster(self, wdbc, wdbc_schema):
        parts = partition(wdbc, 8, PartitionMode.IID, 0.2, seed=5)
        fleet = generate_fleet(8, 5, wdbc_schema)
        params = SimParams(rounds=3, k=8, seed=5, k_peers=0,
                           checkpoint=CheckpointPolicy(min_improvement=0.0, max_gap=1))
        scale, baseline, _, _ = run_pair(parts, fleet, params)
        assert scale.totals.global_uploads == baseline.totals.global_uploads == 24

    def test_all_messages_touch_server(self, small_world):
        parts, fleet = small_world
        params = SimParams(rounds=2, k=3, seed=7)
        grouping = form_fleet_clusters(fleet, params)
        _, diag = run_baseline_fl(parts, params, grouping=grouping)
        assert all(SERVER in (r.src, r.dst) for r in diag.log.records)


class TestFailover:
    def test_driver_crash_at_five_fails_over_by_eight(self, small_world):
        parts, fleet = small_world
        base = SimParams(rounds=10, k=3, seed=7)
        nofault, _ = run_scale(parts, fleet, base)
        drivers = [c.initial_driver for c in nofault.clusters]
        plan = FaultPlan(tuple(FaultEntry(5, d, FaultAction.CRASH) for d in drivers))
        faulty = dataclasses.replace(base, faults=plan)
        report, _ = run_scale(parts, fleet, faulty)
        for c in report.clusters:
            assert len(c.failovers) == 1
            ev = c.failovers[0]
            assert ev["round"] <= 8
            assert ev["new_driver"] != ev["old_driver"]
            assert c.final_driver == ev["new_driver"]

    def test_survivor_becomes_driver_in_pair(self, wdbc, wdbc_schema):
        parts = partition(wdbc, 2, PartitionMode.IID, 0.2, seed=11)
        fleet = generate_fleet(2, 11, wdbc_schema)
        base = SimParams(rounds=8, k=1, seed=11, k_peers=1)
        nofault, _ = run_scale(parts, fleet, base)
        driver = nofault.clusters[0].initial_driver
        other = ({0, 1} - {driver}).pop()
        plan = FaultPlan((FaultEntry(2, driver, FaultAction.CRASH),))
        report, _ = run_scale(parts, fleet, dataclasses.replace(base, faults=plan))
        assert report.clusters[0].final_driver == other

    def test_crash_and_recover_rejoins_as_member(self, small_world):
        parts, fleet = small_world
        base = SimParams(rounds=12, k=3, seed=7)
        nofault, _ = run_scale(parts, fleet, base)
        driver = nofault.clusters[0].initial_driver
        plan = FaultPlan((
            FaultEntry(2, driver, FaultAction.CRASH),
            FaultEntry(8, driver, FaultAction.RECOVER),
        ))
        report, _ = run_scale(parts, fleet, dataclasses.replace(base, faults=plan))
        cluster = report.clusters[0]
        assert cluster.final_driver != driver
        assert driver in cluster.members


class TestPartitionDigest:
    def test_same_partitions_same_digest(self, wdbc):
        a = partition(wdbc, 10, PartitionMode.IID, 0.2, seed=1)
        b = partition(wdbc, 10, PartitionMode.IID, 0.2, seed=1)
        assert partition_digest(a) == partition_digest(b)

    def test_different_seed_different_digest(self, wdbc):
        a = partition(wdbc, 10, PartitionMode.IID, 0.2, seed=1)
        b = partition(wdbc, 10, PartitionMode.IID, 0.2, seed=2)
        assert partition_digest(a) != partition_digest(b)


class TestCostModel:
    def test_server_channel_pays_multiplier(self):
        cm = CostModel(base_latency_ms=2.0, bandwidth_bytes_per_ms=1e6,
                       energy_nj_per_byte=50.0, energy_fixed_nj=1000.0,
                       server_channel_multiplier=10.0)
        from scalesim.messages import MessageRecord

        local = MessageRecord(1, MsgKind.PEER_EXCHANGE, 2, 3, 1000)
        remote = MessageRecord(1, MsgKind.GLOBAL_UPLOAD, 2, SERVER, 1000)
        assert cm.latency_ms(remote) == pytest.approx(10 * cm.latency_ms(local))
        assert cm.energy_nj(remote) == pytest.approx(10 * cm.energy_nj(local))

    def test_validation(self):
        with pytest.raises(ValueError):
            CostModel(bandwidth_bytes_per_ms=0.0)
        with pytest.raises(ValueError):
            CostModel(server_channel_multiplier=0.0)
