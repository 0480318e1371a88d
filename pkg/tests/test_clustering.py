import numpy as np
import pytest
from helpers import best_partition_objective

from scalesim.clustering import (
    ClusterFeature,
    MixWeights,
    build_cluster_features,
    cluster_distance,
    default_k,
    distance_matrix,
    form_clusters,
)
from scalesim.errors import InvalidK
from scalesim.geo import GeoPoint
from scalesim.profiles import DeviceMetrics, NodeProfile

PURE_GEO = MixWeights(0.0, 0.0, 1.0)
NO_GEO = MixWeights(0.5, 0.5, 0.0)


def mk_metrics() -> DeviceMetrics:
    return DeviceMetrics(
        computational_power=1.0, energy_efficiency=1.0, latency=1.0,
        network_bandwidth=1.0, concurrency_level=1.0, cpu_utilization=0.5,
        energy_consumption=1.0, network_efficiency=0.5,
    )


def mk_profile(node_id, schema_score=0.0, log_pi=0.0, lat=0.0, lon=0.0) -> NodeProfile:
    return NodeProfile(
        node_id=node_id, schema_score=schema_score, metadata_score=0.0,
        compute_pi=0.5, log_pi=log_pi, location=GeoPoint(lat, lon),
        metrics=mk_metrics(),
    )


def mk_feature(node_id, ds=0.5, pi=0.5, lat=0.0, lon=0.0) -> ClusterFeature:
    return ClusterFeature(node_id=node_id, ds=ds, pi=pi, geo=GeoPoint(lat, lon))


def random_features(rng, n):
    return [
        mk_feature(i, ds=float(rng.random()), pi=float(rng.random()),
                   lat=float(rng.uniform(-60, 60)), lon=float(rng.uniform(-170, 170)))
        for i in range(n)
    ]


class TestBuildClusterFeatures:
    def test_single_node_degenerate_midpoint(self):
        feats = build_cluster_features([mk_profile(0, schema_score=3.0, log_pi=1.0)])
        assert feats[0].ds == 0.5
        assert feats[0].pi == 0.5

    def test_two_nodes_hit_endpoints(self):
        feats = build_cluster_features([
            mk_profile(0, schema_score=1.0, log_pi=2.0),
            mk_profile(1, schema_score=4.0, log_pi=-1.0),
        ])
        assert [f.ds for f in feats] == [0.0, 1.0]
        assert [f.pi for f in feats] == [1.0, 0.0]

    def test_three_nodes_linear(self):
        feats = build_cluster_features([
            mk_profile(i, schema_score=float(s), log_pi=0.0) for i, s in enumerate((1, 2, 3))
        ])
        assert [f.ds for f in feats] == [0.0, 0.5, 1.0]


class TestClusterDistance:
    def test_identical_features_zero(self):
        a = mk_feature(0, ds=0.3, pi=0.7, lat=10, lon=20)
        b = mk_feature(1, ds=0.3, pi=0.7, lat=10, lon=20)
        assert cluster_distance(a, b) == 0.0

    def test_hand_weighted_sum(self):
        a = mk_feature(0, ds=0.9, pi=0.5)
        b = mk_feature(1, ds=0.5, pi=0.3)
        assert cluster_distance(a, b, NO_GEO) == pytest.approx(0.3, rel=1e-12)

    def test_pure_geo_scaling(self):
        a = mk_feature(0, lat=0.0, lon=0.0)
        b = mk_feature(1, lat=1.0, lon=0.0)
        d = cluster_distance(a, b, PURE_GEO, geo_scale_km=1000.0)
        assert d == pytest.approx(0.111195, rel=1e-4)

    def test_symmetry(self):
        rng = np.random.default_rng(61)
        for _ in range(100):
            a, b = random_features(rng, 2)
            assert cluster_distance(a, b) == cluster_distance(b, a)

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(67)
        feats = random_features(rng, 12)
        D = distance_matrix(feats)
        for i in range(len(feats)):
            for j in range(len(feats)):
                assert D[i, j] == pytest.approx(cluster_distance(feats[i], feats[j]),
                                                rel=1e-9, abs=1e-12)


class TestFormClusters:
    def test_k_equals_n_gives_singletons(self):
        rng = np.random.default_rng(71)
        feats = random_features(rng, 7)
        assignment = form_clusters(feats, k=7, seed=1)
        assert sorted(len(c.members) for c in assignment.clusters) == [1] * 7
        assert assignment.objective == 0.0

    def test_k_one_gives_single_cluster(self):
        rng = np.random.default_rng(73)
        feats = random_features(rng, 9)
        assignment = form_clusters(feats, k=1, seed=1)
        assert len(assignment.clusters) == 1
        assert sorted(assignment.clusters[0].members) == [f.node_id for f in feats]

    def test_invalid_k(self):
        feats = random_features(np.random.default_rng(79), 5)
        with pytest.raises(InvalidK):
            form_clusters(feats, k=0)
        with pytest.raises(InvalidK):
            form_clusters(feats, k=6)

    def test_two_geographic_blobs_recovered(self):
        rng = np.random.default_rng(83)
        blob_a = [mk_feature(i, lat=40 + float(rng.normal(0, 0.1)),
                             lon=-100 + float(rng.normal(0, 0.1))) for i in range(6)]
        blob_b = [mk_feature(6 + i, lat=40 + float(rng.normal(0, 0.1)),
                             lon=-88 + float(rng.normal(0, 0.1))) for i in range(6)]
        assignment = form_clusters(blob_a + blob_b, k=2, mix=PURE_GEO, seed=5)
        groups = sorted(sorted(c.members) for c in assignment.clusters)
        assert groups == [[0, 1, 2, 3, 4, 5], [6, 7, 8, 9, 10, 11]]
        # and the blob split is the exhaustive optimum
        D = distance_matrix(blob_a + blob_b, PURE_GEO)
        best, _ = best_partition_objective(D.tolist(), 2)
        assert assignment.objective == pytest.approx(best, rel=1e-9)

    def test_partition_validity(self):
        rng = np.random.default_rng(89)
        for trial in range(10):
            n = int(rng.integers(3, 15))
            k = int(rng.integers(1, n + 1))
            feats = random_features(rng, n)
            assignment = form_clusters(feats, k=k, seed=trial)
            membership = assignment.membership()
            assert sorted(membership) == [f.node_id for f in feats]
            assert len(assignment.clusters) == k

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(97)
        feats = random_features(rng, 20)
        a = form_clusters(feats, k=4, seed=9)
        b = form_clusters(feats, k=4, seed=9)
        assert [c.members for c in a.clusters] == [c.members for c in b.clusters]
        assert a.objective == b.objective
        assert a.medoids == b.medoids

    def test_objective_trace_non_increasing(self):
        rng = np.random.default_rng(101)
        for trial in range(10):
            feats = random_features(rng, 18)
            assignment = form_clusters(feats, k=3, seed=trial)
            trace = assignment.objective_trace
            assert trace, "trace must not be empty"
            assert all(trace[i + 1] <= trace[i] + 1e-12 for i in range(len(trace) - 1))
            assert assignment.objective == trace[-1]

    def test_near_optimal_on_small_instances(self):
        rng = np.random.default_rng(103)
        hits = 0
        trials = 40
        for trial in range(trials):
            n = int(rng.integers(5, 11))
            k = int(rng.integers(1, 4))
            feats = random_features(rng, n)
            assignment = form_clusters(feats, k=k, seed=trial)
            D = distance_matrix(feats)
            best, _ = best_partition_objective(D.tolist(), k)
            if assignment.objective <= best * 1.10 + 1e-12:
                hits += 1
        assert hits >= int(trials * 0.95)

    def test_inter_medoid_diagnostic(self):
        rng = np.random.default_rng(107)
        feats = random_features(rng, 12)
        assignment = form_clusters(feats, k=3, seed=2)
        D = distance_matrix(feats)
        assert assignment.min_inter_medoid_distance > 0.0
        assert assignment.min_inter_medoid_distance <= D.max()


class TestDefaultK:
    def test_ceiling_rule(self):
        assert default_k(100) == 10
        assert default_k(101) == 11
        assert default_k(5) == 1
        assert default_k(1) == 1
