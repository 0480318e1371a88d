"""Server-side cluster formation.

Nodes are embedded as (data similarity, performance index, location) features
and partitioned by seeded k-medoids under a weighted composite distance. The
medoid construction keeps cluster centers at real nodes and the whole
procedure is deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidK
from .geo import GeoPoint, equirectangular_distance
from .profiles import NodeProfile, min_max_scale
from .rng import CLUSTERING, substream

MAX_LLOYD_ITERATIONS = 100
DEFAULT_GEO_SCALE_KM = 1000.0


@dataclass(frozen=True)
class MixWeights:
    """Relative weight of the three feature dimensions in the cluster metric."""

    w_ds: float = 0.4
    w_pi: float = 0.2
    w_gp: float = 0.4

    def __post_init__(self) -> None:
        if min(self.w_ds, self.w_pi, self.w_gp) < 0:
            raise ValueError("mix weights must be non-negative")
        total = self.w_ds + self.w_pi + self.w_gp
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"mix weights must sum to 1, got {total}")


@dataclass(frozen=True)
class ClusterFeature:
    node_id: int
    ds: float  # fleet-normalized data-similarity score
    pi: float  # fleet-normalized log performance index
    geo: GeoPoint


@dataclass
class Cluster:
    cluster_id: int
    members: list[int]
    driver: int | None = None


@dataclass
class ClusterAssignment:
    """Partition of the fleet into k clusters plus formation diagnostics."""

    clusters: list[Cluster]
    k: int
    medoids: list[int]  # node ids of the final medoids, cluster order
    objective: float    # total point-to-medoid distance
    objective_trace: list[float] = field(default_factory=list)
    min_inter_medoid_distance: float = math.inf

    def membership(self) -> dict[int, int]:
        """node_id -> cluster_id; asserts every node sits in exactly one cluster."""
        seen: dict[int, int] = {}
        for c in self.clusters:
            if not c.members:
                raise AssertionError(f"cluster {c.cluster_id} is empty")
            for m in c.members:
                if m in seen:
                    raise AssertionError(f"node {m} assigned to two clusters")
                seen[m] = c.cluster_id
        return seen


def build_cluster_features(profiles: Sequence[NodeProfile]) -> list[ClusterFeature]:
    """Min-max normalize the fleet's scores into [0, 1] feature coordinates.

    A fleet-wide constant score maps to 0.5 (degenerate-range midpoint).
    """
    if not profiles:
        raise ValueError("no profiles to cluster")
    ds_vals = [p.schema_score for p in profiles]
    pi_vals = [p.log_pi for p in profiles]
    ds_lo, ds_hi = min(ds_vals), max(ds_vals)
    pi_lo, pi_hi = min(pi_vals), max(pi_vals)
    return [
        ClusterFeature(
            node_id=p.node_id,
            ds=min_max_scale(p.schema_score, ds_lo, ds_hi, 0.0, 1.0),
            pi=min_max_scale(p.log_pi, pi_lo, pi_hi, 0.0, 1.0),
            geo=p.location,
        )
        for p in profiles
    ]


def cluster_distance(
    a: ClusterFeature,
    b: ClusterFeature,
    mix: MixWeights = MixWeights(),
    geo_scale_km: float = DEFAULT_GEO_SCALE_KM,
) -> float:
    """Weighted composite distance between two feature vectors.

    Geographic distance is divided by geo_scale_km so a continental
    separation weighs about as much as a full-range score difference.
    """
    return (
        mix.w_ds * abs(a.ds - b.ds)
        + mix.w_pi * abs(a.pi - b.pi)
        + mix.w_gp * equirectangular_distance(a.geo, b.geo) / geo_scale_km
    )


def distance_matrix(
    features: Sequence[ClusterFeature],
    mix: MixWeights = MixWeights(),
    geo_scale_km: float = DEFAULT_GEO_SCALE_KM,
) -> np.ndarray:
    """Full pairwise cluster_distance matrix (kernel-accelerated)."""
    ds = np.array([f.ds for f in features], dtype=np.float64)
    pi = np.array([f.pi for f in features], dtype=np.float64)
    lat = np.radians(np.array([f.geo.lat_deg for f in features], dtype=np.float64))
    lon = np.radians(np.array([f.geo.lon_deg for f in features], dtype=np.float64))
    return kernels.mixed_distance_matrix(ds, pi, lat, lon, mix.w_ds, mix.w_pi, mix.w_gp, geo_scale_km)


def _kmeanspp_init(D: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    n = D.shape[0]
    medoids = [int(rng.integers(n))]
    while len(medoids) < k:
        d2 = np.min(D[:, medoids], axis=1) ** 2
        total = float(d2.sum())
        if total <= 0.0:
            # remaining points coincide with a medoid; take the lowest fresh index
            for i in range(n):
                if i not in medoids:
                    medoids.append(i)
                    break
            continue
        medoids.append(int(rng.choice(n, p=d2 / total)))
    return medoids


def _fix_empty_clusters(D: np.ndarray, assign: np.ndarray, medoids: list[int]) -> np.ndarray:
    """Relocate the medoid of any empty cluster to the current farthest point."""
    k = len(medoids)
    for _ in range(k):
        counts = np.bincount(assign, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            break
        c = int(empties[0])
        point_cost = D[np.arange(D.shape[0]), np.asarray(medoids)[assign]]
        farthest = int(np.argmax(point_cost))
        medoids[c] = farthest
        assign = np.argmin(D[:, medoids], axis=1)
        assign[farthest] = c  # claim it even when tied with another zero-distance medoid
    return assign


def _update_medoids(D: np.ndarray, assign: np.ndarray, k: int) -> list[int]:
    new: list[int] = []
    for c in range(k):
        members = np.flatnonzero(assign == c)
        sub = D[np.ix_(members, members)]
        new.append(int(members[int(np.argmin(sub.sum(axis=0)))]))
    return new


def _lloyd(D: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, list[int], float, list[float]]:
    n = D.shape[0]
    medoids = sorted(_kmeanspp_init(D, k, rng))
    trace: list[float] = []
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(MAX_LLOYD_ITERATIONS):
        assign = np.argmin(D[:, medoids], axis=1)
        assign = _fix_empty_clusters(D, assign, medoids)
        trace.append(float(D[np.arange(n), np.asarray(medoids)[assign]].sum()))
        new_medoids = sorted(_update_medoids(D, assign, k))
        if new_medoids == medoids:
            break
        medoids = new_medoids
    return assign, medoids, trace[-1], trace


def form_clusters(
    features: Sequence[ClusterFeature],
    k: int,
    mix: MixWeights = MixWeights(),
    seed: int = 0,
    geo_scale_km: float = DEFAULT_GEO_SCALE_KM,
    n_init: int = 4,
) -> ClusterAssignment:
    """Partition the fleet into k clusters by seeded k-medoids.

    Runs n_init seeded k-means++ style initializations, iterates each to a
    fixed point (or 100 iterations) with empty clusters reseeded from the
    farthest point, and keeps the lowest-objective result. Deterministic for
    fixed (features, k, mix, seed).
    """
    n = len(features)
    if k < 1 or k > n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    D = distance_matrix(features, mix, geo_scale_km)

    best: tuple[float, int, np.ndarray, list[int], list[float]] | None = None
    for init in range(max(1, n_init)):
        rng = substream(seed, CLUSTERING, init)
        assign, medoids, obj, trace = _lloyd(D, k, rng)
        if best is None or obj < best[0]:
            best = (obj, init, assign, medoids, trace)
    assert best is not None
    obj, _, assign, medoids, trace = best

    groups: list[list[int]] = [[] for _ in range(k)]
    node_ids = [f.node_id for f in features]
    for idx, c in enumerate(assign):
        groups[int(c)].append(node_ids[idx])
    # stable public labeling: clusters ordered by their smallest member id
    order = sorted(range(k), key=lambda c: min(groups[c]))
    clusters = [
        Cluster(cluster_id=cid, members=sorted(groups[c]), driver=None)
        for cid, c in enumerate(order)
    ]
    ordered_medoids = [node_ids[medoids[c]] for c in order]

    min_inter = math.inf
    for i in range(k):
        for j in range(i + 1, k):
            min_inter = min(min_inter, float(D[medoids[i], medoids[j]]))

    return ClusterAssignment(
        clusters=clusters,
        k=k,
        medoids=ordered_medoids,
        objective=obj,
        objective_trace=trace,
        min_inter_medoid_distance=min_inter,
    )


def default_k(n_nodes: int) -> int:
    """Default cluster count: one cluster per ten nodes, rounded up."""
    return max(1, math.ceil(n_nodes / 10))
