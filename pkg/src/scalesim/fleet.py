"""Synthetic device fleet: metrics, locations, profiles, election criteria.

Device characteristics are simulation inputs, not probed hardware. Nodes are
scattered around a handful of regional centers so geographic proximity gives
cluster formation something real to work with, and each node gets the four
election criteria that have no backing metric (battery, reliability, data
representativeness, trust) as seeded scalars in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geo import GeoPoint
from .profiles import (
    DeviceMetrics,
    NodeProfile,
    SchemaDescriptor,
    ScoreWeights,
    combined_metadata_score,
    compute_ability_score,
    dataset_feature_score,
    fleet_metric_ranges,
    min_max_scale,
    operational_efficiency_pi,
)
from .protocol import CRITERIA, DriverCriteria
from .rng import FLEET, substream

# sampling ranges for the synthetic device metrics
_METRIC_RANGES = {
    "computational_power": (1.0, 16.0),
    "energy_efficiency": (0.5, 4.0),
    "latency": (5.0, 120.0),
    "network_bandwidth": (5.0, 200.0),
    "concurrency_level": (1.0, 12.0),
    "cpu_utilization": (0.2, 0.95),
    "energy_consumption": (0.5, 3.0),
    "network_efficiency": (0.5, 0.99),
}

_REGION_LAT = (25.0, 48.0)
_REGION_LON = (-120.0, -70.0)
_JITTER_DEG = 0.3


@dataclass
class Fleet:
    profiles: list[NodeProfile]
    criteria: DriverCriteria


def generate_fleet(
    n_nodes: int,
    seed: int,
    schema: SchemaDescriptor,
    weights: ScoreWeights = ScoreWeights(),
    election_weights: np.ndarray | None = None,
    regions: int = 10,
) -> Fleet:
    """Deterministically synthesize n_nodes profiles plus election criteria.

    All nodes share the given dataset schema (every client holds slices of
    the same table), so their data-similarity scores coincide; clustering is
    then driven by performance and location.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if regions < 1:
        raise ValueError("regions must be >= 1")
    rng = substream(seed, FLEET)
    centers = [
        (rng.uniform(*_REGION_LAT), rng.uniform(*_REGION_LON))
        for _ in range(regions)
    ]

    ds_score = dataset_feature_score(schema)
    meta_score = combined_metadata_score(schema, weights)

    locations: list[GeoPoint] = []
    metrics_list: list[DeviceMetrics] = []
    extra_criteria = np.empty((n_nodes, 4), dtype=np.float64)
    for i in range(n_nodes):
        c_lat, c_lon = centers[int(rng.integers(regions))]
        lat = float(np.clip(c_lat + rng.normal(0.0, _JITTER_DEG), -89.0, 89.0))
        lon = float(np.clip(c_lon + rng.normal(0.0, _JITTER_DEG), -179.0, 180.0))
        locations.append(GeoPoint(lat, lon))
        metrics_list.append(DeviceMetrics(**{
            name: float(rng.uniform(lo, hi)) for name, (lo, hi) in _METRIC_RANGES.items()
        }))
        extra_criteria[i] = rng.uniform(0.0, 1.0, size=4)  # battery, reliability, repr, trust

    ranges = fleet_metric_ranges(metrics_list)
    profiles: list[NodeProfile] = []
    for i, m in enumerate(metrics_list):
        _, _, log_pi = operational_efficiency_pi(m, weights)
        profiles.append(NodeProfile(
            node_id=i,
            schema_score=ds_score,
            metadata_score=meta_score,
            compute_pi=compute_ability_score(m, ranges, weights),
            log_pi=log_pi,
            location=locations[i],
            metrics=m,
        ))

    cp_lo, cp_hi = ranges["computational_power"]
    nb_lo, nb_hi = ranges["network_bandwidth"]
    values = {
        i: np.array([
            min_max_scale(m.computational_power, cp_lo, cp_hi, 0.0, 1.0),
            min_max_scale(m.network_bandwidth, nb_lo, nb_hi, 0.0, 1.0),
            extra_criteria[i, 0],
            extra_criteria[i, 1],
            extra_criteria[i, 2],
            extra_criteria[i, 3],
        ], dtype=np.float64)
        for i, m in enumerate(metrics_list)
    }
    if election_weights is None:
        election_weights = np.full(len(CRITERIA), 1.0 / len(CRITERIA))
    criteria = DriverCriteria(values=values, weights=np.asarray(election_weights, dtype=np.float64))
    return Fleet(profiles=profiles, criteria=criteria)
