"""Per-node scoring used by the global server for clustering and election.

Covers the schema-based data-similarity fingerprint (base-35 positional
attribute scores, combined metadata score), min-max scaling, and the two
device performance indices: the compute-ability score over fleet-scaled
metrics and the operational-efficiency index built from reciprocals of the
weighted resource terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import EmptyAfterCanonicalization, InvalidSymbol, NonPositiveInput
from .geo import GeoPoint

SCHEMA_BASE = 35
MAX_SYMBOLS = 7

# metrics entering the compute-ability score, in weight order
COMPUTE_METRICS = (
    "computational_power",
    "energy_efficiency",
    "latency",
    "network_bandwidth",
    "concurrency_level",
)


class ColumnType(Enum):
    NUMERIC = 0
    CATEGORICAL = 1
    TEXT = 2


def _symbol_value(ch: str) -> int:
    if "A" <= ch <= "Z":
        return ord(ch) - ord("A")
    if "0" <= ch <= "8":
        return 26 + ord(ch) - ord("0")
    if ch == "9":
        # folded onto '8' so every symbol value stays below the base and
        # positional encoding of letter-only names stays collision-free
        return 34
    raise InvalidSymbol(f"no value assigned to character {ch!r}")


def canonicalize_attribute(name: str) -> str:
    """Uppercase, drop everything outside A-Z/0-9, keep the last 7 symbols."""
    if not name:
        raise EmptyAfterCanonicalization("attribute name is empty")
    kept = [c for c in name.upper() if "A" <= c <= "Z" or "0" <= c <= "9"]
    if not kept:
        raise EmptyAfterCanonicalization(f"attribute {name!r} has no scorable characters")
    return "".join(kept[-MAX_SYMBOLS:])


def schema_score(name: str) -> int:
    """Base-35 positional score of an already-canonical attribute name.

    For symbols v0..v(n-1) left to right the score is sum(v_k * 35^(n-1-k)).
    Equal names always give equal scores; distinct same-length letter names
    give distinct scores.
    """
    if not 1 <= len(name) <= MAX_SYMBOLS:
        raise ValueError(f"expected a canonical name of 1..{MAX_SYMBOLS} symbols, got {name!r}")
    score = 0
    for ch in name:
        score = score * SCHEMA_BASE + _symbol_value(ch)
    return score


@dataclass
class SchemaDescriptor:
    """Column metadata of one node's local dataset."""

    columns: tuple[tuple[str, ColumnType], ...]

    def __init__(self, columns: Iterable[tuple[str, ColumnType]]):
        self.columns = tuple((str(n), t) for n, t in columns)
        names = [n for n, _ in self.columns]
        if not names:
            raise ValueError("schema has no columns")
        if len(set(names)) != len(names):
            raise ValueError("duplicate column names in schema")
        for n, _ in self.columns:
            canonicalize_attribute(n)


def dataset_feature_score(schema: SchemaDescriptor) -> float:
    """Mean positional score over the schema's canonical column names.

    Names are ranked alphabetically before scoring, so the result is
    invariant to the order columns arrive in.
    """
    names = sorted(canonicalize_attribute(n) for n, _ in schema.columns)
    scores = [schema_score(n) for n in names]
    return sum(scores) / len(scores)


def combined_metadata_score(schema: SchemaDescriptor, weights: "ScoreWeights") -> float:
    """Weighted blend of the sorted-column score and the mean dtype code."""
    c_sorted = dataset_feature_score(schema)
    c_type = sum(t.value for _, t in schema.columns) / len(schema.columns)
    return weights.sorted_weight * c_sorted + weights.type_weight * c_type


def min_max_scale(x: float, x_min: float, x_max: float, a: float = 0.0, b: float = 1.0) -> float:
    """Affine map of x from [x_min, x_max] onto [a, b].

    A degenerate range (x_max == x_min) maps everything to the midpoint
    (a + b) / 2 instead of dividing by zero.
    """
    if a >= b:
        raise ValueError(f"target range must satisfy a < b, got [{a}, {b}]")
    if x_max == x_min:
        return 0.5 * (a + b)
    return a + (x - x_min) * (b - a) / (x_max - x_min)


@dataclass(frozen=True)
class DeviceMetrics:
    """Synthetic device characteristics of one client node.

    All fields strictly positive; cpu_utilization and network_efficiency are
    ratios in (0, 1].
    """

    computational_power: float  # abstract compute units
    energy_efficiency: float    # work per energy unit
    latency: float              # ms
    network_bandwidth: float    # Mbps
    concurrency_level: float    # simultaneous tasks
    cpu_utilization: float
    energy_consumption: float   # energy units per round
    network_efficiency: float

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")
        for name in ("cpu_utilization", "network_efficiency"):
            if getattr(self, name) > 1.0:
                raise ValueError(f"{name} must be <= 1")


def _normalized_group(values: Sequence[float], label: str) -> tuple[float, ...]:
    vals = [float(v) for v in values]
    if any(v < 0 for v in vals):
        raise ValueError(f"{label} weights must be non-negative")
    total = sum(vals)
    if total <= 0:
        raise ValueError(f"{label} weights sum to zero")
    return tuple(v / total for v in vals)


@dataclass(frozen=True)
class ScoreWeights:
    """Weight groups for the metadata score and the two performance indices.

    Each group is normalized to sum to 1 at construction.
    """

    sorted_weight: float = 0.7
    type_weight: float = 0.3
    compute_weights: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    efficiency_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        sw, tw = _normalized_group((self.sorted_weight, self.type_weight), "metadata")
        object.__setattr__(self, "sorted_weight", sw)
        object.__setattr__(self, "type_weight", tw)
        cw = _normalized_group(self.compute_weights, "compute")
        if len(cw) != 5:
            raise ValueError("compute_weights needs exactly 5 entries")
        object.__setattr__(self, "compute_weights", cw)
        ew = _normalized_group(self.efficiency_weights, "efficiency")
        if len(ew) != 4:
            raise ValueError("efficiency_weights needs exactly 4 entries")
        object.__setattr__(self, "efficiency_weights", ew)


def fleet_metric_ranges(metrics: Iterable[DeviceMetrics]) -> dict[str, tuple[float, float]]:
    """(min, max) per compute metric across the fleet."""
    rows = list(metrics)
    if not rows:
        raise ValueError("empty fleet")
    return {
        name: (min(getattr(m, name) for m in rows), max(getattr(m, name) for m in rows))
        for name in COMPUTE_METRICS
    }


def compute_ability_score(
    metrics: DeviceMetrics,
    fleet_ranges: Mapping[str, tuple[float, float]],
    weights: ScoreWeights,
) -> float:
    """Weighted sum of the five fleet-scaled compute metrics, in [0, 1].

    Latency is inverted after scaling so that lower latency reads as higher
    suitability.
    """
    total = 0.0
    for name, w in zip(COMPUTE_METRICS, weights.compute_weights):
        lo, hi = fleet_ranges[name]
        s = min_max_scale(getattr(metrics, name), lo, hi, 0.0, 1.0)
        if name == "latency":
            s = 1.0 - s
        total += w * s
    return total


def operational_efficiency_pi(metrics, weights: ScoreWeights) -> tuple[float, float, float]:
    """(psi, local_pi, log_pi) from the four weighted resource terms.

    psi sums the reciprocals of cpu_utilization, energy_consumption,
    network_efficiency, and energy_efficiency, each multiplied by its weight;
    local_pi = 4 / psi is their harmonic mean and log_pi its natural log.
    The four inputs must be pre-normalized to comparable scales; the function
    only requires them (and the weights) to be strictly positive.
    """
    w1, w2, w3, w4 = weights.efficiency_weights
    terms = (
        metrics.cpu_utilization * w1,
        metrics.energy_consumption * w2,
        metrics.network_efficiency * w3,
        metrics.energy_efficiency * w4,
    )
    if any(t <= 0 for t in terms):
        raise NonPositiveInput(f"all weighted efficiency terms must be > 0, got {terms}")
    psi = sum(1.0 / t for t in terms)
    local_pi = 4.0 / psi
    return psi, local_pi, math.log(local_pi)


@dataclass(frozen=True)
class NodeProfile:
    """Everything one node reports to the global server before clustering."""

    node_id: int
    schema_score: float    # dataset feature score of the node's schema
    metadata_score: float  # combined metadata score
    compute_pi: float      # fleet-scaled compute-ability score
    log_pi: float          # log of the operational-efficiency index
    location: GeoPoint
    metrics: DeviceMetrics
