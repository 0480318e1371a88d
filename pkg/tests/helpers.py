"""Shared test utilities: independent oracles and a config writer."""

from __future__ import annotations

import math
from functools import lru_cache
from pathlib import Path

EARTH_RADIUS_KM = 6371.0


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance oracle, independent of the package's geo math."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


@lru_cache(maxsize=None)
def partitions_into(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All set partitions of range(n) into exactly k non-empty blocks, as
    restricted-growth assignment tuples."""
    results: list[tuple[int, ...]] = []
    assign = [0] * n

    def rec(i: int, used: int) -> None:
        if n - i < k - used:
            return
        if i == n:
            if used == k:
                results.append(tuple(assign))
            return
        for b in range(used):
            assign[i] = b
            rec(i + 1, used)
        if used < k:
            assign[i] = used
            rec(i + 1, used + 1)

    rec(0, 0)
    return tuple(results)


def partition_objective(D: list[list[float]], assign: tuple[int, ...], k: int) -> float:
    """Sum over blocks of the best in-block medoid cost."""
    total = 0.0
    for c in range(k):
        block = [i for i, a in enumerate(assign) if a == c]
        total += min(sum(D[i][m] for i in block) for m in block)
    return total


def best_partition_objective(D, k: int) -> tuple[float, tuple[int, ...]]:
    """Exhaustive optimum over every k-block partition."""
    rows = [list(map(float, row)) for row in D]
    n = len(rows)
    best = math.inf
    best_assign: tuple[int, ...] = ()
    for assign in partitions_into(n, k):
        obj = partition_objective(rows, assign, k)
        if obj < best:
            best, best_assign = obj, assign
    return best, best_assign


def config_text(
    dataset: str,
    nodes: int,
    rounds: int,
    *,
    partition: str = "iid",
    seed: int = 0,
    extra: dict[str, dict[str, str]] | None = None,
) -> str:
    """Minimal INI config; `extra` merges {section: {key: value}} on top."""
    sections: dict[str, dict[str, str]] = {
        "run": {
            "dataset": dataset,
            "nodes": str(nodes),
            "rounds": str(rounds),
            "partition": partition,
            "seed": str(seed),
        },
    }
    for section, values in (extra or {}).items():
        sections.setdefault(section, {}).update({k: str(v) for k, v in values.items()})
    lines = []
    for section, values in sections.items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in values.items())
        lines.append("")
    return "\n".join(lines)


def write_config(path: Path, dataset: str, nodes: int, rounds: int, **kwargs) -> Path:
    path.write_text(config_text(dataset, nodes, rounds, **kwargs), encoding="utf-8")
    return path
