"""Run configuration: one INI-style file with sections, flag-overridable.

Relative dataset paths resolve against the config file's directory so runs
work from any working directory. `collect_violations` re-checks every
constraint and returns one message per problem; `load_config` raises
ConfigError on the first stage that cannot produce a usable RunConfig.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import MixWeights, default_k
from .data import PartitionMode
from .errors import ConfigError
from .messages import CostModel
from .model import TrainConfig
from .protocol import CRITERIA, CheckpointPolicy
from .simnet import FaultAction, FaultEntry, FaultPlan, SimParams

_SECTIONS: dict[str, tuple[str, ...]] = {
    "run": ("dataset", "nodes", "rounds", "partition", "test_fraction", "seed", "output_dir"),
    "clustering": ("k", "w_ds", "w_pi", "w_gp", "geo_scale_km", "regions"),
    "protocol": ("k_peers", "checkpoint_min_improvement", "checkpoint_max_gap",
                 "suspect_threshold", "dead_threshold"),
    "election": CRITERIA,
    "training": ("epochs", "learning_rate", "l2_lambda", "batch_size"),
    "cost": ("base_latency_ms", "bandwidth_bytes_per_ms", "energy_nj_per_byte",
             "energy_fixed_nj", "server_channel_multiplier"),
    "faults": ("plan",),
}

_DEFAULTS: dict[tuple[str, str], str] = {
    ("run", "partition"): "iid",
    ("run", "test_fraction"): "0.2",
    ("run", "seed"): "0",
    ("run", "output_dir"): "",
    ("clustering", "k"): "",
    ("clustering", "w_ds"): "0.4",
    ("clustering", "w_pi"): "0.2",
    ("clustering", "w_gp"): "0.4",
    ("clustering", "geo_scale_km"): "1000",
    ("clustering", "regions"): "10",
    ("protocol", "k_peers"): "3",
    ("protocol", "checkpoint_min_improvement"): "0.005",
    ("protocol", "checkpoint_max_gap"): "5",
    ("protocol", "suspect_threshold"): "2",
    ("protocol", "dead_threshold"): "3",
    ("training", "epochs"): "5",
    ("training", "learning_rate"): "0.01",
    ("training", "l2_lambda"): "0.001",
    ("training", "batch_size"): "16",
    ("cost", "base_latency_ms"): "2.0",
    ("cost", "bandwidth_bytes_per_ms"): "1.25e6",
    ("cost", "energy_nj_per_byte"): "50",
    ("cost", "energy_fixed_nj"): "1000",
    ("cost", "server_channel_multiplier"): "10",
    ("faults", "plan"): "",
}
for _c in CRITERIA:
    _DEFAULTS[("election", _c)] = repr(1.0 / len(CRITERIA))

_WEIGHT_SUM_TOL = 1e-6


@dataclass
class RunConfig:
    """Fully validated run description."""

    dataset: Path
    nodes: int
    rounds: int
    partition: PartitionMode
    test_fraction: float
    seed: int
    output_dir: str
    k: int
    mix: MixWeights
    geo_scale_km: float
    regions: int
    k_peers: int
    checkpoint: CheckpointPolicy
    suspect_threshold: int
    dead_threshold: int
    election_weights: np.ndarray
    train: TrainConfig
    cost: CostModel
    faults: FaultPlan

    def sim_params(self) -> SimParams:
        return SimParams(
            rounds=self.rounds,
            k=self.k,
            mix=self.mix,
            geo_scale_km=self.geo_scale_km,
            k_peers=self.k_peers,
            checkpoint=self.checkpoint,
            suspect_threshold=self.suspect_threshold,
            dead_threshold=self.dead_threshold,
            train=self.train,
            cost=self.cost,
            faults=self.faults,
            seed=self.seed,
        )

    def echo(self) -> dict:
        """Config content embedded in reports (output location excluded)."""
        return {
            "dataset": str(self.dataset),
            "nodes": self.nodes,
            "rounds": self.rounds,
            "partition": self.partition.value,
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "clustering": {
                "k": self.k,
                "w_ds": self.mix.w_ds, "w_pi": self.mix.w_pi, "w_gp": self.mix.w_gp,
                "geo_scale_km": self.geo_scale_km, "regions": self.regions,
            },
            "protocol": {
                "k_peers": self.k_peers,
                "checkpoint_min_improvement": self.checkpoint.min_improvement,
                "checkpoint_max_gap": self.checkpoint.max_gap,
                "suspect_threshold": self.suspect_threshold,
                "dead_threshold": self.dead_threshold,
            },
            "election": {name: float(w) for name, w in zip(CRITERIA, self.election_weights)},
            "training": {
                "epochs": self.train.epochs, "learning_rate": self.train.learning_rate,
                "l2_lambda": self.train.l2_lambda, "batch_size": self.train.batch_size,
            },
            "cost": {
                "base_latency_ms": self.cost.base_latency_ms,
                "bandwidth_bytes_per_ms": self.cost.bandwidth_bytes_per_ms,
                "energy_nj_per_byte": self.cost.energy_nj_per_byte,
                "energy_fixed_nj": self.cost.energy_fixed_nj,
                "server_channel_multiplier": self.cost.server_channel_multiplier,
            },
            "faults": [
                {"round": e.round_no, "node": e.node_id, "action": e.action.value}
                for e in self.faults.entries
            ],
        }


def _read_raw(path: str | Path, overrides: dict[tuple[str, str], str] | None = None
              ) -> tuple[dict[tuple[str, str], str], list[str]]:
    problems: list[str] = []
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    raw = dict(_DEFAULTS)
    for section in parser.sections():
        if section not in _SECTIONS:
            problems.append(f"unknown section [{section}]")
            continue
        for key, value in parser.items(section):
            if key not in _SECTIONS[section]:
                problems.append(f"unknown key {section}.{key}")
            else:
                raw[(section, key)] = value.strip()
    for (section, key), value in (overrides or {}).items():
        raw[(section, key)] = value
    return raw, problems


def _parse_faults(text: str, problems: list[str]) -> FaultPlan:
    entries: list[FaultEntry] = []
    for token in text.split():
        parts = token.split(":")
        if len(parts) != 3:
            problems.append(f"faults.plan entry {token!r} is not round:node:action")
            continue
        try:
            rnd, nid = int(parts[0]), int(parts[1])
            action = FaultAction(parts[2].lower())
        except ValueError:
            problems.append(f"faults.plan entry {token!r} has a bad field")
            continue
        entries.append(FaultEntry(rnd, nid, action))
    try:
        return FaultPlan(tuple(entries))
    except ValueError as exc:
        problems.append(f"faults.plan: {exc}")
        return FaultPlan()


def _collect(raw: dict[tuple[str, str], str]) -> tuple[RunConfig | None, list[str]]:
    problems: list[str] = []

    def get(section: str, key: str, conv, check=None, describe: str = "") -> object | None:
        text = raw[(section, key)]
        try:
            value = conv(text)
        except (TypeError, ValueError):
            problems.append(f"{section}.{key}: cannot parse {text!r}")
            return None
        if check is not None and not check(value):
            problems.append(f"{section}.{key}: {describe} (got {value})")
            return None
        return value

    dataset = get("run", "dataset", str, lambda s: bool(s), "dataset path is required")
    nodes = get("run", "nodes", int, lambda v: v >= 1, "must be >= 1")
    rounds = get("run", "rounds", int, lambda v: v >= 0, "must be >= 0")
    part = get("run", "partition", lambda s: PartitionMode(s.lower()))
    test_fraction = get("run", "test_fraction", float, lambda v: 0.0 <= v < 1.0,
                        "must be in [0, 1)")
    seed = get("run", "seed", int, lambda v: v >= 0, "must be >= 0")
    output_dir = raw[("run", "output_dir")]

    k_text = raw[("clustering", "k")]
    k = None
    if k_text:
        k = get("clustering", "k", int, lambda v: v >= 1, "must be >= 1")
    elif nodes is not None:
        k = default_k(nodes)
    if k is not None and nodes is not None and k > nodes:
        problems.append(f"clustering.k: must be <= nodes ({nodes}) (got {k})")
    w_ds = get("clustering", "w_ds", float, lambda v: v >= 0, "must be >= 0")
    w_pi = get("clustering", "w_pi", float, lambda v: v >= 0, "must be >= 0")
    w_gp = get("clustering", "w_gp", float, lambda v: v >= 0, "must be >= 0")
    mix = None
    if None not in (w_ds, w_pi, w_gp):
        if abs(w_ds + w_pi + w_gp - 1.0) > _WEIGHT_SUM_TOL:
            problems.append(
                f"clustering.w_ds/w_pi/w_gp: must sum to 1 (got {w_ds + w_pi + w_gp})")
        else:
            mix = MixWeights(w_ds, w_pi, w_gp)
    geo_scale = get("clustering", "geo_scale_km", float, lambda v: v > 0, "must be > 0")
    regions = get("clustering", "regions", int, lambda v: v >= 1, "must be >= 1")

    k_peers = get("protocol", "k_peers", int, lambda v: v >= 0, "must be >= 0")
    eps = get("protocol", "checkpoint_min_improvement", float, lambda v: v >= 0, "must be >= 0")
    gap = get("protocol", "checkpoint_max_gap", int, lambda v: v >= 1, "must be >= 1")
    suspect = get("protocol", "suspect_threshold", int, lambda v: v >= 1, "must be >= 1")
    dead = get("protocol", "dead_threshold", int, lambda v: v >= 1, "must be >= 1")
    if None not in (suspect, dead) and suspect >= dead:
        problems.append(
            f"protocol.suspect_threshold: must be < dead_threshold (got {suspect} >= {dead})")

    election = []
    for name in CRITERIA:
        w = get("election", name, float, lambda v: v >= 0, "must be >= 0")
        election.append(w)
    weights = None
    if None not in election:
        total = sum(election)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            problems.append(f"election weights: must sum to 1 (got {total})")
        else:
            weights = np.array(election) / total

    epochs = get("training", "epochs", int, lambda v: v >= 1, "must be >= 1")
    lr = get("training", "learning_rate", float, lambda v: v > 0, "must be > 0")
    l2 = get("training", "l2_lambda", float, lambda v: v >= 0, "must be >= 0")
    batch = get("training", "batch_size", int, lambda v: v >= 1, "must be >= 1")

    base_lat = get("cost", "base_latency_ms", float, lambda v: v >= 0, "must be >= 0")
    bandwidth = get("cost", "bandwidth_bytes_per_ms", float, lambda v: v > 0, "must be > 0")
    nj_byte = get("cost", "energy_nj_per_byte", float, lambda v: v >= 0, "must be >= 0")
    nj_fixed = get("cost", "energy_fixed_nj", float, lambda v: v >= 0, "must be >= 0")
    mult = get("cost", "server_channel_multiplier", float, lambda v: v > 0, "must be > 0")

    faults = _parse_faults(raw[("faults", "plan")], problems)
    if nodes is not None:
        for e in faults.entries:
            if not 0 <= e.node_id < nodes:
                problems.append(f"faults.plan: node {e.node_id} outside [0, {nodes})")

    if problems:
        return None, problems

    return RunConfig(
        dataset=Path(dataset),
        nodes=nodes,
        rounds=rounds,
        partition=part,
        test_fraction=test_fraction,
        seed=seed,
        output_dir=output_dir,
        k=k,
        mix=mix,
        geo_scale_km=geo_scale,
        regions=regions,
        k_peers=k_peers,
        checkpoint=CheckpointPolicy(min_improvement=eps, max_gap=gap),
        suspect_threshold=suspect,
        dead_threshold=dead,
        election_weights=weights,
        train=TrainConfig(epochs=epochs, learning_rate=lr, l2_lambda=l2, batch_size=batch),
        cost=CostModel(base_latency_ms=base_lat, bandwidth_bytes_per_ms=bandwidth,
                       energy_nj_per_byte=nj_byte, energy_fixed_nj=nj_fixed,
                       server_channel_multiplier=mult),
        faults=faults,
    ), []


def _resolve_dataset(cfg: RunConfig, config_path: Path) -> RunConfig:
    if not cfg.dataset.is_absolute():
        cfg.dataset = (config_path.parent / cfg.dataset).resolve()
    return cfg


def load_config(path: str | Path,
                overrides: dict[tuple[str, str], str] | None = None) -> RunConfig:
    """Parse and validate a config file, raising ConfigError on any problem."""
    raw, problems = _read_raw(path, overrides)
    cfg, more = _collect(raw)
    problems += more
    if problems or cfg is None:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    return _resolve_dataset(cfg, Path(path))


def collect_violations(path: str | Path,
                       overrides: dict[tuple[str, str], str] | None = None) -> list[str]:
    """All constraint violations in the file, one message per problem."""
    try:
        raw, problems = _read_raw(path, overrides)
    except ConfigError as exc:
        return [str(exc)]
    _, more = _collect(raw)
    return problems + more
