"""Command-line front end: run experiments, validate configs, re-render reports.

Exit codes: 0 success, 1 configuration error, 2 dataset error, 3 runtime
divergence during training.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import RunConfig, collect_violations, load_config
from .data import load_wdbc, partition
from .errors import ConfigError, DatasetError, NumericalDivergence
from .fleet import generate_fleet
from .profiles import ColumnType, SchemaDescriptor
from .report import TABLE_COLUMNS, build_table, render_report_json, render_table_csv
from .simnet import form_fleet_clusters, run_baseline_fl, run_scale

OUTPUT_DIR_ENV = "SCALESIM_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATASET = 2
EXIT_DIVERGENCE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scale-sim",
        description="Clustered federated-learning simulator with message accounting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment and write report files")
    run_p.add_argument("--config", required=True, help="path to the INI run config")
    run_p.add_argument("--mode", choices=("scale", "baseline", "both"), default="both")
    run_p.add_argument("--seed", type=int, help="override [run] seed")
    run_p.add_argument("--nodes", type=int, help="override [run] nodes")
    run_p.add_argument("--rounds", type=int, help="override [run] rounds")
    run_p.add_argument("--partition", choices=("iid", "noniid"), help="override [run] partition")
    run_p.add_argument("--dataset", help="override [run] dataset path")
    run_p.add_argument("--output-dir", help="where report.json and table1.csv go")

    val_p = sub.add_parser("validate", help="check a config file, printing every violation")
    val_p.add_argument("--config", required=True)

    rep_p = sub.add_parser("report", help="re-render table1.csv from a saved report.json")
    rep_p.add_argument("--json", required=True, help="path to a saved report.json")
    rep_p.add_argument("--output", help="CSV destination (default: alongside the JSON)")
    return parser


def _overrides(args: argparse.Namespace) -> dict[tuple[str, str], str]:
    out: dict[tuple[str, str], str] = {}
    if args.seed is not None:
        out[("run", "seed")] = str(args.seed)
    if args.nodes is not None:
        out[("run", "nodes")] = str(args.nodes)
    if args.rounds is not None:
        out[("run", "rounds")] = str(args.rounds)
    if args.partition is not None:
        out[("run", "partition")] = args.partition
    if args.dataset is not None:
        out[("run", "dataset")] = str(Path(args.dataset).resolve())
    return out


def _output_dir(args: argparse.Namespace, cfg: RunConfig) -> Path:
    if args.output_dir:
        return Path(args.output_dir)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV, "out"))


def _wdbc_schema(n_features: int) -> SchemaDescriptor:
    from .data import WDBC_FEATURE_NAMES

    names = WDBC_FEATURE_NAMES[:n_features]
    return SchemaDescriptor([(name, ColumnType.NUMERIC) for name in names])


def _summary_line(report) -> str:
    acc = "n/a" if report.totals.accuracy is None else f"{report.totals.accuracy:.4f}"
    return (f"{report.mode}: nodes={report.totals.nodes} rounds={report.totals.rounds} "
            f"global_updates={report.totals.global_uploads} acc={acc} "
            f"latency_ms={report.totals.total_latency_ms:.1f} "
            f"energy_mj={report.totals.total_energy_nj / 1e9:.3f}")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if not cfg.dataset.is_file():
            raise DatasetError(f"dataset file not found: {cfg.dataset}")
        examples = load_wdbc(cfg.dataset)
        partitions = partition(examples, cfg.nodes, cfg.partition,
                               cfg.test_fraction, cfg.seed)
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET

    params = cfg.sim_params()
    schema = _wdbc_schema(examples[0].features.shape[0])
    fleet = generate_fleet(cfg.nodes, cfg.seed, schema,
                           election_weights=cfg.election_weights, regions=cfg.regions)
    assignment = form_fleet_clusters(fleet, params)

    scale_report = baseline_report = None
    try:
        if args.mode in ("scale", "both"):
            scale_report, _ = run_scale(partitions, fleet, params, assignment=assignment)
        if args.mode in ("baseline", "both"):
            baseline_report, _ = run_baseline_fl(partitions, params, grouping=assignment)
    except NumericalDivergence as exc:
        print(f"runtime divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE

    out_dir = _output_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_text = render_report_json(mode=args.mode, seed=cfg.seed, config_echo=cfg.echo(),
                                   scale=scale_report, baseline=baseline_report)
    (out_dir / "report.json").write_text(json_text, encoding="utf-8")
    csv_text = render_table_csv(build_table(scale_report, baseline_report))
    (out_dir / "table1.csv").write_text(csv_text, encoding="utf-8")

    for report in (baseline_report, scale_report):
        if report is not None:
            print(_summary_line(report))
    if scale_report and baseline_report and scale_report.totals.global_uploads:
        ratio = baseline_report.totals.global_uploads / scale_report.totals.global_uploads
        print(f"communication reduction: {ratio:.1f}x fewer global updates")
    print(f"wrote {out_dir / 'report.json'} and {out_dir / 'table1.csv'}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        violations = collect_violations(args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    for v in violations:
        print(v)
    if violations:
        print(f"{len(violations)} violation(s)")
        return EXIT_CONFIG
    print("config ok")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    src = Path(args.json)
    try:
        doc = json.loads(src.read_text(encoding="utf-8"))
        rows = doc["table"]
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.output) if args.output else src.with_name("table1.csv")
    csv_rows = []
    for row in rows:
        csv_rows.append({key: row.get(key, "") for key in TABLE_COLUMNS})
    out.write_text(render_table_csv(csv_rows), encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_report(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
