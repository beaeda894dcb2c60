"""Command-line interface: generate | train | eval | experiment | report.

Every subcommand is deterministic given its flags; all randomness flows from
an explicit --seed or --master-seed. The effective configuration is echoed
as a JSON line for reproducibility. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

from pathbench import harness
from pathbench.composer import textio
from pathbench.composer.paths import Dataset, GenConfig, generate_dataset
from pathbench.networks import base as networks_base
from pathbench.numerics import Rng, derive_seed


class UsageError(Exception):
    """Bad flag values or missing inputs; exits with status 2."""


def _echo_config(name: str, config: dict):
    print(f"config {name}: " + json.dumps(config, sort_keys=True))


def _ensure_out_dir(args) -> str:
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _load_dataset(path: str) -> Dataset:
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path) as handle:
        text = handle.read()
    if text.lstrip().startswith("{"):
        return textio.parse_json(text)
    return textio.parse(text)


def _gen_config_from_args(args) -> GenConfig:
    try:
        return GenConfig(
            seed=args.seed,
            base_length=args.base_length,
            num_modules=args.modules,
            module_length_min=args.module_min,
            module_length_max=args.module_max,
            value_alphabet=args.alphabet,
            tests_per_type=args.tests_per_type,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    config = _gen_config_from_args(args)
    _echo_config("generate", dataclasses.asdict(config))
    dataset = generate_dataset(config)
    out_dir = _ensure_out_dir(args)
    text_path = os.path.join(out_dir, "dataset.txt")
    json_path = os.path.join(out_dir, "dataset.json")
    with open(text_path, "w") as handle:
        handle.write(textio.serialize(dataset))
    with open(json_path, "w") as handle:
        handle.write(textio.serialize_json(dataset))
    lengths = [len(m) for m in dataset.modules]
    print(
        f"wrote {text_path} and {json_path}: base length {len(dataset.base)}, "
        f"{len(dataset.modules)} modules (lengths {lengths}), {len(dataset.test)} test paths"
    )
    return 0


def cmd_train(args) -> int:
    dataset = _load_dataset(args.data)
    config = dataset.config
    spec = harness.model_spec_for(args.network, config, skew=args.skew)
    _echo_config(
        "train",
        {
            "network": args.network,
            "regime": args.regime,
            "epochs": args.epochs,
            "seed": args.seed,
            "skew": args.skew,
            "data": args.data,
            "gen_config": dataclasses.asdict(config),
        },
    )
    model = networks_base.build(spec, Rng(derive_seed(args.seed, 1)))
    train = harness.training_paths(dataset, args.regime)
    batch = harness.encode_training_batch(model, train, config)

    out_dir = _ensure_out_dir(args)
    log_path = os.path.join(out_dir, "training_log.csv")
    checkpoint_path = os.path.join(out_dir, "checkpoint.json")
    with open(log_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", "loss", "train_error"])
        for epoch in range(args.epochs):
            loss_value = model.train_step(batch)
            writer.writerow([epoch, repr(loss_value), repr(harness.error_rate(model, train))])
    networks_base.save_model(model, checkpoint_path)
    final_error = harness.error_rate(model, train)
    print(
        f"trained {args.network} ({args.regime}) for {args.epochs} epochs; "
        f"final train error {final_error:.4f}; wrote {checkpoint_path} and {log_path}"
    )
    return 0


def _trace_path(model, path, label: str):
    predictions = model.predict_responses(path)
    tracking = True
    for step, (stimulus, want, got) in enumerate(zip(path.stimuli, path.responses, predictions)):
        ok = want == got
        marker = "ok  " if ok else "MISS"
        print(f"  {label} step {step:3d} stim {stimulus[0]}:{stimulus[1]:<3d} "
              f"expected {want:2d} predicted {got:2d} {marker}")
        if tracking and not ok:
            print(f"  {label} tracking lost at step {step}")
            tracking = False
        elif not tracking and ok:
            print(f"  {label} tracking regained at step {step}")
            tracking = True


def cmd_eval(args) -> int:
    dataset = _load_dataset(args.data)
    model = networks_base.load_model(args.model)
    expected = harness.model_spec_for(model.spec.kind, dataset.config, skew=model.spec.skew)
    if (expected.stimulus_width, expected.output_width) != (
        model.spec.stimulus_width,
        model.spec.output_width,
    ):
        raise ValueError(
            f"checkpoint widths {model.spec.stimulus_width}x{model.spec.output_width} do not "
            f"match dataset widths {expected.stimulus_width}x{expected.output_width}"
        )
    _echo_config("eval", {"model": args.model, "data": args.data, "network": model.spec.kind})

    train_error = harness.error_rate(model, list(dataset.train))
    rows = []
    errors_by_kind: dict[str, list[int]] = {}
    for index, (disruption, path) in enumerate(dataset.test):
        errors, steps = harness.count_errors(model, path)
        kind = disruption.kind.value
        errors_by_kind.setdefault(kind, [0, 0])
        errors_by_kind[kind][0] += errors
        errors_by_kind[kind][1] += steps
        rows.append([index, kind, errors, steps, repr(errors / steps)])
        if args.trace:
            _trace_path(model, path, f"test[{index}]({kind})")

    print(f"train error: {train_error:.4f}")
    total_errors = total_steps = 0
    for kind, (errors, steps) in sorted(errors_by_kind.items()):
        total_errors += errors
        total_steps += steps
        print(f"test error [{kind}]: {errors}/{steps} = {errors / steps:.4f}")
    if total_steps:
        print(f"test error [overall]: {total_errors}/{total_steps} = {total_errors / total_steps:.4f}")

    out_dir = _ensure_out_dir(args)
    report_path = os.path.join(out_dir, "eval.csv")
    with open(report_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["test_index", "kind", "errors", "steps", "error_rate"])
        writer.writerows(rows)
    print(f"wrote {report_path}")
    return 0


def _experiment_config_from_args(args) -> harness.ExperimentConfig:
    try:
        if args.config:
            with open(args.config) as handle:
                doc = json.load(handle)
            for key in ("base_lengths", "num_modules_list", "networks", "regimes"):
                if key in doc:
                    doc[key] = tuple(doc[key])
            if args.master_seed is not None:
                doc["master_seed"] = args.master_seed
            return harness.ExperimentConfig(**doc)
        if args.master_seed is None:
            raise UsageError("experiment requires --master-seed (or --config with master_seed)")
        return harness.ExperimentConfig(
            base_lengths=tuple(int(v) for v in args.base_lengths.split(",")),
            num_modules_list=tuple(int(v) for v in args.modules_list.split(",")),
            networks=tuple(args.networks.split(",")),
            regimes=tuple(args.regimes.split(",")),
            epochs=args.epochs,
            runs=args.runs,
            master_seed=args.master_seed,
            tests_per_type=args.tests_per_type,
            module_length_min=args.module_min,
            module_length_max=args.module_max,
            value_alphabet=args.alphabet,
            skew=args.skew,
        )
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(str(exc)) from None


def cmd_experiment(args) -> int:
    config = _experiment_config_from_args(args)
    _echo_config("experiment", dataclasses.asdict(config))

    def progress(done: int, total: int):
        if args.quiet:
            return
        print(f"\r{done}/{total} runs", end="", flush=True)
        if done == total:
            print()

    records, table = harness.run_experiment(config, jobs=args.jobs, progress=progress)
    out_dir = _ensure_out_dir(args)
    results_path = os.path.join(out_dir, "results.csv")
    harness.write_records_csv(records, results_path)
    print(f"wrote {results_path} ({len(records)} rows, {table.total_failures} failed runs)")
    return 0


def cmd_report(args) -> int:
    records = harness.read_records_csv(args.data)
    table = harness.aggregate_records(records)
    _echo_config("report", {"data": args.data, "rows": len(records)})
    out_dir = _ensure_out_dir(args)

    summary_path = os.path.join(out_dir, "summary.csv")
    plot_path = os.path.join(out_dir, "plot_data.csv")
    harness.write_summary_csv(table, summary_path)
    harness.write_plot_data_csv(table, plot_path)

    findings = harness.compare(table)
    findings_path = os.path.join(out_dir, "findings.txt")
    with open(findings_path, "w") as handle:
        for finding in findings:
            handle.write(f"base {finding.base_length}, modules {finding.num_modules}\n")
            label = "ranking (tied)" if finding.tied else "ranking"
            handle.write(f"  {label} by mean comprehensive test error:\n")
            for network, mean in finding.ranking:
                handle.write(f"    {network}: {mean:.4f}\n")
            handle.write("  baseline-to-comprehensive improvement:\n")
            for network, delta in sorted(finding.baseline_delta.items()):
                handle.write(f"    {network}: {delta:+.4f}\n")
            handle.write("  pairwise rank tests (comprehensive overall error):\n")
            for pair in finding.pairwise:
                handle.write(
                    f"    {pair.network_a} vs {pair.network_b}: "
                    f"U={pair.u_statistic:.1f} p={pair.p_value:.4f}\n"
                )
    print(f"wrote {summary_path}, {plot_path}, {findings_path}")

    from pathbench.figures import render_figures

    for figure_path in render_figures(table, os.path.join(out_dir, "figures")):
        print(f"wrote {figure_path}")
    with open(findings_path) as handle:
        sys.stdout.write(handle.read())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_shared_gen_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--module-min", type=int, default=2, help="shortest module length")
    parser.add_argument("--module-max", type=int, default=5, help="longest module length")
    parser.add_argument("--alphabet", type=int, default=15, help="value/response alphabet size")
    parser.add_argument("--tests-per-type", type=int, default=2, help="test paths per disruption kind")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathbench",
        description="Disrupted-path composition benchmark: datasets, training, and reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a dataset in text and JSON formats")
    p.add_argument("--seed", type=int, required=True, help="generation seed (no entropy fallback)")
    p.add_argument("--base-length", type=int, default=10, help="base path length")
    p.add_argument("--modules", type=int, default=5, help="number of modular paths")
    _add_shared_gen_flags(p)
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one network on one regime")
    p.add_argument("--network", required=True, choices=networks_base.KINDS)
    p.add_argument("--regime", required=True, choices=harness.REGIMES)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--seed", type=int, required=True, help="weight-init seed")
    p.add_argument("--skew", type=float, default=0.5, help="morphognostic skew in [0, 1]")
    p.add_argument("--data", required=True, help="dataset file (.json or text)")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint against a dataset")
    p.add_argument("--model", required=True, help="checkpoint file from train")
    p.add_argument("--data", required=True, help="dataset file (.json or text)")
    p.add_argument("--trace", action="store_true", help="print per-step tracking trace")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run a sweep and write results.csv")
    p.add_argument("--runs", type=int, default=10, help="runs per cell (desk scale)")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--master-seed", type=int, default=None)
    p.add_argument("--networks", default=",".join(networks_base.KINDS))
    p.add_argument("--regimes", default=",".join(harness.REGIMES))
    p.add_argument("--base-lengths", default="10,20", help="comma list of base lengths")
    p.add_argument("--modules-list", default="5,10", help="comma list of module counts")
    _add_shared_gen_flags(p)
    p.add_argument("--skew", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--config", default=None, help="JSON experiment config (overrides flags)")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summarize results.csv into tables and figures")
    p.add_argument("--data", required=True, help="results.csv from experiment")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, networks_base.TrainingDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
