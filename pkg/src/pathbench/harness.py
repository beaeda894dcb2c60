"""Experimental protocol: seeded runs, sweeps, aggregation, and comparisons.

A run trains one network kind under one regime on one generated dataset and
scores per-step arg-max accuracy on the training subset and on every
disruption test path. Experiments sweep the cartesian product of networks,
regimes, generation configs, and run indices, each with a seed derived
injectively from the master seed, so a sweep is reproducible row for row.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from pathbench.composer.encoding import to_sequence_batch, to_window_batch
from pathbench.composer.paths import Dataset, DisruptionType, GenConfig, Path, generate_dataset
from pathbench.networks.base import KINDS, Model, ModelSpec, TrainingDivergedError, build
from pathbench.numerics import Rng, derive_seed

REGIMES = ("baseline", "comprehensive")

METRICS = (
    "train_error",
    "test_error_overall",
    "test_error_insertion",
    "test_error_substitution",
    "test_error_deletion",
)

CSV_HEADER = (
    "network,regime,base_length,num_modules,run,seed,train_error,test_error_overall,"
    "test_error_insertion,test_error_substitution,test_error_deletion,failed"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition; every run's seed derives from master_seed."""

    base_lengths: tuple[int, ...] = (10, 20)
    num_modules_list: tuple[int, ...] = (5, 10)
    networks: tuple[str, ...] = KINDS
    regimes: tuple[str, ...] = REGIMES
    epochs: int = 500
    runs: int = 50
    master_seed: int = 0
    tests_per_type: int = 2
    module_length_min: int = 2
    module_length_max: int = 5
    value_alphabet: int = 15
    skew: float = 0.5

    def __post_init__(self):
        if self.runs < 1 or self.epochs < 0:
            raise ValueError("need runs >= 1 and epochs >= 0")
        for network in self.networks:
            if network not in KINDS:
                raise ValueError(f"unknown network {network!r}")
        for regime in self.regimes:
            if regime not in REGIMES:
                raise ValueError(f"unknown regime {regime!r}")

    def gen_configs(self) -> list[GenConfig]:
        return [
            GenConfig(
                seed=0,
                base_length=base_length,
                num_modules=num_modules,
                module_length_min=self.module_length_min,
                module_length_max=self.module_length_max,
                value_alphabet=self.value_alphabet,
                tests_per_type=self.tests_per_type,
            )
            for base_length in self.base_lengths
            for num_modules in self.num_modules_list
        ]


@dataclass
class RunRecord:
    """Outcome of one (network, regime, config, seed) evaluation.

    test_path_failure_rate counts whole test paths with at least one wrong
    step; the per-step rates are the primary metric and the only ones in
    the results CSV.
    """

    network: str
    regime: str
    base_length: int
    num_modules: int
    run: int
    seed: int
    train_error: float
    test_error_overall: float
    test_error_by_kind: dict[str, float]
    test_path_failure_rate: float = math.nan
    failed: bool = False
    failed_epoch: int | None = None
    wall_time: float = 0.0

    def metric(self, name: str) -> float:
        if name == "train_error":
            return self.train_error
        if name == "test_error_overall":
            return self.test_error_overall
        prefix = "test_error_"
        if name.startswith(prefix) and name[len(prefix) :] in self.test_error_by_kind:
            return self.test_error_by_kind[name[len(prefix) :]]
        raise KeyError(name)


def model_spec_for(network: str, config: GenConfig, skew: float = 0.5) -> ModelSpec:
    """Architecture sized for a dataset: windows cover the longest test path."""
    window = config.base_length + config.module_length_max
    common = dict(
        kind=network,
        stimulus_width=config.stimulus_width,
        output_width=config.value_alphabet,
    )
    if network in ("tdnn", "morphognosis"):
        return ModelSpec(window=window, skew=skew, **common)
    if network == "tcn":
        dilations = list(ModelSpec.__dataclass_fields__["dilations"].default)
        while 1 + sum(dilations) < window:  # kernel 2: receptive field 1 + sum
            dilations.append(dilations[-1] * 2)
        return ModelSpec(dilations=tuple(dilations), **common)
    return ModelSpec(**common)


def training_paths(dataset: Dataset, regime: str) -> list[Path]:
    if regime == "baseline":
        return [dataset.base]
    if regime == "comprehensive":
        return list(dataset.train)
    raise ValueError(f"unknown regime {regime!r}")


def encode_training_batch(model: Model, paths: list[Path], config: GenConfig):
    if model.layout == "window":
        return to_window_batch(paths, model.spec.window, config.num_modules, config.value_alphabet)
    return to_sequence_batch(paths, config.num_modules, config.value_alphabet)


def count_errors(model: Model, path: Path) -> tuple[int, int]:
    predictions = model.predict_responses(path)
    errors = sum(1 for got, want in zip(predictions, path.responses) if got != want)
    return errors, len(path)


def error_rate(model: Model, paths: list[Path]) -> float:
    errors = steps = 0
    for path in paths:
        e, n = count_errors(model, path)
        errors += e
        steps += n
    return errors / steps


def run_single(
    network: str,
    regime: str,
    gen_config: GenConfig,
    epochs: int,
    seed: int,
    skew: float = 0.5,
    run: int = 0,
) -> RunRecord:
    """Generate, train, and score one run; deterministic in its arguments."""
    started = time.perf_counter()
    dataset = generate_dataset(replace(gen_config, seed=seed))
    spec = model_spec_for(network, dataset.config, skew=skew)
    model = build(spec, Rng(derive_seed(seed, 1)))
    train = training_paths(dataset, regime)
    batch = encode_training_batch(model, train, dataset.config)

    record = RunRecord(
        network=network,
        regime=regime,
        base_length=gen_config.base_length,
        num_modules=gen_config.num_modules,
        run=run,
        seed=seed,
        train_error=math.nan,
        test_error_overall=math.nan,
        test_error_by_kind={k.value: math.nan for k in DisruptionType},
    )
    for epoch in range(epochs):
        try:
            model.train_step(batch)
        except TrainingDivergedError:
            record.failed = True
            record.failed_epoch = epoch
            record.wall_time = time.perf_counter() - started
            return record

    record.train_error = error_rate(model, train)
    errors_by_kind = {k.value: 0 for k in DisruptionType}
    steps_by_kind = {k.value: 0 for k in DisruptionType}
    failed_paths = 0
    for disruption, path in dataset.test:
        e, n = count_errors(model, path)
        errors_by_kind[disruption.kind.value] += e
        steps_by_kind[disruption.kind.value] += n
        failed_paths += e > 0
    total_errors = sum(errors_by_kind.values())
    total_steps = sum(steps_by_kind.values())
    if dataset.test:
        record.test_path_failure_rate = failed_paths / len(dataset.test)
    record.test_error_overall = total_errors / total_steps if total_steps else math.nan
    record.test_error_by_kind = {
        kind: (errors_by_kind[kind] / steps_by_kind[kind] if steps_by_kind[kind] else math.nan)
        for kind in errors_by_kind
    }
    record.wall_time = time.perf_counter() - started
    return record


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def experiment_tasks(config: ExperimentConfig) -> list[dict]:
    """Expand the sweep's cartesian product with derived per-run seeds."""
    tasks = []
    for net_idx, network in enumerate(config.networks):
        for regime_idx, regime in enumerate(config.regimes):
            for cfg_idx, gen_config in enumerate(config.gen_configs()):
                for run in range(config.runs):
                    tasks.append(
                        {
                            "network": network,
                            "regime": regime,
                            "gen_config": gen_config,
                            "epochs": config.epochs,
                            "seed": derive_seed(
                                config.master_seed, net_idx, regime_idx, cfg_idx, run
                            ),
                            "skew": config.skew,
                            "run": run,
                        }
                    )
    return tasks


def _run_task(task: dict) -> RunRecord:
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return run_single(**task)
    # Single BLAS thread per worker: these matrices are too small to share.
    with threadpool_limits(limits=1):
        return run_single(**task)


def run_experiment(
    config: ExperimentConfig, jobs: int = 1, progress=None
) -> tuple[list[RunRecord], "ResultsTable"]:
    tasks = experiment_tasks(config)
    records: list[RunRecord] = []
    if jobs <= 1:
        for index, task in enumerate(tasks):
            records.append(_run_task(task))
            if progress:
                progress(index + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for index, record in enumerate(pool.map(_run_task, tasks, chunksize=1)):
                records.append(record)
                if progress:
                    progress(index + 1, len(tasks))
    return records, aggregate_records(records)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

GroupKey = tuple[str, str, int, int]  # (network, regime, base_length, num_modules)


@dataclass
class GroupStats:
    count: int = 0
    failures: int = 0
    values: dict[str, list[float]] = field(default_factory=lambda: {m: [] for m in METRICS})

    def mean(self, metric: str) -> float:
        vals = self.values[metric]
        return float(np.mean(vals)) if vals else math.nan

    def std(self, metric: str) -> float:
        vals = self.values[metric]
        if len(vals) < 2:
            return 0.0 if vals else math.nan
        return float(np.std(vals, ddof=1))


@dataclass
class ResultsTable:
    """Per-group run values and summary statistics; failed runs excluded."""

    groups: dict[GroupKey, GroupStats] = field(default_factory=dict)

    def group(self, network: str, regime: str, base_length: int, num_modules: int) -> GroupStats:
        return self.groups[(network, regime, base_length, num_modules)]

    @property
    def total_failures(self) -> int:
        return sum(g.failures for g in self.groups.values())


def aggregate_records(records: list[RunRecord]) -> ResultsTable:
    """Permutation-invariant reduction of run records into grouped statistics."""
    table = ResultsTable()
    for record in sorted(
        records, key=lambda r: (r.network, r.regime, r.base_length, r.num_modules, r.run, r.seed)
    ):
        key = (record.network, record.regime, record.base_length, record.num_modules)
        stats = table.groups.setdefault(key, GroupStats())
        stats.count += 1
        if record.failed:
            stats.failures += 1
            continue
        for metric in METRICS:
            stats.values[metric].append(record.metric(metric))
    return table


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


def rank_sum_test(a: list[float], b: list[float]) -> tuple[float, float]:
    """Two-sided Mann-Whitney rank-sum test via the normal approximation.

    Returns (U statistic for sample a, p value). Ties get average ranks and
    the variance tie correction; identical samples give p = 1.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("rank test needs nonempty samples")
    pooled = sorted((value, 0 if i < n1 else 1) for i, value in enumerate(list(a) + list(b)))
    ranks = np.zeros(n1 + n2)
    tie_term = 0.0
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[j][0] == pooled[i][0]:
            j += 1
        avg_rank = (i + j + 1) / 2.0  # 1-based average rank of the tied block
        for k in range(i, j):
            ranks[k] = avg_rank
        t = j - i
        tie_term += t**3 - t
        i = j
    r1 = sum(rank for rank, (_, which) in zip(ranks, pooled) if which == 0)
    u1 = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    n = n1 + n2
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return u1, 1.0
    if u1 == mu:
        z = 0.0
    else:
        # Continuity correction pulls |U - mu| in by one half.
        z = (u1 - mu - 0.5 * math.copysign(1.0, u1 - mu)) / math.sqrt(variance)
    p = 2.0 * (1.0 - 0.5 * (1.0 + math.erf(abs(z) / math.sqrt(2.0))))
    return u1, min(1.0, p)


@dataclass
class PairwiseResult:
    network_a: str
    network_b: str
    u_statistic: float
    p_value: float


@dataclass
class ConfigComparison:
    base_length: int
    num_modules: int
    ranking: list[tuple[str, float]]  # (network, mean comprehensive test error), ascending
    tied: bool
    baseline_delta: dict[str, float]  # baseline mean - comprehensive mean per network
    pairwise: list[PairwiseResult]


def compare(table: ResultsTable) -> list[ConfigComparison]:
    """Per-config network rankings, regime deltas, and pairwise rank tests."""
    configs = sorted({(k[2], k[3]) for k in table.groups})
    networks = sorted({k[0] for k in table.groups})
    findings = []
    for base_length, num_modules in configs:
        means = {}
        values = {}
        deltas = {}
        for network in networks:
            comp_key = (network, "comprehensive", base_length, num_modules)
            base_key = (network, "baseline", base_length, num_modules)
            if comp_key not in table.groups:
                raise KeyError(f"missing comprehensive group for {comp_key}")
            comp = table.groups[comp_key]
            means[network] = comp.mean("test_error_overall")
            values[network] = comp.values["test_error_overall"]
            if base_key in table.groups:
                deltas[network] = (
                    table.groups[base_key].mean("test_error_overall") - means[network]
                )
        ranking = sorted(means.items(), key=lambda item: (item[1], item[0]))
        tied = len({round(m, 12) for m in means.values()}) < len(means)
        pairwise = [
            PairwiseResult(a, b, *rank_sum_test(values[a], values[b]))
            for i, a in enumerate(networks)
            for b in networks[i + 1 :]
            if values[a] and values[b]
        ]
        findings.append(
            ConfigComparison(base_length, num_modules, ranking, tied, deltas, pairwise)
        )
    return findings


# ---------------------------------------------------------------------------
# CSV input/output
# ---------------------------------------------------------------------------


def write_records_csv(records: list[RunRecord], path: str):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER.split(","))
        for r in records:
            writer.writerow(
                [
                    r.network,
                    r.regime,
                    r.base_length,
                    r.num_modules,
                    r.run,
                    r.seed,
                    repr(r.train_error),
                    repr(r.test_error_overall),
                    repr(r.test_error_by_kind["insertion"]),
                    repr(r.test_error_by_kind["substitution"]),
                    repr(r.test_error_by_kind["deletion"]),
                    "true" if r.failed else "false",
                ]
            )


def read_records_csv(path: str) -> list[RunRecord]:
    records = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise ValueError(f"unexpected results header in {path}: {reader.fieldnames}")
        for row in reader:
            records.append(
                RunRecord(
                    network=row["network"],
                    regime=row["regime"],
                    base_length=int(row["base_length"]),
                    num_modules=int(row["num_modules"]),
                    run=int(row["run"]),
                    seed=int(row["seed"]),
                    train_error=float(row["train_error"]),
                    test_error_overall=float(row["test_error_overall"]),
                    test_error_by_kind={
                        "insertion": float(row["test_error_insertion"]),
                        "substitution": float(row["test_error_substitution"]),
                        "deletion": float(row["test_error_deletion"]),
                    },
                    failed=row["failed"] == "true",
                )
            )
    if not records:
        raise ValueError(f"no run records in {path}")
    return records


def write_summary_csv(table: ResultsTable, path: str):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["network", "regime", "base_length", "num_modules", "metric", "mean", "stddev",
             "count", "failures"]
        )
        for key in sorted(table.groups):
            stats = table.groups[key]
            for metric in METRICS:
                writer.writerow(
                    [*key, metric, repr(stats.mean(metric)), repr(stats.std(metric)),
                     stats.count, stats.failures]
                )


def write_plot_data_csv(table: ResultsTable, path: str):
    """One row per bar: group key plus mean and stddev of a test-error metric."""
    bar_metrics = [m for m in METRICS if m.startswith("test_error_")]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["regime", "base_length", "num_modules", "network", "metric", "mean", "stddev"]
        )
        for (network, regime, base_length, num_modules) in sorted(table.groups):
            stats = table.groups[(network, regime, base_length, num_modules)]
            for metric in bar_metrics:
                writer.writerow(
                    [regime, base_length, num_modules, network, metric,
                     repr(stats.mean(metric)), repr(stats.std(metric))]
                )
