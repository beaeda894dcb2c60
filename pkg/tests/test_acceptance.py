"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. Criteria 4-6 share one
desk-scale sweep (4 networks x 2 regimes x 4 configs x 10 seeds at 500
epochs) built once per session; expect tens of minutes for the full suite.
"""

from __future__ import annotations

import functools
import os
from dataclasses import replace

import numpy as np
import pytest
from conftest import micro_setup, model_gradcheck, randomize_params

from pathbench.composer import (
    DisruptionType,
    GenConfig,
    delete,
    encode_one_hot,
    generate_dataset,
    insert,
    parse,
    parse_json,
    serialize,
    serialize_json,
    substitute,
)
from pathbench.composer.encoding import EncodedBatch
from pathbench.harness import ExperimentConfig, model_spec_for, rank_sum_test, run_experiment
from pathbench.morphognostic import intervals_from_weights, skew_weights
from pathbench.networks import KINDS, build
from pathbench.numerics import Rng

SWEEP_MASTER_SEED = 0
SWEEP_RUNS = 10


def criterion(number: int, name: str):
    """Print one pass/fail line per criterion around the wrapped test."""

    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\n[acceptance] criterion {number} ({name}): FAIL")
                raise
            print(f"\n[acceptance] criterion {number} ({name}): PASS")
            return result

        return inner

    return wrap


@pytest.fixture(scope="session")
def sweep():
    """Desk-scale sweep shared by the memorization/contrast/ordering criteria."""
    config = ExperimentConfig(runs=SWEEP_RUNS, epochs=500, master_seed=SWEEP_MASTER_SEED)
    jobs = max(1, os.cpu_count() or 1)
    records, table = run_experiment(config, jobs=jobs)
    assert table.total_failures == 0, "sweep runs diverged"
    return config, records, table


@criterion(1, "skew weight reproduction")
def test_criterion_1_skew_weights():
    expected_oldest_first = [
        7.5, 3.5, 1.625, 0.75, 0.34375, 0.15625, 0.0703125, 0.03125,
        0.013671875, 0.005859375, 0.0024414062, 9.765625e-4, 3.6621094e-4,
    ]
    weights = skew_weights(13, 0.5)
    got = weights.oldest_first()
    for index, expected in enumerate(expected_oldest_first):
        assert abs(got[index] - expected) <= 1e-6, f"slot {index}: {got[index]} vs {expected}"
    assert abs(weights.weights.sum() - 14.0) <= 1e-9


@criterion(2, "interval grouping reproduction")
def test_criterion_2_intervals():
    spans = intervals_from_weights(skew_weights(13, 0.5), 13)
    assert [span.size for span in spans] == [7, 3, 1, 1, 1]


@criterion(3, "gradient suite")
def test_criterion_3_gradients():
    for kind in KINDS:
        for seed in range(200, 205):
            _, _, batch, model = micro_setup(kind, seed)
            error = model_gradcheck(model, batch, h=1e-6)
            assert error < 1e-4, f"{kind} micro-config {seed}: rel error {error:.3e}"


@criterion(4, "memorization in the comprehensive regime")
def test_criterion_4_memorization(sweep):
    _, records, _ = sweep
    for network in KINDS:
        cell = [
            r for r in records
            if (r.network, r.regime, r.base_length, r.num_modules)
            == (network, "comprehensive", 10, 5)
        ]
        assert len(cell) == SWEEP_RUNS
        converged = sum(1 for r in cell if r.train_error <= 0.02)
        assert converged >= 9, (
            f"{network}: only {converged}/10 seeds reached <=2% training error "
            f"(rates: {[round(r.train_error, 3) for r in cell]})"
        )


@criterion(5, "baseline-to-comprehensive contrast")
def test_criterion_5_baseline_contrast(sweep):
    config, _, table = sweep
    for network in KINDS:
        for base_length in config.base_lengths:
            for num_modules in config.num_modules_list:
                comp = table.group(network, "comprehensive", base_length, num_modules)
                base = table.group(network, "baseline", base_length, num_modules)
                assert comp.mean("test_error_overall") < base.mean("test_error_overall"), (
                    f"{network} base={base_length} modules={num_modules}: comprehensive "
                    f"{comp.mean('test_error_overall'):.3f} !< baseline "
                    f"{base.mean('test_error_overall'):.3f}"
                )


@criterion(6, "architecture ordering")
def test_criterion_6_architecture_ordering(sweep):
    config, _, table = sweep
    satisfied = 0
    for base_length in config.base_lengths:
        for num_modules in config.num_modules_list:
            means = {
                network: table.group(
                    network, "comprehensive", base_length, num_modules
                ).mean("test_error_overall")
                for network in KINDS
            }
            values = {
                network: table.group(
                    network, "comprehensive", base_length, num_modules
                ).values["test_error_overall"]
                for network in KINDS
            }
            ordered = all(
                means[strong] < means[weak]
                for strong in ("lstm", "morphognosis")
                for weak in ("tdnn", "tcn")
            )
            satisfied += ordered
            for strong in ("lstm", "morphognosis"):
                for weak in ("tdnn", "tcn"):
                    u, p = rank_sum_test(values[strong], values[weak])
                    print(
                        f"  base={base_length} modules={num_modules} {strong} vs {weak}: "
                        f"means {means[strong]:.3f}/{means[weak]:.3f} U={u:.1f} p={p:.4f}"
                    )
    assert satisfied >= 3, f"ordering held in only {satisfied}/4 sweep configs"


@criterion(7, "dataset property suite over 1000 seeds")
def test_criterion_7_dataset_properties():
    rng = Rng(424242)
    for _ in range(1000):
        base_length = rng.uniform_int(4, 24)
        module_max = min(rng.uniform_int(2, 5), base_length - 1)
        config = GenConfig(
            seed=rng.uniform_int(0, 2**64 - 1),
            base_length=base_length,
            num_modules=rng.uniform_int(1, 10),
            module_length_min=min(rng.uniform_int(1, 3), module_max),
            module_length_max=module_max,
            value_alphabet=rng.uniform_int(2, 15),
            tests_per_type=rng.uniform_int(0, 3),
        )
        dataset = generate_dataset(config)

        assert generate_dataset(config) == dataset  # determinism

        base = dataset.base
        for disruption, path in dataset.test:
            module = dataset.train[disruption.module_id]
            pos = disruption.position
            if disruption.kind is DisruptionType.INSERTION:
                assert len(path) == len(base) + len(module)
                assert path.stimuli[:pos] == base.stimuli[:pos]
                assert path.responses[:pos] == base.responses[:pos]
                assert path.stimuli[pos + len(module) :] == base.stimuli[pos:]
                assert path.responses[pos + len(module) :] == base.responses[pos:]
            elif disruption.kind is DisruptionType.SUBSTITUTION:
                assert len(path) == len(base)
                assert path.stimuli[:pos] == base.stimuli[:pos]
                assert path.stimuli[pos + len(module) :] == base.stimuli[pos + len(module) :]
                assert path.responses[pos + len(module) :] == base.responses[pos + len(module) :]
            else:
                assert len(path) == len(base) - len(module)
                assert path.stimuli[:pos] == base.stimuli[:pos]
                assert path.stimuli[pos:] == base.stimuli[pos + len(module) :]
                assert path.responses[pos:] == base.responses[pos + len(module) :]

        for path in dataset.train:
            inputs, targets = encode_one_hot(path, config.num_modules, config.value_alphabet)
            assert (inputs.sum(axis=1) == 2).all()
            assert (targets.sum(axis=1) == 1).all()

        reparsed = parse(serialize(dataset))
        assert reparsed.train == dataset.train
        assert [(d.kind, p) for d, p in reparsed.test] == [
            (d.kind, p) for d, p in dataset.test
        ]
        assert parse_json(serialize_json(dataset)) == dataset


@criterion(8, "sample-dataset conformance")
def test_criterion_8_sample_conformance(sample_dataset_text):
    dataset = parse(sample_dataset_text)
    base = dataset.base
    modules = dataset.modules
    by_kind = {
        kind: [path for d, path in dataset.test if d.kind is kind] for kind in DisruptionType
    }
    # The sample's six test paths arise from these module/position choices.
    assert insert(base, modules[1], 15) == by_kind[DisruptionType.INSERTION][0]
    assert insert(base, modules[4], 4) == by_kind[DisruptionType.INSERTION][1]
    assert substitute(base, modules[1], 11) == by_kind[DisruptionType.SUBSTITUTION][0]
    assert substitute(base, modules[4], 12) == by_kind[DisruptionType.SUBSTITUTION][1]
    assert delete(base, 3, 0) == by_kind[DisruptionType.DELETION][0]
    assert delete(base, 4, 3) == by_kind[DisruptionType.DELETION][1]


@criterion(9, "causality and argmax-invariance probes")
def test_criterion_9_perturbation_probes():
    gen_configs = [
        GenConfig(seed=0, base_length=10, num_modules=5),
        GenConfig(seed=0, base_length=20, num_modules=10),
    ]
    rng = Rng(31337)
    for gen_config in gen_configs:
        # Causality: outputs before a perturbed step stay bit-identical.
        spec = model_spec_for("tcn", gen_config)
        model = build(spec, Rng(1))
        randomize_params(model, Rng(2))
        steps = gen_config.base_length + gen_config.module_length_max
        inputs = rng.uniform(size=(2, steps, spec.stimulus_width))
        batch = EncodedBatch(
            inputs, np.zeros((2, steps, spec.output_width)), np.ones((2, steps)), "sequence"
        )
        baseline_out = model.forward(batch)
        for k in range(1, steps):
            perturbed = inputs.copy()
            perturbed[:, k] = rng.uniform(size=(2, spec.stimulus_width))
            out = model.forward(EncodedBatch(perturbed, batch.targets, batch.mask, "sequence"))
            assert np.array_equal(out[:, :k], baseline_out[:, :k]), f"leak into step < {k}"

        # Argmax invariance under positive scaling of the output head.
        dataset = generate_dataset(replace(gen_config, seed=9))
        head_names = {
            "tdnn": ("w2", "b2"),
            "morphognosis": ("w2", "b2"),
            "lstm": ("wy", "by"),
            "tcn": ("head_w", "head_b"),
        }
        for kind in KINDS:
            model = build(model_spec_for(kind, gen_config), Rng(3))
            randomize_params(model, Rng(4))
            path = dataset.test[0][1]
            before = model.predict_responses(path)
            w_name, b_name = head_names[kind]
            model.params[w_name] *= 2.5
            model.params[b_name] *= 2.5
            assert model.predict_responses(path) == before, kind
