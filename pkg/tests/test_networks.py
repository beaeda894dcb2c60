"""Network wiring, gradients, causality, statefulness, and checkpoints."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import micro_setup, model_gradcheck, randomize_params

from pathbench.composer import (
    GenConfig,
    Path,
    generate_dataset,
    to_sequence_batch,
    to_window_batch,
)
from pathbench.networks import (
    KINDS,
    ModelSpec,
    TrainingDivergedError,
    build,
    load_model,
    save_model,
)
from pathbench.networks.tcn import causal_conv_forward
from pathbench.numerics import Rng


class TestBuild:
    def test_tdnn_layer_widths(self):
        model = build(ModelSpec("tdnn", 21, 15, window=15), Rng(0))
        assert model.params["w0"].shape == (315, 256)
        assert model.params["w1"].shape == (256, 256)
        assert model.params["w2"].shape == (256, 15)

    def test_morphognosis_input_width(self):
        # Window 15 aggregates 14 lags into 5 intervals plus the current slot.
        model = build(ModelSpec("morphognosis", 21, 15, window=15, skew=0.5), Rng(0))
        assert model.in_width == 6 * 21
        assert model.params["w0"].shape == (126, 256)

    def test_lstm_shapes(self):
        model = build(ModelSpec("lstm", 21, 15), Rng(0))
        assert model.params["wx"].shape == (21, 1024)
        assert model.params["wh"].shape == (256, 1024)
        assert model.params["wy"].shape == (256, 15)

    def test_tcn_receptive_field(self):
        spec = ModelSpec("tcn", 21, 15)
        assert spec.receptive_field == 1 + sum((1, 2, 4, 8, 16))

    def test_same_seed_identical_parameters(self):
        for kind in KINDS:
            spec = ModelSpec(kind, 9, 4, hidden=8, window=6, filters=4, dilations=(1, 2))
            a, b = build(spec, Rng(42)), build(spec, Rng(42))
            assert a.params.keys() == b.params.keys()
            for name in a.params:
                assert np.array_equal(a.params[name], b.params[name]), name

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            ModelSpec("gru", 9, 4)
        with pytest.raises(ValueError):
            ModelSpec("tdnn", 9, 4, window=0)
        with pytest.raises(ValueError):
            ModelSpec("morphognosis", 9, 4, window=1)
        with pytest.raises(ValueError):
            ModelSpec("tcn", 9, 4, dilations=())


class TestForward:
    def test_lstm_zero_params_output_is_bias(self):
        model = build(ModelSpec("lstm", 6, 3, hidden=4), Rng(0))
        for param in model.params.values():
            param[...] = 0.0
        model.params["by"][...] = [0.5, -1.0, 2.0]
        batch = to_sequence_batch(
            [Path(id=0, stimuli=((0, 1), (0, 2)), responses=(0, 1))], 2, 3
        )
        out = model.forward(batch)
        assert np.allclose(out, [0.5, -1.0, 2.0])

    def test_lstm_matches_scalar_loop_oracle(self):
        _, spec, batch, model = micro_setup("lstm", 5)
        out = model.forward(batch)
        p = model.params
        h = spec.hidden

        def sigmoid(z):
            return 1.0 / (1.0 + np.exp(-z))

        for path_idx in range(batch.inputs.shape[0]):
            h_prev = np.zeros(h)
            c_prev = np.zeros(h)
            for t in range(batch.inputs.shape[1]):
                z = batch.inputs[path_idx, t] @ p["wx"] + h_prev @ p["wh"] + p["b"]
                i, f = sigmoid(z[:h]), sigmoid(z[h : 2 * h])
                g, o = np.tanh(z[2 * h : 3 * h]), sigmoid(z[3 * h :])
                c = f * c_prev + i * g
                h_now = o * np.tanh(c)
                expected = h_now @ p["wy"] + p["by"]
                assert np.allclose(out[path_idx, t], expected, atol=1e-12)
                h_prev, c_prev = h_now, c

    def test_causal_conv_matches_scalar_loop_oracle(self):
        rng = Rng(8)
        x = rng.normal(size=(2, 6, 3))
        w = rng.normal(size=(2, 3, 4))
        b = rng.normal(size=4)
        dilation = 2
        y, _ = causal_conv_forward(x, w, b, dilation)
        for p in range(2):
            for t in range(6):
                expected = b.copy()
                for k in range(2):
                    src = t - (2 - 1 - k) * dilation
                    if src >= 0:
                        expected = expected + x[p, src] @ w[k]
                assert np.allclose(y[p, t], expected, atol=1e-12)

    def test_layout_mismatch_rejected(self):
        _, _, seq_batch, _ = micro_setup("lstm", 1)
        _, _, win_batch, mlp = micro_setup("tdnn", 1)
        with pytest.raises(ValueError, match="window"):
            mlp.forward(seq_batch)
        _, _, _, lstm = micro_setup("lstm", 1)
        with pytest.raises(ValueError, match="sequence"):
            lstm.forward(win_batch)


class TestGradients:
    @pytest.mark.parametrize("kind", KINDS)
    def test_micro_configurations(self, kind):
        for seed in range(200, 205):
            _, _, batch, model = micro_setup(kind, seed)
            assert model_gradcheck(model, batch) < 1e-4, f"{kind} seed {seed}"


class TestTrainStep:
    def test_zero_lr_loss_constant(self):
        _, spec, batch, _ = micro_setup("tdnn", 3)
        from dataclasses import replace

        model = build(replace(spec, lr=0.0), Rng(5))
        losses = [model.train_step(batch) for _ in range(4)]
        assert len(set(losses)) == 1

    @pytest.mark.parametrize("kind", KINDS)
    def test_loss_decreases_on_single_example(self, kind):
        from pathbench.composer.encoding import EncodedBatch

        _, _, batch, model = micro_setup(kind, 17)
        if model.layout == "window":
            single = EncodedBatch(batch.inputs[:1], batch.targets[:1], batch.mask[:1], "window")
        else:
            single = EncodedBatch(
                batch.inputs[:1], batch.targets[:1], batch.mask[:1], "sequence"
            )
        first = model.train_step(single)
        for _ in range(500):
            last = model.train_step(single)
        assert last < first

    def test_deterministic_training(self):
        results = []
        for _ in range(2):
            _, _, batch, model = micro_setup("lstm", 23)
            for _ in range(20):
                model.train_step(batch)
            results.append({k: v.copy() for k, v in model.params.items()})
        for name in results[0]:
            assert np.array_equal(results[0][name], results[1][name]), name

    def test_receptive_field_guard(self):
        spec = ModelSpec("tcn", 6, 3, filters=2, dilations=(1,), kernel_size=2)
        model = build(spec, Rng(0))
        long_path = Path(id=0, stimuli=tuple((0, 0) for _ in range(5)), responses=(0,) * 5)
        batch = to_sequence_batch([long_path], 2, 3)
        with pytest.raises(TrainingDivergedError, match="receptive field"):
            model.train_step(batch)


class TestPredict:
    @pytest.mark.parametrize("kind", KINDS)
    def test_untrained_predictions_in_range(self, kind):
        dataset, _, _, model = micro_setup(kind, 31)
        for _, path in dataset.test:
            predictions = model.predict_responses(path)
            assert len(predictions) == len(path)
            assert all(0 <= r < model.spec.output_width for r in predictions)

    @pytest.mark.parametrize("kind", KINDS)
    def test_memorizes_training_paths(self, kind):
        config = GenConfig(seed=6, base_length=6, num_modules=2, module_length_min=2,
                           module_length_max=3, value_alphabet=6)
        dataset = generate_dataset(config)
        window = config.base_length + config.module_length_max
        s, v = config.stimulus_width, config.value_alphabet
        if kind in ("tdnn", "morphognosis"):
            spec = ModelSpec(kind, s, v, hidden=48, window=window)
            batch = to_window_batch(list(dataset.train), window, config.num_modules, v)
        elif kind == "lstm":
            spec = ModelSpec(kind, s, v, hidden=48)
            batch = to_sequence_batch(list(dataset.train), config.num_modules, v)
        else:
            spec = ModelSpec(kind, s, v, filters=24, dilations=(1, 2, 4))
            batch = to_sequence_batch(list(dataset.train), config.num_modules, v)
        model = build(spec, Rng(9))
        for _ in range(500):
            model.train_step(batch)
        for path in dataset.train:
            assert model.predict_responses(path) == list(path.responses)

    @pytest.mark.parametrize("kind", KINDS)
    def test_argmax_invariant_under_positive_head_scaling(self, kind):
        dataset, _, _, model = micro_setup(kind, 37)
        path = dataset.test[0][1]
        before = model.predict_responses(path)
        head_w, head_b = {
            "lstm": ("wy", "by"),
            "tcn": ("head_w", "head_b"),
        }.get(kind, ("w2", "b2"))
        model.params[head_w] *= 3.7
        model.params[head_b] *= 3.7
        assert model.predict_responses(path) == before


class TestCausality:
    def test_tcn_outputs_ignore_later_inputs(self):
        for dilations in [(1,), (1, 2), (1, 2, 4, 8, 16)]:
            spec = ModelSpec("tcn", 8, 4, filters=6, dilations=dilations)
            model = build(spec, Rng(3))
            randomize_params(model, Rng(4))
            steps = min(spec.receptive_field, 12)
            rng = Rng(5)
            inputs = rng.uniform(size=(2, steps, 8))
            from pathbench.composer.encoding import EncodedBatch

            batch = EncodedBatch(inputs, np.zeros((2, steps, 4)), np.ones((2, steps)), "sequence")
            baseline_out = model.forward(batch)
            for k in range(1, steps):
                perturbed = inputs.copy()
                perturbed[:, k] = rng.uniform(size=(2, 8))
                out = model.forward(
                    EncodedBatch(perturbed, batch.targets, batch.mask, "sequence")
                )
                assert np.array_equal(out[:, :k], baseline_out[:, :k]), (dilations, k)
                assert not np.array_equal(out[:, k:], baseline_out[:, k:])


class TestStatefulness:
    def test_lstm_uses_long_range_context(self):
        # Two paths identical from step 1 on; only step 0 and the final
        # response differ, so a correct model must carry early state forward.
        shared = ((0, 2), (0, 3), (0, 2), (0, 3))
        a = Path(id=0, stimuli=((0, 0),) + shared, responses=(1, 2, 3, 2, 0))
        b = Path(id=0, stimuli=((0, 1),) + shared, responses=(1, 2, 3, 2, 4))
        batch = to_sequence_batch([a, b], 0, 5)
        model = build(ModelSpec("lstm", 6, 5, hidden=24), Rng(2))
        for _ in range(400):
            model.train_step(batch)
        assert model.predict_responses(a) == list(a.responses)
        assert model.predict_responses(b) == list(b.responses)
        assert model.predict_responses(a)[4] != model.predict_responses(b)[4]


class TestCheckpoint:
    @pytest.mark.parametrize("kind", KINDS)
    def test_round_trip_bit_exact(self, kind, tmp_path):
        dataset, _, batch, model = micro_setup(kind, 41)
        for _ in range(5):
            model.train_step(batch)
        target = str(tmp_path / "checkpoint.json")
        save_model(model, target)
        loaded = load_model(target)
        assert loaded.spec == model.spec
        for name in model.params:
            assert np.array_equal(loaded.params[name], model.params[name]), name
        for _, path in dataset.test:
            assert np.array_equal(
                loaded.forward(loaded._encode_path(path)),
                model.forward(model._encode_path(path)),
            )
