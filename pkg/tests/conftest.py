from __future__ import annotations

from pathlib import Path

import pytest

from pathbench.composer import GenConfig, generate_dataset, to_sequence_batch, to_window_batch
from pathbench.networks import ModelSpec, build
from pathbench.numerics import Rng, finite_difference_grad, relative_error

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def sample_dataset_text() -> str:
    """Known-good dataset in text form: base 15, five modules, six test paths.

    The test-path lines are deliberately wrapped mid-list to exercise
    continuation parsing.
    """
    return (DATA_DIR / "sample_dataset.txt").read_text()


# ---------------------------------------------------------------------------
# Gradient-check helpers shared by the network and acceptance suites
# ---------------------------------------------------------------------------


def randomize_params(model, rng: Rng, scale: float = 0.2):
    """Move every parameter (biases too) off the zero-init point.

    With zero biases, dead relu units sit exactly on the activation kink,
    where central differences disagree with the z>0 subgradient convention;
    gradients are checked at a generic point instead.
    """
    for param in model.params.values():
        param += rng.uniform(-scale, scale, size=param.shape)


def model_gradcheck(model, batch, h: float = 1e-6) -> float:
    """Worst relative error between analytic and central-difference gradients."""
    _, grads = model.compute_gradients(batch)
    worst = 0.0
    for name in model.params:
        def probe(values, _name=name):
            saved = model.params[_name].copy()
            model.params[_name][...] = values
            try:
                return model.loss_on(batch)
            finally:
                model.params[_name][...] = saved

        fd = finite_difference_grad(probe, model.params[name].copy(), h)
        worst = max(worst, relative_error(grads[name], fd))
    return worst


def micro_setup(kind: str, seed: int):
    """A tiny random dataset, spec, batch, and initialized model for one kind."""
    rng = Rng(seed)
    config = GenConfig(
        seed=rng.uniform_int(0, 2**32),
        base_length=rng.uniform_int(4, 6),
        num_modules=rng.uniform_int(1, 3),
        module_length_min=2,
        module_length_max=3,
        value_alphabet=rng.uniform_int(3, 5),
        tests_per_type=1,
    )
    dataset = generate_dataset(config)
    window = config.base_length + config.module_length_max
    s, v = config.stimulus_width, config.value_alphabet
    if kind in ("tdnn", "morphognosis"):
        spec = ModelSpec(
            kind, s, v, hidden=rng.uniform_int(3, 6), window=window,
            skew=rng.uniform_int(0, 10) / 10.0,
        )
        batch = to_window_batch(list(dataset.train), window, config.num_modules, v)
    elif kind == "lstm":
        spec = ModelSpec(kind, s, v, hidden=rng.uniform_int(3, 6))
        batch = to_sequence_batch(list(dataset.train), config.num_modules, v)
    else:
        spec = ModelSpec(
            kind, s, v, filters=rng.uniform_int(2, 4),
            dilations=(1, 2, 4), kernel_size=2,
        )
        batch = to_sequence_batch(list(dataset.train), config.num_modules, v)
    model = build(spec, Rng(seed + 1))
    randomize_params(model, Rng(seed + 2))
    return dataset, spec, batch, model
