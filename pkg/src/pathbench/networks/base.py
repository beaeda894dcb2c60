"""Uniform model interface shared by the four sequence learners.

Every model owns float64 parameter arrays and per-parameter Adam state,
computes exact analytic gradients, and predicts one response per path step
by arg-max over its output row. Training is full batch: one optimizer step
per call over the whole encoded training set.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from pathbench.composer.encoding import EncodedBatch, to_sequence_batch, window_rows
from pathbench.composer.paths import Path
from pathbench.numerics import AdamState, Rng, adam_step, glorot_uniform

KINDS = ("tdnn", "morphognosis", "lstm", "tcn")


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss or gradient."""


@dataclass(frozen=True)
class ModelSpec:
    """Architecture hyperparameters for one learner.

    `window` is the sliding-window width for the MLP kinds; the
    morphognostic encoder aggregates the window's first window-1 slots
    (the history lags) and keeps the current slot raw. `hidden` is both
    the MLP hidden width and the LSTM unit count.
    """

    kind: str
    stimulus_width: int
    output_width: int
    hidden: int = 256
    window: int = 0
    skew: float = 0.5
    kernel_size: int = 2
    dilations: tuple[int, ...] = (1, 2, 4, 8, 16)
    filters: int = 64
    lr: float = 1e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}; expected one of {KINDS}")
        if self.stimulus_width < 1 or self.output_width < 1 or self.hidden < 1:
            raise ValueError("widths must be positive")
        if self.kind in ("tdnn", "morphognosis"):
            minimum = 2 if self.kind == "morphognosis" else 1
            if self.window < minimum:
                raise ValueError(f"{self.kind} needs window >= {minimum}, got {self.window}")
        if self.kind == "morphognosis" and not 0.0 <= self.skew <= 1.0:
            raise ValueError(f"skew must be in [0, 1], got {self.skew}")
        if self.kind == "tcn":
            if self.kernel_size < 1 or self.filters < 1 or not self.dilations:
                raise ValueError("tcn needs positive kernel_size, filters, and dilations")

    @property
    def receptive_field(self) -> int:
        """Longest history one TCN output can see."""
        return 1 + (self.kernel_size - 1) * sum(self.dilations)

    @property
    def num_modules(self) -> int:
        return self.stimulus_width - self.output_width - 1


class Model:
    """Base class: parameter registry, Adam updates, shared prediction."""

    layout = "sequence"  # batch layout this model consumes
    loss_kind = "mse"

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.params: dict[str, np.ndarray] = {}
        self.opt: dict[str, AdamState] = {}

    def _add_param(self, name: str, value: np.ndarray):
        self.params[name] = np.asarray(value, dtype=np.float64)
        self.opt[name] = AdamState.for_param(self.params[name], lr=self.spec.lr)

    def parameters(self) -> dict[str, np.ndarray]:
        return self.params

    # Subclasses implement these two.
    def forward(self, batch: EncodedBatch) -> np.ndarray:
        raise NotImplementedError

    def compute_gradients(self, batch: EncodedBatch) -> tuple[float, dict[str, np.ndarray]]:
        raise NotImplementedError

    def _check_layout(self, batch: EncodedBatch):
        if batch.layout != self.layout:
            raise ValueError(
                f"{self.spec.kind} expects {self.layout!r} batches, got {batch.layout!r}"
            )

    def loss_on(self, batch: EncodedBatch) -> float:
        value, _ = self.compute_gradients(batch)
        return value

    def train_step(self, batch: EncodedBatch) -> float:
        """One full forward/backward pass and Adam update; returns pre-update loss."""
        value, grads = self.compute_gradients(batch)
        if not np.isfinite(value):
            raise TrainingDivergedError(f"non-finite loss {value!r}")
        for name, grad in grads.items():
            if not np.all(np.isfinite(grad)):
                raise TrainingDivergedError(f"non-finite gradient for parameter {name!r}")
            adam_step(self.params[name], grad, self.opt[name])
        return value

    def predict_responses(self, path: Path) -> list[int]:
        """Arg-max response per step, encoding the path's own stimulus history."""
        batch = self._encode_path(path)
        outputs = self.forward(batch)
        if outputs.ndim == 3:
            outputs = outputs[0, : len(path)]
        return [int(i) for i in outputs.argmax(axis=-1)]

    def _encode_path(self, path: Path) -> EncodedBatch:
        spec = self.spec
        if self.layout == "window":
            rows = window_rows(path, spec.window, spec.num_modules, spec.output_width)
            inputs = rows.reshape(len(path), -1)
            return EncodedBatch(
                inputs=inputs,
                targets=np.zeros((len(path), spec.output_width)),
                mask=np.ones(len(path)),
                layout="window",
            )
        return to_sequence_batch([path], spec.num_modules, spec.output_width)


def build(spec: ModelSpec, rng: Rng) -> Model:
    """Construct and initialize a model; same spec and seed give identical weights."""
    from pathbench.networks.lstm import LstmNet
    from pathbench.networks.mlp import WindowMlp
    from pathbench.networks.tcn import TcnNet

    if spec.kind in ("tdnn", "morphognosis"):
        return WindowMlp(spec, rng)
    if spec.kind == "lstm":
        return LstmNet(spec, rng)
    return TcnNet(spec, rng)


def init_dense(rng: Rng, rows: int, cols: int) -> np.ndarray:
    return glorot_uniform(rng, (rows, cols), fan_in=rows, fan_out=cols)


def init_conv(rng: Rng, kernel: int, cin: int, cout: int) -> np.ndarray:
    return glorot_uniform(rng, (kernel, cin, cout), fan_in=kernel * cin, fan_out=kernel * cout)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_model(model: Model, path: str):
    """Write spec plus flat parameter arrays; order is the registry order."""
    doc = {
        "spec": asdict(model.spec),
        "order": list(model.params.keys()),
        "shapes": {name: list(p.shape) for name, p in model.params.items()},
        "params": {name: p.reshape(-1).tolist() for name, p in model.params.items()},
    }
    with open(path, "w") as handle:
        json.dump(doc, handle)
        handle.write("\n")


def load_model(path: str) -> Model:
    """Rebuild a checkpointed model; predictions match the saved one bit-exactly."""
    with open(path) as handle:
        doc = json.load(handle)
    spec_dict = dict(doc["spec"])
    spec_dict["dilations"] = tuple(spec_dict["dilations"])
    spec = ModelSpec(**spec_dict)
    model = build(spec, Rng(0))
    if list(model.params.keys()) != doc["order"]:
        raise ValueError("checkpoint parameter order does not match this architecture")
    for name in doc["order"]:
        shape = tuple(doc["shapes"][name])
        values = np.asarray(doc["params"][name], dtype=np.float64).reshape(shape)
        if model.params[name].shape != shape:
            raise ValueError(f"checkpoint shape {shape} != expected {model.params[name].shape}")
        model.params[name][...] = values
    return model
