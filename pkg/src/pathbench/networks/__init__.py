"""The four sequence learners behind one model interface."""

from pathbench.networks.base import (
    KINDS,
    Model,
    ModelSpec,
    TrainingDivergedError,
    build,
    load_model,
    save_model,
)
from pathbench.networks.lstm import LstmNet
from pathbench.networks.mlp import WindowMlp
from pathbench.networks.tcn import TcnNet

__all__ = [
    "KINDS",
    "LstmNet",
    "Model",
    "ModelSpec",
    "TcnNet",
    "TrainingDivergedError",
    "WindowMlp",
    "build",
    "load_model",
    "save_model",
]
