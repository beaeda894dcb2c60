"""One-hot encodings and the two batch layouts the networks consume.

Sequence layout keeps paths as zero-padded [paths, maxlen, width] arrays with
a step-validity mask. Window layout flattens every step into one fixed-width
row holding the current stimulus in the last slot and its predecessors before
it, zero-filled ahead of the path start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pathbench.composer.paths import Path


@dataclass
class EncodedBatch:
    inputs: np.ndarray
    targets: np.ndarray
    mask: np.ndarray
    layout: str  # "sequence" or "window"


def encode_one_hot(path: Path, num_modules: int, alphabet: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-step one-hot rows: inputs [len, S] and targets [len, V].

    An input row concatenates one-hot(path_id) of width num_modules+1 with
    one-hot(value) of width V, so every row carries exactly two 1s.
    """
    id_width = num_modules + 1
    s = id_width + alphabet
    inputs = np.zeros((len(path), s), dtype=np.float64)
    targets = np.zeros((len(path), alphabet), dtype=np.float64)
    for i, ((pid, value), response) in enumerate(zip(path.stimuli, path.responses)):
        if not 0 <= pid <= num_modules:
            raise ValueError(f"step {i}: path id {pid} outside [0, {num_modules}]")
        if not 0 <= value < alphabet:
            raise ValueError(f"step {i}: value {value} outside [0, {alphabet - 1}]")
        if not 0 <= response < alphabet:
            raise ValueError(f"step {i}: response {response} outside [0, {alphabet - 1}]")
        inputs[i, pid] = 1.0
        inputs[i, id_width + value] = 1.0
        targets[i, response] = 1.0
    return inputs, targets


def to_sequence_batch(paths: list[Path], num_modules: int, alphabet: int) -> EncodedBatch:
    """Zero-padded [paths, maxlen, S] inputs with per-step validity mask."""
    if not paths:
        raise ValueError("empty path list")
    maxlen = max(len(p) for p in paths)
    s = num_modules + 1 + alphabet
    inputs = np.zeros((len(paths), maxlen, s), dtype=np.float64)
    targets = np.zeros((len(paths), maxlen, alphabet), dtype=np.float64)
    mask = np.zeros((len(paths), maxlen), dtype=np.float64)
    for i, path in enumerate(paths):
        x, t = encode_one_hot(path, num_modules, alphabet)
        inputs[i, : len(path)] = x
        targets[i, : len(path)] = t
        mask[i, : len(path)] = 1.0
    return EncodedBatch(inputs, targets, mask, "sequence")


def window_rows(path: Path, window: int, num_modules: int, alphabet: int) -> np.ndarray:
    """One [len, window, S] stack of sliding windows for a single path.

    Slot window-1 holds the current stimulus, slot window-2 the previous
    one, and so on; slots before the path start stay zero.
    """
    if window < len(path):
        raise ValueError(f"window {window} smaller than path length {len(path)}")
    x, _ = encode_one_hot(path, num_modules, alphabet)
    s = x.shape[1]
    rows = np.zeros((len(path), window, s), dtype=np.float64)
    for step in range(len(path)):
        history = x[: step + 1]  # oldest..current
        rows[step, window - len(history) :] = history
    return rows


def to_window_batch(
    paths: list[Path], window: int, num_modules: int, alphabet: int
) -> EncodedBatch:
    """One row per path step, flattened to [sum(len), window * S]."""
    if not paths:
        raise ValueError("empty path list")
    maxlen = max(len(p) for p in paths)
    if window < maxlen:
        raise ValueError(f"window {window} smaller than longest path ({maxlen})")
    all_rows = []
    all_targets = []
    for path in paths:
        rows = window_rows(path, window, num_modules, alphabet)
        _, t = encode_one_hot(path, num_modules, alphabet)
        all_rows.append(rows.reshape(len(path), -1))
        all_targets.append(t)
    inputs = np.concatenate(all_rows, axis=0)
    targets = np.concatenate(all_targets, axis=0)
    mask = np.ones(inputs.shape[0], dtype=np.float64)
    return EncodedBatch(inputs, targets, mask, "window")
