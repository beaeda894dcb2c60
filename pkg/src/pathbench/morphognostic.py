"""Interval-based temporal feature encoding for the hierarchical MLP learner.

A stimulus window is compressed into a fixed set of time intervals: every
history lag starts with weight 1, a skew pass shifts weight toward older
lags, each interval then absorbs floor(weight) consecutive lags, and the
stimuli landing in one interval are summed and normalized so the largest
element is 1. The current step keeps its own unaggregated slot, so recent
inputs stay at full resolution while old history coarsens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SKEW = 0.5


@dataclass(frozen=True)
class SkewWeights:
    """Per-lag interval weights after skewing; lag 0 is the most recent."""

    oldest_lag: int  # weights cover lags 0..oldest_lag
    skew: float
    weights: np.ndarray

    def oldest_first(self) -> np.ndarray:
        return self.weights[::-1]


@dataclass(frozen=True)
class IntervalSpan:
    """A contiguous, inclusive lag range [newest_lag, oldest_lag]."""

    oldest_lag: int
    newest_lag: int

    def __post_init__(self):
        if not 0 <= self.newest_lag <= self.oldest_lag:
            raise ValueError(f"invalid span [{self.newest_lag}, {self.oldest_lag}]")

    @property
    def size(self) -> int:
        return self.oldest_lag - self.newest_lag + 1


def skew_weights(oldest_lag: int, skew: float) -> SkewWeights:
    """Shift interval weight toward older lags.

    All oldest_lag+1 slots start at 1. Then, for t from oldest_lag down
    to 1: w = skew * (sum of weights below t); slot t gains w and every
    slot below t loses w/t. Total weight is conserved at oldest_lag+1.
    """
    if oldest_lag < 1:
        raise ValueError(f"oldest_lag must be >= 1, got {oldest_lag}")
    if not 0.0 <= skew <= 1.0:
        raise ValueError(f"skew must be in [0, 1], got {skew}")
    weights = np.ones(oldest_lag + 1, dtype=np.float64)
    for t in range(oldest_lag, 0, -1):
        w = weights[:t].sum() * skew
        weights[t] += w
        weights[:t] -= w / t
    return SkewWeights(oldest_lag=oldest_lag, skew=skew, weights=weights)


def intervals_from_weights(weights: SkewWeights, steps: int) -> list[IntervalSpan]:
    """Group `steps` history lags into intervals sized by floored weights.

    Walking oldest-first, each weight slot claims floor(weight) consecutive
    lags; empty claims are dropped. Lags still unassigned once the floors
    run out become singleton intervals at the newest positions, keeping
    full resolution for recent steps. The spans partition [0, steps-1].
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    sizes: list[int] = []
    remaining = steps
    for w in weights.oldest_first():
        if remaining == 0:
            break
        size = min(int(np.floor(w)), remaining)
        if size > 0:
            sizes.append(size)
            remaining -= size
    sizes.extend([1] * remaining)

    spans = []
    hi = steps - 1
    for size in sizes:
        spans.append(IntervalSpan(oldest_lag=hi, newest_lag=hi - size + 1))
        hi -= size
    return spans


def aggregate(window: np.ndarray, spans: list[IntervalSpan]) -> np.ndarray:
    """Sum each span's stimulus rows and normalize the sum to max 1.

    `window` is ordered oldest to newest with the current step's row last;
    the history rows cover lags steps-1 .. 0, so row index i holds lag
    steps-1-i. The current row passes through untouched in the final slot.
    All-zero spans (padding before the sequence start) stay zero.
    """
    window = np.asarray(window, dtype=np.float64)
    steps = sum(span.size for span in spans)
    if window.ndim != 2 or window.shape[0] != steps + 1:
        raise ValueError(
            f"window must be [{steps + 1}, S] for these spans, got {window.shape}"
        )
    pieces = []
    for span in spans:
        lo = steps - 1 - span.oldest_lag
        hi = steps - 1 - span.newest_lag
        summed = window[lo : hi + 1].sum(axis=0)
        peak = summed.max()
        pieces.append(summed / peak if peak > 0 else summed)
    pieces.append(window[-1])
    return np.concatenate(pieces)


def morphognostic_encode(history: np.ndarray, t_steps: int, skew: float) -> np.ndarray:
    """Encode a path's stimulus history (current step last) as one feature row.

    The window spans t_steps prior lags plus the current step; history
    shorter than that is zero-padded at the old end.
    """
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 2 or history.shape[0] < 1:
        raise ValueError(f"history must be a nonempty [steps, S] array, got {history.shape}")
    spans = intervals_from_weights(skew_weights(t_steps, skew), t_steps)
    window = np.zeros((t_steps + 1, history.shape[1]), dtype=np.float64)
    take = min(history.shape[0], t_steps + 1)
    window[t_steps + 1 - take :] = history[history.shape[0] - take :]
    return aggregate(window, spans)


def encoded_width(t_steps: int, skew: float, stimulus_width: int) -> int:
    """Feature-row width for a given window setup: (intervals + 1) * S."""
    spans = intervals_from_weights(skew_weights(t_steps, skew), t_steps)
    return (len(spans) + 1) * stimulus_width


def encode_windows(windows: np.ndarray, spans: list[IntervalSpan]) -> np.ndarray:
    """Vectorized aggregate() over a [rows, steps+1, S] stack of windows."""
    windows = np.asarray(windows, dtype=np.float64)
    steps = sum(span.size for span in spans)
    if windows.ndim != 3 or windows.shape[1] != steps + 1:
        raise ValueError(
            f"windows must be [rows, {steps + 1}, S] for these spans, got {windows.shape}"
        )
    pieces = []
    for span in spans:
        lo = steps - 1 - span.oldest_lag
        hi = steps - 1 - span.newest_lag
        summed = windows[:, lo : hi + 1, :].sum(axis=1)
        peak = summed.max(axis=1, keepdims=True)
        pieces.append(np.divide(summed, peak, out=summed, where=peak > 0))
    pieces.append(windows[:, -1, :])
    return np.concatenate(pieces, axis=1)
