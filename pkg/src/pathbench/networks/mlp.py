"""Sliding-window MLP: the plain (tdnn) and interval-encoded (morphognosis) kinds.

Both consume window-layout batches. The tdnn kind feeds the raw flattened
window to a relu/relu/sigmoid dense stack trained with binary cross entropy;
the morphognosis kind first compresses the window's history lags into
normalized time intervals, then uses the identical stack.
"""

from __future__ import annotations

import numpy as np

from pathbench import morphognostic
from pathbench.composer.encoding import EncodedBatch
from pathbench.networks.base import Model, ModelSpec, init_dense
from pathbench.numerics import Rng, dense_backward, dense_forward, loss


class WindowMlp(Model):
    layout = "window"
    loss_kind = "bce"

    def __init__(self, spec: ModelSpec, rng: Rng):
        super().__init__(spec)
        s = spec.stimulus_width
        if spec.kind == "morphognosis":
            self.spans = morphognostic.intervals_from_weights(
                morphognostic.skew_weights(spec.window - 1, spec.skew), spec.window - 1
            )
            in_width = (len(self.spans) + 1) * s
        else:
            self.spans = None
            in_width = spec.window * s
        self.in_width = in_width
        self._add_param("w0", init_dense(rng, in_width, spec.hidden))
        self._add_param("b0", np.zeros(spec.hidden))
        self._add_param("w1", init_dense(rng, spec.hidden, spec.hidden))
        self._add_param("b1", np.zeros(spec.hidden))
        self._add_param("w2", init_dense(rng, spec.hidden, spec.output_width))
        self._add_param("b2", np.zeros(spec.output_width))

    def _features(self, inputs: np.ndarray) -> np.ndarray:
        if self.spans is None:
            return inputs
        windows = inputs.reshape(inputs.shape[0], self.spec.window, self.spec.stimulus_width)
        return morphognostic.encode_windows(windows, self.spans)

    def _forward_full(self, batch: EncodedBatch):
        p = self.params
        x = self._features(batch.inputs)
        h0, c0 = dense_forward(x, p["w0"], p["b0"], "relu")
        h1, c1 = dense_forward(h0, p["w1"], p["b1"], "relu")
        out, c2 = dense_forward(h1, p["w2"], p["b2"], "sigmoid")
        return out, (c0, c1, c2)

    def forward(self, batch: EncodedBatch) -> np.ndarray:
        self._check_layout(batch)
        out, _ = self._forward_full(batch)
        return out

    def compute_gradients(self, batch: EncodedBatch):
        self._check_layout(batch)
        out, (c0, c1, c2) = self._forward_full(batch)
        value, grad_out = loss(self.loss_kind, out, batch.targets, batch.mask)
        gh1, gw2, gb2 = dense_backward(c2, grad_out)
        gh0, gw1, gb1 = dense_backward(c1, gh1)
        _, gw0, gb0 = dense_backward(c0, gh0)
        grads = {"w0": gw0, "b0": gb0, "w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}
        return value, grads
