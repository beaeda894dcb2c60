"""Dilated causal convolutional learner with residual blocks.

Each residual block runs two causal convolutions (left padding only, so an
output at step t never sees later steps) at one dilation, relu after each,
plus an identity or 1x1-projected shortcut. Block dilations grow through the
stack, giving a receptive field of 1 + (kernel-1) * sum(dilations). A
per-step linear head is trained with masked mean squared error.
"""

from __future__ import annotations

import numpy as np

from pathbench.composer.encoding import EncodedBatch
from pathbench.networks.base import Model, ModelSpec, TrainingDivergedError, init_conv, init_dense
from pathbench.numerics import Rng, loss


def causal_conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, dilation: int):
    """y[:, t] = sum_k x[:, t - (K-1-k)*dilation] @ w[k] + b, zero left padding."""
    npaths, steps, _ = x.shape
    kernel = w.shape[0]
    pad = (kernel - 1) * dilation
    xp = np.zeros((npaths, steps + pad, x.shape[2]))
    xp[:, pad:] = x
    y = np.broadcast_to(b, (npaths, steps, w.shape[2])).copy()
    for k in range(kernel):
        y += xp[:, k * dilation : k * dilation + steps] @ w[k]
    return y, xp


def causal_conv_backward(grad_y: np.ndarray, xp: np.ndarray, w: np.ndarray, dilation: int):
    steps = grad_y.shape[1]
    kernel = w.shape[0]
    pad = (kernel - 1) * dilation
    gw = np.zeros_like(w)
    gxp = np.zeros_like(xp)
    for k in range(kernel):
        seg = xp[:, k * dilation : k * dilation + steps]
        gw[k] = np.einsum("pti,pto->io", seg, grad_y)
        gxp[:, k * dilation : k * dilation + steps] += grad_y @ w[k].T
    gb = grad_y.sum(axis=(0, 1))
    return gxp[:, pad:], gw, gb


class TcnNet(Model):
    layout = "sequence"
    loss_kind = "mse"

    def __init__(self, spec: ModelSpec, rng: Rng):
        super().__init__(spec)
        s, f, v = spec.stimulus_width, spec.filters, spec.output_width
        for idx, _ in enumerate(spec.dilations):
            cin = s if idx == 0 else f
            self._add_param(f"block{idx}_w1", init_conv(rng, spec.kernel_size, cin, f))
            self._add_param(f"block{idx}_b1", np.zeros(f))
            self._add_param(f"block{idx}_w2", init_conv(rng, spec.kernel_size, f, f))
            self._add_param(f"block{idx}_b2", np.zeros(f))
            if cin != f:
                self._add_param(f"block{idx}_wp", init_dense(rng, cin, f))
        self._add_param("head_w", init_dense(rng, f, v))
        self._add_param("head_b", np.zeros(v))

    def _forward_full(self, batch: EncodedBatch):
        p = self.params
        x = batch.inputs
        caches = []
        for idx, dilation in enumerate(self.spec.dilations):
            z1, xp1 = causal_conv_forward(x, p[f"block{idx}_w1"], p[f"block{idx}_b1"], dilation)
            a1 = np.maximum(z1, 0.0)
            z2, xp2 = causal_conv_forward(a1, p[f"block{idx}_w2"], p[f"block{idx}_b2"], dilation)
            a2 = np.maximum(z2, 0.0)
            proj = f"block{idx}_wp" in p
            res = x @ p[f"block{idx}_wp"] if proj else x
            z3 = a2 + res
            out = np.maximum(z3, 0.0)
            caches.append({"x": x, "z1": z1, "xp1": xp1, "z2": z2, "xp2": xp2, "z3": z3})
            x = out
        y = x @ p["head_w"] + p["head_b"]
        return y, (caches, x)

    def forward(self, batch: EncodedBatch) -> np.ndarray:
        self._check_layout(batch)
        out, _ = self._forward_full(batch)
        return out

    def compute_gradients(self, batch: EncodedBatch):
        self._check_layout(batch)
        if batch.inputs.shape[1] > self.spec.receptive_field:
            raise TrainingDivergedError(
                f"sequence length {batch.inputs.shape[1]} exceeds receptive field "
                f"{self.spec.receptive_field}; deepen the dilation stack"
            )
        out, (caches, top) = self._forward_full(batch)
        value, grad_out = loss(self.loss_kind, out, batch.targets, batch.mask)

        p = self.params
        grads = {
            "head_w": np.einsum("ptf,ptv->fv", top, grad_out),
            "head_b": grad_out.sum(axis=(0, 1)),
        }
        gx = grad_out @ p["head_w"].T
        for idx in range(len(self.spec.dilations) - 1, -1, -1):
            cache = caches[idx]
            dilation = self.spec.dilations[idx]
            gz3 = gx * (cache["z3"] > 0.0)
            gz2 = gz3 * (cache["z2"] > 0.0)
            ga1, gw2, gb2 = causal_conv_backward(gz2, cache["xp2"], p[f"block{idx}_w2"], dilation)
            gz1 = ga1 * (cache["z1"] > 0.0)
            gx, gw1, gb1 = causal_conv_backward(gz1, cache["xp1"], p[f"block{idx}_w1"], dilation)
            if f"block{idx}_wp" in p:
                grads[f"block{idx}_wp"] = np.einsum("pti,pto->io", cache["x"], gz3)
                gx += gz3 @ p[f"block{idx}_wp"].T
            else:
                gx += gz3
            grads[f"block{idx}_w1"] = gw1
            grads[f"block{idx}_b1"] = gb1
            grads[f"block{idx}_w2"] = gw2
            grads[f"block{idx}_b2"] = gb2
        return value, grads
