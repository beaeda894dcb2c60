"""Gated recurrent learner with exact backpropagation through time.

One recurrent layer of `hidden` memory cells (sigmoid input/forget/output
gates, tanh candidate and cell output) feeds a per-step linear head trained
with masked mean squared error against one-hot targets. Gate weights pack
in i, f, g, o order along the last axis.
"""

from __future__ import annotations

import numpy as np

from pathbench.composer.encoding import EncodedBatch
from pathbench.networks.base import Model, ModelSpec, init_dense
from pathbench.numerics import Rng, loss


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


class LstmNet(Model):
    layout = "sequence"
    loss_kind = "mse"

    def __init__(self, spec: ModelSpec, rng: Rng):
        super().__init__(spec)
        s, h, v = spec.stimulus_width, spec.hidden, spec.output_width
        self._add_param("wx", init_dense(rng, s, 4 * h))
        self._add_param("wh", init_dense(rng, h, 4 * h))
        self._add_param("b", np.zeros(4 * h))
        self._add_param("wy", init_dense(rng, h, v))
        self._add_param("by", np.zeros(v))

    def _forward_full(self, batch: EncodedBatch):
        p = self.params
        x = batch.inputs
        npaths, steps, _ = x.shape
        h = self.spec.hidden

        # Input projection for every step at once; only h @ wh stays in the loop.
        zx = x.reshape(npaths * steps, -1) @ p["wx"]
        zx = zx.reshape(npaths, steps, 4 * h) + p["b"]

        gates = np.zeros((npaths, steps, 4 * h))
        cells = np.zeros((npaths, steps, h))
        tanh_c = np.zeros((npaths, steps, h))
        hidden = np.zeros((npaths, steps, h))
        h_prev = np.zeros((npaths, h))
        c_prev = np.zeros((npaths, h))
        for t in range(steps):
            z = zx[:, t] + h_prev @ p["wh"]
            i = _sigmoid(z[:, :h])
            f = _sigmoid(z[:, h : 2 * h])
            g = np.tanh(z[:, 2 * h : 3 * h])
            o = _sigmoid(z[:, 3 * h :])
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h_t = o * tc
            gates[:, t] = np.concatenate([i, f, g, o], axis=1)
            cells[:, t] = c
            tanh_c[:, t] = tc
            hidden[:, t] = h_t
            h_prev, c_prev = h_t, c

        out = hidden @ p["wy"] + p["by"]
        cache = {"x": x, "gates": gates, "cells": cells, "tanh_c": tanh_c, "hidden": hidden}
        return out, cache

    def forward(self, batch: EncodedBatch) -> np.ndarray:
        self._check_layout(batch)
        out, _ = self._forward_full(batch)
        return out

    def compute_gradients(self, batch: EncodedBatch):
        self._check_layout(batch)
        out, cache = self._forward_full(batch)
        value, grad_out = loss(self.loss_kind, out, batch.targets, batch.mask)

        p = self.params
        x, gates = cache["x"], cache["gates"]
        cells, tanh_c, hidden = cache["cells"], cache["tanh_c"], cache["hidden"]
        npaths, steps, _ = x.shape
        h = self.spec.hidden

        gwy = np.einsum("pth,ptv->hv", hidden, grad_out)
        gby = grad_out.sum(axis=(0, 1))
        gh_from_head = grad_out @ p["wy"].T

        gwx = np.zeros_like(p["wx"])
        gwh = np.zeros_like(p["wh"])
        gb = np.zeros_like(p["b"])
        dh_next = np.zeros((npaths, h))
        dc_next = np.zeros((npaths, h))
        for t in range(steps - 1, -1, -1):
            i = gates[:, t, :h]
            f = gates[:, t, h : 2 * h]
            g = gates[:, t, 2 * h : 3 * h]
            o = gates[:, t, 3 * h :]
            c_prev = cells[:, t - 1] if t > 0 else np.zeros((npaths, h))
            h_prev = hidden[:, t - 1] if t > 0 else np.zeros((npaths, h))

            dh = gh_from_head[:, t] + dh_next
            dc = dh * o * (1.0 - tanh_c[:, t] ** 2) + dc_next
            dz = np.concatenate(
                [
                    dc * g * i * (1.0 - i),
                    dc * c_prev * f * (1.0 - f),
                    dc * i * (1.0 - g * g),
                    dh * tanh_c[:, t] * o * (1.0 - o),
                ],
                axis=1,
            )
            gwx += x[:, t].T @ dz
            gwh += h_prev.T @ dz
            gb += dz.sum(axis=0)
            dh_next = dz @ p["wh"].T
            dc_next = dc * f

        grads = {"wx": gwx, "wh": gwh, "b": gb, "wy": gwy, "by": gby}
        return value, grads
