"""Bar-chart rendering for experiment reports.

One figure per regime: a panel per generation config, grouped bars of mean
per-step test error (with standard-deviation whiskers) per network and
disruption kind, plus a baseline-versus-comprehensive contrast figure.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from pathbench.harness import ResultsTable

_BAR_METRICS = (
    ("test_error_insertion", "insertion"),
    ("test_error_substitution", "substitution"),
    ("test_error_deletion", "deletion"),
    ("test_error_overall", "overall"),
)

_NETWORK_COLORS = {
    "tdnn": "#4C72B0",
    "lstm": "#DD8452",
    "tcn": "#55A868",
    "morphognosis": "#C44E52",
}


def _configs(table: ResultsTable) -> list[tuple[int, int]]:
    return sorted({(key[2], key[3]) for key in table.groups})


def _networks(table: ResultsTable) -> list[str]:
    return sorted({key[0] for key in table.groups})


def _regime_figure(table: ResultsTable, regime: str, path: str):
    configs = _configs(table)
    networks = _networks(table)
    ncols = min(2, len(configs))
    nrows = (len(configs) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6.4 * ncols, 4.2 * nrows), squeeze=False)
    for index, (base_length, num_modules) in enumerate(configs):
        ax = axes[index // ncols][index % ncols]
        positions = np.arange(len(_BAR_METRICS))
        width = 0.8 / max(1, len(networks))
        for n_idx, network in enumerate(networks):
            key = (network, regime, base_length, num_modules)
            if key not in table.groups:
                continue
            stats = table.groups[key]
            means = [stats.mean(metric) for metric, _ in _BAR_METRICS]
            stds = [stats.std(metric) for metric, _ in _BAR_METRICS]
            ax.bar(
                positions + n_idx * width,
                means,
                width,
                yerr=stds,
                capsize=2,
                label=network,
                color=_NETWORK_COLORS.get(network),
            )
        ax.set_xticks(positions + width * (len(networks) - 1) / 2)
        ax.set_xticklabels([label for _, label in _BAR_METRICS])
        ax.set_ylim(0, 1)
        ax.set_ylabel("per-step error rate")
        ax.set_title(f"base {base_length}, modules {num_modules}")
        if index == 0:
            ax.legend(fontsize=8)
    for index in range(len(configs), nrows * ncols):
        axes[index // ncols][index % ncols].axis("off")
    fig.suptitle(f"{regime} testing")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _contrast_figure(table: ResultsTable, path: str):
    """Overall test error, baseline next to comprehensive, per config and network."""
    configs = _configs(table)
    networks = _networks(table)
    ncols = min(2, len(configs))
    nrows = (len(configs) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6.4 * ncols, 4.2 * nrows), squeeze=False)
    for index, (base_length, num_modules) in enumerate(configs):
        ax = axes[index // ncols][index % ncols]
        positions = np.arange(len(networks))
        for r_idx, regime in enumerate(("baseline", "comprehensive")):
            means, stds = [], []
            for network in networks:
                key = (network, regime, base_length, num_modules)
                stats = table.groups.get(key)
                means.append(stats.mean("test_error_overall") if stats else np.nan)
                stds.append(stats.std("test_error_overall") if stats else 0.0)
            ax.bar(positions + r_idx * 0.4, means, 0.4, yerr=stds, capsize=2, label=regime)
        ax.set_xticks(positions + 0.2)
        ax.set_xticklabels(networks, rotation=15)
        ax.set_ylim(0, 1)
        ax.set_ylabel("overall test error rate")
        ax.set_title(f"base {base_length}, modules {num_modules}")
        if index == 0:
            ax.legend(fontsize=8)
    for index in range(len(configs), nrows * ncols):
        axes[index // ncols][index % ncols].axis("off")
    fig.suptitle("baseline vs comprehensive")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_figures(table: ResultsTable, out_dir: str) -> list[str]:
    """Write all report figures under out_dir; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    regimes = sorted({key[1] for key in table.groups})
    for regime in regimes:
        path = os.path.join(out_dir, f"{regime}_testing.png")
        _regime_figure(table, regime, path)
        written.append(path)
    if {"baseline", "comprehensive"} <= set(regimes):
        path = os.path.join(out_dir, "regime_contrast.png")
        _contrast_figure(table, path)
        written.append(path)
    return written
