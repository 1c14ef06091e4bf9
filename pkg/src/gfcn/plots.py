"""Report figures rendered beside the delimited outputs.

Every writer strips the renderer's version stamp from the PNG metadata so a
rerun with identical inputs produces a byte-identical file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fairing import transfer

_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def save_transfer_plot(path, s_values, lam_max: float = 2.0) -> None:
    """Filter response 1/(1+s*lambda) over the operator spectrum."""
    lam = np.linspace(0.0, lam_max, 400)
    fig, ax = plt.subplots(figsize=(5.5, 3.5), constrained_layout=True)
    for s in s_values:
        ax.plot(lam, transfer(float(s), lam), label=f"s={s:g}")
    ax.set_xlabel("eigenvalue")
    ax.set_ylabel("response")
    ax.set_ylim(0.0, 1.05)
    ax.legend(frameon=False)
    ax.set_title("smoothing filter response")
    _save(fig, path)


def save_history_plot(path, history) -> None:
    """Training and validation loss curves from (epoch, train, val) rows."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5), constrained_layout=True)
    if history:
        epochs = [h[0] for h in history]
        ax.plot(epochs, [h[1] for h in history], label="train")
        vals = np.array([h[2] for h in history], dtype=float)
        if np.isfinite(vals).any():
            ax.plot(epochs, vals, label="validation")
        ax.legend(frameon=False)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title("training history")
    _save(fig, path)


def save_experiment_plot(path, summary) -> None:
    """Per-seed test AUCs with the mean and +/- one standard deviation."""
    seeds = [r.seed for r in summary.results]
    aucs = [r.auc for r in summary.results]
    fig, ax = plt.subplots(figsize=(5.5, 3.5), constrained_layout=True)
    ax.axhspan(
        summary.mean_auc - summary.std_auc,
        summary.mean_auc + summary.std_auc,
        alpha=0.15,
        color="tab:blue",
        lw=0,
    )
    ax.axhline(summary.mean_auc, color="tab:blue", lw=1)
    ax.plot(seeds, aucs, "o", color="tab:orange")
    ax.set_xlabel("seed")
    ax.set_ylabel("test AUC")
    ax.set_ylim(0.0, 1.02)
    ax.set_title(f"{summary.dataset}, label rate {summary.label_rate:g}")
    _save(fig, path)


def save_sweep_plot(path, rows, param: str) -> None:
    """Mean AUC (with std bars) per swept value, one curve per label rate."""
    by_rate: dict = {}
    for rate, value, summary in rows:
        by_rate.setdefault(rate, []).append((value, summary))
    fig, ax = plt.subplots(figsize=(5.5, 3.5), constrained_layout=True)
    for rate in sorted(by_rate):
        cells = by_rate[rate]
        xs = [v for v, _ in cells]
        ys = [s.mean_auc for _, s in cells]
        es = [s.std_auc for _, s in cells]
        ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=f"rate {rate:g}")
    if param == "beta":
        ax.set_xscale("log")
    ax.set_xlabel(param)
    ax.set_ylabel("mean test AUC")
    ax.legend(frameon=False)
    ax.set_title(f"sensitivity to {param}")
    _save(fig, path)
