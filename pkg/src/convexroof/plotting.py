"""Rendering of sweep and bench results to PNG files next to their CSV output."""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finite(rows, key):
    return np.array(
        [(r["param"], r[key]) for r in rows if r.get(key) is not None and math.isfinite(r[key])]
    ).reshape(-1, 2)


def render_sweep(rows, path, xlabel, title=None):
    """Entanglement vs sweep parameter; the oracle curve is dashed when present."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    refined = _finite(rows, "eof_refined")
    raw = _finite(rows, "eof_de")
    oracle = _finite(rows, "oracle")
    if raw.size:
        ax.plot(raw[:, 0], raw[:, 1], color="0.7", lw=1.0, label="DE")
    if refined.size:
        ax.plot(refined[:, 0], refined[:, 1], "o-", ms=3.5, lw=1.2,
                color="tab:blue", label="DE + BFGS")
    if oracle.size:
        ax.plot(oracle[:, 0], oracle[:, 1], "--", color="tab:red", lw=1.2, label="oracle")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("entanglement of formation")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_k_sweep(rows, path, title=None):
    """Best objective versus the decomposition size k."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ks = [r["k"] for r in rows]
    ax.plot(ks, [r["eof_de"] for r in rows], "s--", color="0.6", label="DE")
    if any(r.get("eof_refined") is not None for r in rows):
        ax.plot(ks, [r["eof_refined"] for r in rows], "o-", color="tab:blue",
                label="DE + BFGS")
    ax.set_xlabel("decomposition size k")
    ax.set_ylabel("entanglement of formation")
    ax.set_xticks(ks)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bench(rows, path, target=None):
    """Final objective error versus iteration budget, one curve per (F, CR)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    pairs = sorted({(r["F"], r["CR"]) for r in rows})
    for f_weight, crossover in pairs:
        pts = sorted(
            (r["iters"], r["error"] if target is None else abs(r["eof_de"] - target))
            for r in rows
            if (r["F"], r["CR"]) == (f_weight, crossover)
        )
        x = [p[0] for p in pts]
        y = [max(p[1], 1e-17) for p in pts]
        ax.loglog(x, y, "o-", label=f"F={f_weight:g}, CR={crossover:g}")
    ax.set_xlabel("iteration budget")
    ax.set_ylabel("final objective error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
