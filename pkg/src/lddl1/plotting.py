"""Figures written next to the TSV outputs of the CLI.

Uses the non-interactive Agg backend; every function writes one file and
closes its figure.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}

LABELS = {"lddl1": "LDD-L1", "ldd": "LDD", "l1": "L1", "none": "none"}
MARKERS = {"lddl1": "o", "ldd": "s", "l1": "^", "none": "x"}


def _save(fig, path):
    # fixed metadata keeps reruns byte-stable
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)


def plot_sweep(results, path):
    """Overlap score against regularization strength, one line per variant."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.6))
        for res in results:
            ax.plot(res.lambdas, res.overlap_scores, marker=MARKERS.get(res.variant, "o"),
                    label=LABELS.get(res.variant, res.variant))
        ax.set_xscale("log")
        ax.set_xlabel("regularization parameter")
        ax.set_ylabel("overlap score")
        ax.set_ylim(-0.02, 1.05)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_objective(trace, path, title=None):
    trace = np.asarray(trace, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.6))
        ax.plot(np.arange(trace.size), trace, lw=1.2)
        ax.set_xlabel("outer iteration")
        ax.set_ylabel("objective")
        if title:
            ax.set_title(title)
        _save(fig, path)


def plot_supports(W, path, tau=1e-6, max_vectors=50):
    """Dot map of the supports of the first ``max_vectors`` columns."""
    W = np.asarray(W)[:, :max_vectors]
    rows, cols = np.nonzero(np.abs(W) > tau)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 2.4))
        ax.scatter(rows, cols, s=3, c="k", marker="s", linewidths=0)
        ax.set_xlim(-0.5, W.shape[0] - 0.5)
        ax.set_ylim(-0.5, W.shape[1] - 0.5)
        ax.set_xlabel("feature")
        ax.set_ylabel("basis vector")
        _save(fig, path)


def plot_nn_trace(trace, path):
    ov = np.asarray(trace.overlap)
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(6.4, 2.4))
        a1.plot(trace.objective, lw=1.2)
        a1.set_xlabel("epoch")
        a1.set_ylabel("objective")
        for l in range(ov.shape[1] if ov.ndim == 2 else 0):
            a2.plot(ov[:, l], lw=1.2, label=f"layer {l}")
        a2.set_xlabel("epoch")
        a2.set_ylabel("overlap score")
        if ov.ndim == 2 and ov.shape[1]:
            a2.legend(frameon=False)
        _save(fig, path)
