"""Supports of weight vectors and the pairwise-Jaccard overlap score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooFewVectors

DEFAULT_TAU = 1e-6


def support(w, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Sorted indices ``i`` with ``|w[i]| > tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    w = np.asarray(w, dtype=float).ravel()
    return np.flatnonzero(np.abs(w) > tau)


def pairwise_overlap(wi, wj, tau: float = DEFAULT_TAU) -> float:
    """Jaccard index of the supports of ``wi`` and ``wj``.

    Two empty supports overlap by 0.
    """
    wi = np.asarray(wi, dtype=float).ravel()
    wj = np.asarray(wj, dtype=float).ravel()
    if wi.shape != wj.shape:
        raise DimensionMismatch(f"vector lengths differ: {wi.size} vs {wj.size}")
    si = np.abs(wi) > tau
    sj = np.abs(wj) > tau
    union = int(np.count_nonzero(si | sj))
    if union == 0:
        return 0.0
    return np.count_nonzero(si & sj) / union


@dataclass
class OverlapReport:
    pairwise: np.ndarray       # m x m, upper triangle filled, rest zero
    aggregate: float
    support_sizes: np.ndarray
    threshold: float

    def pairs(self):
        m = self.pairwise.shape[0]
        for i in range(m):
            for j in range(i + 1, m):
                yield i, j, float(self.pairwise[i, j])

    def to_tsv(self) -> str:
        lines = ["i\tj\toverlap"]
        lines += [f"{i}\t{j}\t{v!r}" for i, j, v in self.pairs()]
        lines.append(f"aggregate\t{self.aggregate!r}")
        return "\n".join(lines) + "\n"


def overlap_score(W, tau: float = DEFAULT_TAU) -> OverlapReport:
    """Mean pairwise Jaccard overlap over all ordered pairs of columns."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] < 2:
        raise TooFewVectors("overlap score needs at least two columns")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    S = (np.abs(W) > tau).astype(np.int64)
    inter = S.T @ S
    sizes = np.diag(inter).copy()
    union = sizes[:, None] + sizes[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        jac = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
    m = W.shape[1]
    iu = np.triu_indices(m, k=1)
    pairwise = np.zeros((m, m))
    pairwise[iu] = jac[iu]
    # fixed summation order over (i<j) pairs keeps the aggregate reproducible
    total = 0.0
    for v in jac[iu]:
        total += float(v)
    aggregate = total / (m * (m - 1) / 2)
    return OverlapReport(pairwise, aggregate, sizes, float(tau))
