"""The LDD, L1 and combined LDD-L1 regularizers and their (sub)gradients.

The LDD value is ``tr(G) - logdet(G)`` with ``G = W^T W``. The constant
``-m`` of the divergence to the identity is left out, so the value of an
orthonormal set of ``m`` vectors is ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import EPS_PD, gram, inv_pd, logdet_pd


@dataclass(frozen=True)
class RegValue:
    ldd_term: float
    l1_term: float
    gamma: float

    @property
    def combined(self) -> float:
        return self.ldd_term + self.gamma * self.l1_term


def ldd_value(W, ridge: float = 0.0, eps: float = EPS_PD) -> float:
    G = gram(W)
    if ridge:
        G = G + ridge * np.eye(G.shape[0])
    return float(np.trace(G)) - logdet_pd(G, eps)


def ldd_gradient(W, ridge: float = 0.0, eps: float = EPS_PD) -> np.ndarray:
    """Gradient of :func:`ldd_value`: ``2W - 2W (W^T W)^{-1}``."""
    W = np.asarray(W, dtype=float)
    G = gram(W)
    if ridge:
        G = G + ridge * np.eye(G.shape[0])
    return 2.0 * W - 2.0 * W @ inv_pd(G, eps)


def l1_value(W) -> float:
    return float(np.sum(np.abs(W)))


def l1_subgradient(W) -> np.ndarray:
    """Entrywise sign, taking 0 at exact zeros."""
    return np.sign(np.asarray(W, dtype=float))


def lddl1_value(W, gamma: float, ridge: float = 0.0) -> RegValue:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return RegValue(ldd_value(W, ridge=ridge), l1_value(W), float(gamma))


def lddl1_subgradient(W, gamma: float, ridge: float = 0.0) -> np.ndarray:
    return ldd_gradient(W, ridge=ridge) + gamma * l1_subgradient(W)


def gamma_from_weights(lambda3: float, lambda4: float) -> float:
    """Inner L1 tradeoff implied by separate LDD/L1 weights.

    The sparse-coding objective weights the LDD part by ``lambda3 / 2`` and
    the L1 part by ``lambda4``; written as ``(lambda3/2) * Omega`` this gives
    ``gamma = lambda4 / (lambda3 / 2)``.
    """
    if lambda3 <= 0:
        raise ValueError("lambda3 must be positive to express gamma")
    return lambda4 / (lambda3 / 2.0)
