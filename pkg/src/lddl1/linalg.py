"""Dense kernels used by every solver.

Matrices are plain ``numpy`` arrays with one weight vector (or sample) per
column, so ``W[:, j]`` is the j-th basis vector.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve

from .errors import NotPositiveDefinite

EPS_PD = 1e-12


def gram(W: np.ndarray) -> np.ndarray:
    """Return ``W.T @ W`` symmetrized."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] < 1:
        raise ValueError("gram needs a 2-D matrix with at least one column")
    G = W.T @ W
    return 0.5 * (G + G.T)


def cholesky(G: np.ndarray, eps: float = EPS_PD) -> np.ndarray:
    """Lower Cholesky factor of a symmetric matrix.

    Raises NotPositiveDefinite when a pivot is <= ``eps`` (relative to the
    largest diagonal entry) or when the factorization fails outright.
    """
    G = np.asarray(G, dtype=float)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    piv = np.diag(L) ** 2
    scale = max(1.0, float(np.max(np.abs(np.diag(G)))) if G.size else 1.0)
    if piv.size and (not np.all(np.isfinite(piv)) or piv.min() <= eps * scale):
        raise NotPositiveDefinite(
            f"Cholesky pivot {piv.min():.3e} at or below {eps * scale:.3e}")
    return L


def logdet_pd(G: np.ndarray, eps: float = EPS_PD) -> float:
    """log det of a symmetric positive definite matrix via Cholesky."""
    L = cholesky(G, eps)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def inv_pd(G: np.ndarray, eps: float = EPS_PD) -> np.ndarray:
    L = cholesky(G, eps)
    Ginv = cho_solve((L, True), np.eye(G.shape[0]))
    return 0.5 * (Ginv + Ginv.T)


def _gram_factor(Wneg: np.ndarray, ridge: float | None, eps: float):
    G = gram(Wneg)
    if ridge:
        G = G + ridge * np.eye(G.shape[0])
    return cholesky(G, eps)


def projector_complement(Wneg: np.ndarray, ridge: float | None = None,
                         eps: float = EPS_PD) -> np.ndarray:
    """Dense projector onto the orthogonal complement of ``span(Wneg)``.

    ``M = I - Wneg (Wneg^T Wneg)^{-1} Wneg^T``. Only used by tests and
    diagnostics; solvers call :func:`project_onto_complement`.
    """
    Wneg = np.asarray(Wneg, dtype=float)
    d = Wneg.shape[0]
    if Wneg.shape[1] == 0:
        return np.eye(d)
    L = _gram_factor(Wneg, ridge, eps)
    P = Wneg @ cho_solve((L, True), Wneg.T)
    M = np.eye(d) - P
    return 0.5 * (M + M.T)


def project_onto_complement(Wneg: np.ndarray, b: np.ndarray,
                            ridge: float | None = None,
                            eps: float = EPS_PD) -> np.ndarray:
    """Apply the complement projector of ``Wneg`` to ``b`` with one solve."""
    Wneg = np.asarray(Wneg, dtype=float)
    b = np.asarray(b, dtype=float)
    if Wneg.shape[1] == 0:
        return b.copy()
    L = _gram_factor(Wneg, ridge, eps)
    coef = cho_solve((L, True), Wneg.T @ b)
    return b - Wneg @ coef


def project_with_fallback(Wneg: np.ndarray, b: np.ndarray,
                          ridge: float = 1e-8,
                          eps: float = EPS_PD) -> np.ndarray:
    """:func:`project_onto_complement`, retrying once with a ridge.

    A second failure propagates NotPositiveDefinite.
    """
    try:
        return project_onto_complement(Wneg, b, eps=eps)
    except NotPositiveDefinite:
        pass
    try:
        return project_onto_complement(Wneg, b, ridge=ridge, eps=eps)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(
            f"other columns are rank deficient even with ridge {ridge:g}: {exc}"
        ) from None
