"""Proximal gradient solver for ``min_z 0.5*||y - B z||^2 + lam*|z|_1``.

The batched entry point solves one independent problem per column of ``Y``
with a shared design, which is how sparse codes are inferred.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceWarning, DimensionMismatch


@dataclass
class SolverOptions:
    max_iters: int = 1000
    tol: float = 1e-7
    step_rule: str = "fixed"       # "fixed" (1/L, halved on increase) or "backtracking"
    acceleration: bool = False
    power_iters: int = 50
    window: int = 3

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


@dataclass
class LassoResult:
    coef: np.ndarray
    objective: np.ndarray | float
    n_iter: int
    converged: bool


def soft_threshold(v, t: float) -> np.ndarray:
    """Entrywise ``sign(v) * max(|v| - t, 0)``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


prox_matrix_l1 = soft_threshold


def lipschitz_constant(BtB: np.ndarray, n_iter: int = 50) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration."""
    k = BtB.shape[0]
    if k == 0:
        return 0.0
    v = np.ones(k) / np.sqrt(k)
    lam = 0.0
    for _ in range(n_iter):
        u = BtB @ v
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            return 0.0
        lam = float(v @ u)
        v = u / nrm
    return max(lam, float(v @ (BtB @ v)))


def lasso_objective(B, y, z, lam) -> np.ndarray | float:
    r = np.asarray(y) - np.asarray(B) @ np.asarray(z)
    return 0.5 * np.sum(r * r, axis=0) + lam * np.sum(np.abs(z), axis=0)


def solve_lasso_batch(B, Y, lam: float, Z0=None,
                      opts: SolverOptions | None = None) -> LassoResult:
    """Solve the Lasso for every column of ``Y`` against design ``B``."""
    opts = opts or SolverOptions()
    B = np.asarray(B, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if B.shape[0] != Y.shape[0]:
        raise DimensionMismatch(
            f"design has {B.shape[0]} rows but target has {Y.shape[0]}")
    k, n = B.shape[1], Y.shape[1]
    Z = np.zeros((k, n)) if Z0 is None else np.array(Z0, dtype=float)
    if Z.shape != (k, n):
        raise DimensionMismatch(f"initial iterate has shape {Z.shape}, want {(k, n)}")

    BtB = B.T @ B
    BtY = B.T @ Y
    yy = 0.5 * np.sum(Y * Y, axis=0)

    def obj(Z):
        return (0.5 * np.sum(Z * (BtB @ Z), axis=0) - np.sum(Z * BtY, axis=0)
                + yy + lam * np.sum(np.abs(Z), axis=0))

    L = lipschitz_constant(BtB, opts.power_iters)
    if L == 0.0:
        Z = np.zeros((k, n))
        return LassoResult(Z, obj(Z), 0, True)
    step = 1.0 / L

    f = obj(Z)
    history = [f]
    Zprev, t = Z, 1.0
    Yk = Z
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        base = Yk if opts.acceleration else Z
        grad = BtB @ base - BtY
        while True:
            Znew = soft_threshold(base - step * grad, step * lam)
            fnew = obj(Znew)
            if opts.acceleration:
                break
            bad = fnew > f + 1e-12 * (1.0 + np.abs(f))
            if opts.step_rule == "backtracking":
                D = Znew - base
                fb = obj(base) - lam * np.sum(np.abs(base), axis=0)
                quad = (fb + np.sum(grad * D, axis=0) + np.sum(D * D, axis=0) / (2 * step)
                        + lam * np.sum(np.abs(Znew), axis=0))
                bad = bad | (fnew > quad + 1e-12 * (1.0 + np.abs(quad)))
            if not np.any(bad) or step < 1e-16 / L:
                break
            step *= 0.5
        if opts.acceleration:
            tnew = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            Yk = Znew + ((t - 1.0) / tnew) * (Znew - Zprev)
            Zprev, t = Znew, tnew
        Z, f = Znew, fnew
        history.append(f)
        if len(history) > opts.window:
            old = history[-1 - opts.window]
            if np.all(np.abs(old - f) <= opts.tol * (1.0 + np.abs(f))):
                converged = True
                break
    if not converged:
        warnings.warn(f"Lasso stopped after {it} iterations without converging",
                      ConvergenceWarning, stacklevel=2)
    return LassoResult(Z, f, it, converged)


def solve_lasso(B, y, lam: float, z0=None,
                opts: SolverOptions | None = None) -> LassoResult:
    """Single-target version of :func:`solve_lasso_batch`."""
    y = np.asarray(y, dtype=float)
    z0 = None if z0 is None else np.asarray(z0, dtype=float)[:, None]
    res = solve_lasso_batch(B, y[:, None], lam, z0, opts)
    return LassoResult(res.coef[:, 0], float(res.objective[0]), res.n_iter,
                       res.converged)
