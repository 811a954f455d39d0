"""LDD-L1 regularized sparse coding.

Objective, for data ``X`` (d x n), dictionary ``W`` (d x m) and codes ``A``
(m x n)::

    0.5*||X - W A||_F^2 + lambda1*|A|_1 + lambda2/2*||W||_F^2
        + lambda3/2*(tr(W^T W) - logdet(W^T W)) + lambda4*|W|_1

Training alternates a Lasso step on ``A`` with an ADMM solve for ``W``. The
ADMM splits ``W = W_tilde`` so the L1 term lands on ``W_tilde`` (a
soft-threshold), and the smooth remainder in ``W`` is minimized by cyclic
coordinate descent over columns, each column having a closed-form minimizer.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.linalg import cho_solve

from .errors import ConvergenceWarning, DegenerateDirection, NotPositiveDefinite
from .lasso import SolverOptions, soft_threshold, solve_lasso_batch
from .linalg import EPS_PD, cholesky, gram, inv_pd, logdet_pd

log = logging.getLogger(__name__)


@dataclass
class ScProblem:
    X: np.ndarray
    m: int
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 0.1
    lambda4: float = 0.001
    rho: float = 1.0
    seed: int = 0
    tol_outer: float = 1e-5
    max_outer: int = 200
    tol_admm: float = 1e-4
    max_admm: int = 200
    tol_cd: float = 1e-6
    max_sweeps: int = 50
    ridge: float = 1e-8
    adaptive_rho: bool = False
    lasso: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be a d x n matrix")
        d = self.X.shape[0]
        if self.m < 2:
            raise ValueError("need m >= 2 basis vectors")
        if self.m > d:
            raise ValueError(f"m={self.m} exceeds feature dimension d={d}; "
                             "logdet(W^T W) would be undefined")
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.max_outer < 1 or self.max_admm < 1 or self.max_sweeps < 1:
            raise ValueError("iteration caps must be >= 1")

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def settings(self) -> dict:
        """Scalar configuration, suitable for a run snapshot."""
        out = {f.name: getattr(self, f.name) for f in fields(self)
               if f.name not in ("X", "lasso")}
        for f in fields(SolverOptions):
            out[f"lasso_{f.name}"] = getattr(self.lasso, f.name)
        return out


@dataclass
class AdmmState:
    W: np.ndarray
    W_tilde: np.ndarray
    U: np.ndarray
    primal_residual: float = np.inf
    dual_residual: float = np.inf
    iters: int = 0
    converged: bool = False
    rho: float | None = None
    residual_history: list = field(default_factory=list)


@dataclass
class CdWorkspace:
    j: int
    b: np.ndarray
    c: float
    s: float
    gamma_roots: tuple
    Mb: np.ndarray
    gamma: float


@dataclass
class ScModel:
    W: np.ndarray               # reported dictionary (sparse split variable at exit)
    A: np.ndarray
    objective_trace: list
    iters: int
    converged: bool
    W_admm: np.ndarray | None = None
    problem: ScProblem | None = None
    admm_converged: bool = True


# ---------------------------------------------------------------- objectives

def _data_terms(X, W, A, XAt=None, AAt=None, xx=None):
    if XAt is None:
        R = X - W @ A
        return 0.5 * float(np.sum(R * R))
    return 0.5 * (xx - 2.0 * float(np.sum(W * XAt)) + float(np.sum(gram(W) * AAt)))


def _ldd(W, eps=EPS_PD):
    G = gram(W)
    return float(np.trace(G)) - logdet_pd(G, eps)


def dictionary_objective(prob: ScProblem, W, A, XAt=None, AAt=None, xx=None) -> float:
    """The W-dependent part of the objective (codes fixed)."""
    val = _data_terms(prob.X, W, A, XAt, AAt, xx)
    val += 0.5 * prob.lambda2 * float(np.sum(W * W))
    if prob.lambda3:
        val += 0.5 * prob.lambda3 * _ldd(W)
    val += prob.lambda4 * float(np.sum(np.abs(W)))
    return val


def objective(prob: ScProblem, W, A) -> float:
    """Full sparse-coding objective."""
    W = np.asarray(W, dtype=float)
    A = np.asarray(A, dtype=float)
    return dictionary_objective(prob, W, A) + prob.lambda1 * float(np.sum(np.abs(A)))


def admm_w_objective(prob: ScProblem, W, A, W_tilde, U, XAt=None, AAt=None, xx=None) -> float:
    """Smooth W-subproblem minimized by coordinate descent inside ADMM."""
    val = _data_terms(prob.X, W, A, XAt, AAt, xx)
    val += 0.5 * prob.lambda2 * float(np.sum(W * W))
    if prob.lambda3:
        val += 0.5 * prob.lambda3 * _ldd(W)
    D = W - W_tilde
    val += float(np.sum(U * W)) + 0.5 * prob.rho * float(np.sum(D * D))
    return val


def column_objective(b, c, lambda3, w, Mw) -> float:
    """Column subproblem value up to a constant independent of the column.

    ``0.5*c*||w||^2 - b.w - lambda3/2 * log(w^T M w)`` where ``Mw`` is the
    component of ``w`` orthogonal to the other columns.
    """
    val = 0.5 * c * float(w @ w) - float(b @ w)
    if lambda3:
        q = float(Mw @ Mw)
        if q <= 0.0:
            return np.inf
        val -= 0.5 * lambda3 * np.log(q)
    return val


# ---------------------------------------------------------------- code step

def update_codes(prob: ScProblem, W, A_init=None, opts: SolverOptions | None = None):
    """Lasso for every column of X against the fixed dictionary."""
    W = np.asarray(W, dtype=float)
    opts = opts or prob.lasso
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        res = solve_lasso_batch(W, prob.X, prob.lambda1, A_init, opts)
    if caught:
        log.warning("code update hit the Lasso iteration cap (%d)", opts.max_iters)
    A = res.coef
    if A_init is not None:
        A_init = np.asarray(A_init, dtype=float)
        # accelerated PGD is not monotone; never hand back something worse
        f_new = np.sum(np.abs(prob.X - W @ A) ** 2, axis=0) * 0.5 \
            + prob.lambda1 * np.sum(np.abs(A), axis=0)
        f_old = np.sum(np.abs(prob.X - W @ A_init) ** 2, axis=0) * 0.5 \
            + prob.lambda1 * np.sum(np.abs(A_init), axis=0)
        worse = f_new > f_old
        if np.any(worse):
            A = A.copy()
            A[:, worse] = A_init[:, worse]
    return A


def infer_codes(W, X_new, lambda1: float, opts: SolverOptions | None = None, A0=None):
    """Codes of new data under a learned dictionary."""
    res = solve_lasso_batch(W, X_new, lambda1, A0, opts or SolverOptions())
    return res.coef


# ---------------------------------------------------------------- ADMM pieces

def update_w_tilde(state: AdmmState, lambda4: float, rho: float) -> np.ndarray:
    """Exact minimizer of ``lambda4|Wt|_1 - <U, Wt> + rho/2 ||W - Wt||^2``."""
    return soft_threshold(state.W + state.U / rho, lambda4 / rho)


def update_dual(state: AdmmState) -> np.ndarray:
    return state.U + (state.W - state.W_tilde)


def _column_rhs(XAt, AAt, W, U, W_tilde, j, rho):
    return (XAt[:, j] - W @ AAt[:, j] + W[:, j] * AAt[j, j]
            - U[:, j] + rho * W_tilde[:, j])


def gamma_roots(c: float, s: float, lambda3: float):
    """Roots of ``c^2 g^2 - (2 c lambda3 + s) g + lambda3^2 = 0``.

    Returns ``((g_plus, g_plus*c - lambda3), (g_minus, g_minus*c - lambda3))``
    with the shifted values computed without cancellation.
    """
    disc = np.sqrt(s * s + 4.0 * c * lambda3 * s)
    g_plus = ((2.0 * c * lambda3 + s) + disc) / (2.0 * c * c)
    shift_plus = (s + disc) / (2.0 * c)
    g_minus = lambda3 * lambda3 / (c * c * g_plus)
    shift_minus = -2.0 * lambda3 * s / (s + disc)
    return (g_plus, shift_plus), (g_minus, shift_minus)


def _solve_column(b, c, Mb, lambda3):
    """Closed-form column minimizer given ``b``, ``c`` and ``M b``.

    Returns ``(w, gamma, roots)``. On the range of M the stationarity system
    is scaled by ``c - lambda3/gamma``; on its complement by ``c``.
    """
    s = float(Mb @ Mb)
    Pb = b - Mb
    roots = gamma_roots(c, s, lambda3)
    best = None
    for g, shift in roots:
        if shift == 0.0:
            continue
        k = g / shift
        w = Pb / c + k * Mb
        f = column_objective(b, c, lambda3, w, k * Mb)
        # ties go to the first (plus) root
        if best is None or f < best[0]:
            best = (f, w, g)
    if best is None:
        raise DegenerateDirection("column right-hand side has no component "
                                  "orthogonal to the other columns")
    return best[1], best[2], s, tuple(r[0] for r in roots)


def cd_column_update(prob: ScProblem, W, A, W_tilde, U, j: int, *,
                     rng=None, XAt=None, AAt=None, G=None,
                     return_workspace: bool = False):
    """Minimize the ADMM W-subproblem over column ``j`` with the rest fixed."""
    W = np.asarray(W, dtype=float)
    if XAt is None:
        XAt = prob.X @ A.T
    if AAt is None:
        AAt = A @ A.T
    lam3 = prob.lambda3
    c = AAt[j, j] + prob.lambda2 + lam3 + prob.rho
    b = _column_rhs(XAt, AAt, W, U, W_tilde, j, prob.rho)
    if lam3 == 0:
        w = b / c
        if return_workspace:
            return w, CdWorkspace(j, b, c, float("nan"), (), np.full_like(b, np.nan), float("nan"))
        return w

    if G is None:
        G = gram(W)
    keep = np.arange(W.shape[1]) != j
    Wneg = W[:, keep]
    Gneg = G[np.ix_(keep, keep)]
    L = _factor_with_ridge(Gneg, prob.ridge)

    def project(v):
        return v - Wneg @ cho_solve((L, True), Wneg.T @ v)

    Mb = project(b)
    s = float(Mb @ Mb)
    bnorm = float(np.linalg.norm(b))
    if not s > (1e-8 * max(bnorm, 1e-150)) ** 2:
        rng = rng if rng is not None else np.random.default_rng(j)
        r = project(rng.standard_normal(b.shape[0]))
        r /= np.linalg.norm(r)
        b = b + 1e-8 * max(bnorm, 1.0) * r
        Mb = project(b)
        log.warning("column %d: right-hand side lies in the span of the other "
                    "columns; perturbed along a random complement direction", j)
    w, g, s, roots = _solve_column(b, c, Mb, lam3)
    if return_workspace:
        return w, CdWorkspace(j, b, c, s, roots, Mb, g)
    return w


def _factor_with_ridge(Gneg, ridge):
    try:
        return cholesky(Gneg)
    except NotPositiveDefinite:
        pass
    try:
        return cholesky(Gneg + ridge * np.eye(Gneg.shape[0]))
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(
            f"other columns are rank deficient even with ridge {ridge:g}: {exc}") from None


def _downdate(H, j):
    """Inverse Gram of all columns but ``j``, embedded with a zero row/col ``j``."""
    h = H[:, j]
    return H - np.outer(h, h) / H[j, j]


def cd_sweeps(prob: ScProblem, W, A, W_tilde, U, XAt=None, AAt=None, xx=None, rng=None):
    """Cyclic coordinate descent over columns until the subproblem settles.

    Keeps the inverse Gram of ``W`` current through rank-one updates so each
    column costs O(dm + m^2); the inverse is rebuilt at the start of every
    sweep. Returns ``(W, sweeps)``.
    """
    W = np.array(W, dtype=float)
    if XAt is None:
        XAt = prob.X @ A.T
        AAt = A @ A.T
        xx = float(np.sum(prob.X * prob.X))
    m = W.shape[1]
    lam3, rho = prob.lambda3, prob.rho
    diagA = np.diag(AAt)
    f_prev = admm_w_objective(prob, W, A, W_tilde, U, XAt, AAt, xx)
    sweeps = 0
    for sweeps in range(1, prob.max_sweeps + 1):
        H = None
        if lam3:
            try:
                H = inv_pd(gram(W))
            except NotPositiveDefinite:
                H = None
        for j in range(m):
            if not lam3:
                W[:, j] = _column_rhs(XAt, AAt, W, U, W_tilde, j, rho) / (
                    diagA[j] + prob.lambda2 + rho)
                continue
            if H is None or not H[j, j] > 0:
                # near-singular Gram: slow path with ridge fallback
                W[:, j] = cd_column_update(prob, W, A, W_tilde, U, j, rng=rng,
                                           XAt=XAt, AAt=AAt)
                H = None
                continue
            c = diagA[j] + prob.lambda2 + lam3 + rho
            b = _column_rhs(XAt, AAt, W, U, W_tilde, j, rho)
            K = _downdate(H, j)
            Mb = b - W @ (K @ (W.T @ b))
            s = float(Mb @ Mb)
            if not s > (1e-8 * max(float(np.linalg.norm(b)), 1e-150)) ** 2:
                W[:, j] = cd_column_update(prob, W, A, W_tilde, U, j, rng=rng,
                                           XAt=XAt, AAt=AAt)
                H = None
                continue
            w, _, _, _ = _solve_column(b, c, Mb, lam3)
            W[:, j] = w
            v = K @ (W.T @ w)
            Mw = w - W @ v
            gam = float(Mw @ Mw)
            if not gam > 0:
                H = None
                continue
            v[j] -= 1.0
            H = K + np.outer(v, v) / gam
        f = admm_w_objective(prob, W, A, W_tilde, U, XAt, AAt, xx)
        if abs(f_prev - f) <= prob.tol_cd * (1.0 + abs(f)):
            break
        f_prev = f
    return W, sweeps


def solve_w(prob: ScProblem, W_init, A, state: AdmmState | None = None):
    """ADMM solve of the dictionary step with codes fixed.

    Each iteration updates the sparse copy ``W_tilde``, then the dual ``U``,
    then ``W`` by coordinate descent. Stops once
    ``||W - W_tilde||_F / ||W||_F < tol_admm``.

    The returned dictionary is ``W_tilde`` (exactly sparse) unless that would
    raise the dictionary objective above its value at ``W_init``; then ``W``
    is tried, and failing that ``W_init`` is kept. Returns ``(W, state)``.
    """
    A = np.asarray(A, dtype=float)
    W = np.array(W_init, dtype=float)
    XAt = prob.X @ A.T
    AAt = A @ A.T
    xx = float(np.sum(prob.X * prob.X))
    U = np.zeros_like(W) if state is None else np.array(state.U, dtype=float)
    rng = np.random.default_rng(prob.seed)
    st = AdmmState(W=W, W_tilde=W.copy(), U=U)
    f_entry = dictionary_objective(prob, W_init, A, XAt, AAt, xx)

    work = prob
    W_tilde_prev = None
    for it in range(1, prob.max_admm + 1):
        st.W_tilde = update_w_tilde(st, work.lambda4, work.rho)
        st.U = update_dual(st)
        st.W, _ = cd_sweeps(work, st.W, A, st.W_tilde, st.U, XAt, AAt, xx, rng)
        wn = float(np.linalg.norm(st.W))
        st.primal_residual = float(np.linalg.norm(st.W - st.W_tilde)) / max(wn, 1e-300)
        if W_tilde_prev is not None:
            st.dual_residual = work.rho * float(np.linalg.norm(st.W_tilde - W_tilde_prev))
        W_tilde_prev = st.W_tilde
        st.residual_history.append(st.primal_residual)
        st.iters = it
        if st.primal_residual < prob.tol_admm:
            st.converged = True
            break
        if prob.adaptive_rho and it > 1:
            # residual balancing; U is unscaled so it carries over unchanged
            r = st.primal_residual * wn
            if r > 10.0 * st.dual_residual:
                work = replace(work, rho=2.0 * work.rho)
            elif st.dual_residual > 10.0 * r:
                work = replace(work, rho=0.5 * work.rho)
    st.rho = work.rho
    if not st.converged:
        warnings.warn(f"ADMM stopped after {st.iters} iterations with relative "
                      f"residual {st.primal_residual:.2e}", ConvergenceWarning,
                      stacklevel=2)

    slack = 1e-8 * (1.0 + abs(f_entry))
    for cand in (st.W_tilde, st.W):
        try:
            f = dictionary_objective(prob, cand, A, XAt, AAt, xx)
        except NotPositiveDefinite:
            continue
        if f <= f_entry + slack:
            return cand.copy(), st
    log.info("dictionary step did not improve the objective; keeping entry value")
    return np.array(W_init, dtype=float), st


# ---------------------------------------------------------------- training

def init_dictionary(d: int, m: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((d, m))
    return W / np.linalg.norm(W, axis=0, keepdims=True)


def train(prob: ScProblem, W0=None) -> ScModel:
    """Alternate code and dictionary updates until the objective settles."""
    W = init_dictionary(prob.d, prob.m, prob.seed) if W0 is None else np.array(W0, dtype=float)
    A = np.zeros((prob.m, prob.n))
    state = None
    trace = [objective(prob, W, A)]
    converged = False
    it = 0
    for it in range(1, prob.max_outer + 1):
        try:
            A = update_codes(prob, W, A)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                W, state = solve_w(prob, W, A, state)
        except (NotPositiveDefinite, DegenerateDirection) as exc:
            raise type(exc)(f"outer iteration {it}: {exc}") from exc
        f = objective(prob, W, A)
        trace.append(f)
        log.debug("outer %d objective %.10g admm iters %d", it, f, state.iters)
        if abs(trace[-2] - f) < prob.tol_outer * max(abs(trace[-2]), 1e-300):
            # a stalled ADMM solve also leaves the objective flat; don't call that converged
            converged = state.converged
            break
    if not converged:
        why = "last ADMM solve did not reach consensus" if it < prob.max_outer \
            else f"stopped after {it} outer iterations"
        warnings.warn(f"training did not converge: {why}", ConvergenceWarning, stacklevel=2)
    return ScModel(W=W, A=A, objective_trace=trace, iters=it, converged=converged,
                   W_admm=None if state is None else state.W.copy(), problem=prob,
                   admm_converged=state is not None and state.converged)
