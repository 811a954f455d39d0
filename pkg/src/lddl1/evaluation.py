"""Evaluations on learned dictionaries: KNN on codes, overlap sweeps, and
representative-term reports."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceWarning, EmptyTrainingSet, LddError, VocabMismatch
from .overlap import DEFAULT_TAU, overlap_score, support
from .sc import ScProblem, infer_codes, init_dictionary, train

log = logging.getLogger(__name__)

VARIANTS = ("lddl1", "ldd", "l1", "none")

# reference numbers for 20-News, recorded next to our own measurements
REFERENCE_20NEWS = {
    "sc": {"test": 0.592, "gap": 0.119},
    "ldd-sc": {"test": 0.605, "gap": 0.108},
    "l1-sc": {"test": 0.606, "gap": 0.105},
    "lddl1-sc": {"test": 0.612, "gap": 0.099},
}


@dataclass
class KnnConfig:
    k: int = 5
    metric: str = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric not in ("euclidean", "cosine"):
            raise ValueError(f"unknown metric {self.metric!r}")


def _distances(train, q, metric):
    if metric == "euclidean":
        diff = train - q[:, None]
        return np.sum(diff * diff, axis=0)
    tn = np.linalg.norm(train, axis=0)
    qn = np.linalg.norm(q)
    denom = tn * qn
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(denom > 0, (q @ train) / np.where(denom > 0, denom, 1.0), 0.0)
    return 1.0 - cos


def knn_classify(train_codes, train_labels, test_codes, cfg: KnnConfig | None = None,
                 exclude_self: bool = False) -> np.ndarray:
    """Majority vote among the ``k`` nearest training columns.

    Equal distances go to the lower training index, equal votes to the
    smaller class id. With ``exclude_self`` the test set must be the training
    set and each query ignores its own column.
    """
    cfg = cfg or KnnConfig()
    train_codes = np.asarray(train_codes, dtype=float)
    test_codes = np.asarray(test_codes, dtype=float)
    y = np.asarray(train_labels, dtype=int)
    n_train = train_codes.shape[1]
    if n_train == 0:
        raise EmptyTrainingSet("no training columns")
    if y.size != n_train:
        raise ValueError(f"{y.size} labels for {n_train} training columns")
    avail = n_train - 1 if exclude_self else n_train
    if cfg.k > avail:
        raise ValueError(f"k={cfg.k} exceeds the {avail} available neighbours")
    classes = np.unique(y)
    preds = np.empty(test_codes.shape[1], dtype=int)
    for i in range(test_codes.shape[1]):
        dist = _distances(train_codes, test_codes[:, i], cfg.metric)
        if exclude_self:
            dist = dist.copy()
            dist[i] = np.inf
        nn = np.argsort(dist, kind="stable")[: cfg.k]
        votes = np.array([np.count_nonzero(y[nn] == c) for c in classes])
        preds[i] = classes[int(np.argmax(votes))]
    return preds


@dataclass
class AccuracyReport:
    train_acc: float
    test_acc: float
    gap: float

    def to_tsv(self) -> str:
        return ("split\taccuracy\tgap\n"
                f"train\t{self.train_acc!r}\t{self.gap!r}\n"
                f"test\t{self.test_acc!r}\t{self.gap!r}\n")


def accuracy_gap(W, lambda1: float, train_X, train_y, test_X, test_y,
                 cfg: KnnConfig | None = None, train_codes=None, lasso_opts=None):
    """KNN accuracy on inferred codes; train accuracy is leave-self-out.

    Returns ``(AccuracyReport, train_codes, test_codes)``.
    """
    cfg = cfg or KnnConfig()
    if train_y is None or test_y is None:
        raise ValueError("accuracy needs labels on both splits")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        A_tr = infer_codes(W, train_X, lambda1, lasso_opts, train_codes)
        A_te = infer_codes(W, test_X, lambda1, lasso_opts)
    train_y = np.asarray(train_y)
    test_y = np.asarray(test_y)
    tr_pred = knn_classify(A_tr, train_y, A_tr, cfg, exclude_self=True)
    te_pred = knn_classify(A_tr, train_y, A_te, cfg)
    tr_acc = float(np.mean(tr_pred == train_y))
    te_acc = float(np.mean(te_pred == test_y))
    return AccuracyReport(tr_acc, te_acc, tr_acc - te_acc), A_tr, A_te


def variant_weights(variant: str, lam: float) -> tuple:
    """(lambda3, lambda4) for a regularizer variant at strength ``lam``."""
    if variant == "lddl1":
        return lam, lam
    if variant == "ldd":
        return lam, 0.0
    if variant == "l1":
        return 0.0, lam
    if variant == "none":
        return 0.0, 0.0
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


@dataclass
class SweepResult:
    lambdas: list
    variant: str
    overlap_scores: list
    flags: list = field(default_factory=list)
    objective_traces: list = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["lambda\tvariant\toverlap\tflag"]
        for lam, ov, fl in zip(self.lambdas, self.overlap_scores, self.flags):
            lines.append(f"{lam!r}\t{self.variant}\t{ov!r}\t{fl}")
        return "\n".join(lines) + "\n"


def sweep_overlap(base: ScProblem, variant: str, lambdas, tau: float = DEFAULT_TAU,
                  W0=None) -> SweepResult:
    """Train one model per regularization strength and record overlap.

    Every point starts from the same initial dictionary. A point whose
    training fails is recorded as NaN with the error in ``flags``.
    """
    lambdas = [float(v) for v in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly increasing")
    W0 = init_dictionary(base.d, base.m, base.seed) if W0 is None else W0
    res = SweepResult(lambdas, variant, [], [], [])
    for lam in lambdas:
        l3, l4 = variant_weights(variant, lam)
        prob = replace(base, lambda3=l3, lambda4=l4)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                model = train(prob, W0)
        except LddError as exc:
            log.warning("sweep point lambda=%g failed: %s", lam, exc)
            res.overlap_scores.append(float("nan"))
            res.flags.append(f"error:{type(exc).__name__}")
            res.objective_traces.append([])
            continue
        res.overlap_scores.append(overlap_score(model.W, tau).aggregate)
        res.flags.append("ok" if model.converged else "not-converged")
        res.objective_traces.append(list(model.objective_trace))
    return res


@dataclass
class InterpretReport:
    rows: list          # per column: list of (term, weight)
    tau: float

    def to_text(self, columns=None) -> str:
        cols = range(len(self.rows)) if columns is None else columns
        labels = [str(c + 1) for c in cols]
        words = [", ".join(t for t, _ in self.rows[c]) for c in cols]
        w1 = max([len("Vector")] + [len(s) for s in labels])
        w2 = max([len("Representative Words")] + [len(s) for s in words])
        sep = "-" * (w1 + w2 + 3)
        out = [sep, f"{'Vector':^{w1}} | {'Representative Words':<{w2}}", sep]
        for a, b in zip(labels, words):
            out.append(f"{a:^{w1}} | {b:<{w2}}")
        out.append(sep)
        return "\n".join(out) + "\n"

    def to_tsv(self) -> str:
        lines = ["vector\trank\tterm\tweight"]
        for c, row in enumerate(self.rows):
            for r, (t, w) in enumerate(row):
                lines.append(f"{c}\t{r}\t{t}\t{w!r}")
        return "\n".join(lines) + "\n"


def interpret(W, vocab, tau: float = DEFAULT_TAU) -> InterpretReport:
    """Support terms of every column, ordered by decreasing |weight|."""
    W = np.asarray(W, dtype=float)
    terms = list(getattr(vocab, "terms", vocab))
    if len(terms) != W.shape[0]:
        raise VocabMismatch(f"vocabulary has {len(terms)} terms, dictionary has "
                            f"{W.shape[0]} rows")
    rows = []
    for j in range(W.shape[1]):
        idx = support(W[:, j], tau)
        order = idx[np.argsort(-np.abs(W[idx, j]), kind="stable")]
        rows.append([(terms[i], float(W[i, j])) for i in order])
    return InterpretReport(rows, float(tau))
