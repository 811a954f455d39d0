import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lddl1.errors import EmptyTrainingSet, VocabMismatch
from lddl1.evaluation import (InterpretReport, KnnConfig, SweepResult, accuracy_gap,
                              interpret, knn_classify, sweep_overlap, variant_weights)
from lddl1.sc import ScProblem


def brute_knn(train, y, q, k):
    # independent oracle: sort (distance, index), count votes, break ties by class
    d = [(float(np.sum((train[:, j] - q) ** 2)), j) for j in range(train.shape[1])]
    nn = [j for _, j in sorted(d)[:k]]
    votes = {}
    for j in nn:
        votes[int(y[j])] = votes.get(int(y[j]), 0) + 1
    best = max(votes.values())
    return min(c for c, v in votes.items() if v == best)


def test_knn_examples():
    train = np.array([[0.0, 1.0, 10.0, 11.0]])
    y = np.array([0, 0, 1, 1])
    assert knn_classify(train, y, np.array([[0.5, 10.5]]), KnnConfig(k=1)).tolist() == [0, 1]
    # equidistant neighbours: the lower training index wins
    assert knn_classify(np.array([[-1.0, 1.0]]), [1, 0], np.array([[0.0]]),
                        KnnConfig(k=1)).tolist() == [1]
    # tied votes: the smaller class wins
    assert knn_classify(np.array([[-1.0, 1.0]]), [1, 0], np.array([[0.0]]),
                        KnnConfig(k=2)).tolist() == [0]


def test_knn_leave_self_out():
    train = np.array([[0.0, 0.1, 5.0]])
    y = np.array([0, 0, 1])
    pred = knn_classify(train, y, train, KnnConfig(k=1), exclude_self=True)
    assert pred.tolist() == [0, 0, 0]


def test_knn_errors():
    with pytest.raises(EmptyTrainingSet):
        knn_classify(np.zeros((2, 0)), [], np.zeros((2, 1)))
    with pytest.raises(ValueError):
        knn_classify(np.zeros((2, 3)), [0, 1, 0], np.zeros((2, 1)), KnnConfig(k=4))
    with pytest.raises(ValueError):
        KnnConfig(k=0)
    with pytest.raises(ValueError):
        KnnConfig(metric="manhattan")


def test_cosine_metric():
    train = np.array([[1.0, 0.0], [0.0, 1.0]])
    q = np.array([[5.0], [0.1]])
    assert knn_classify(train, [3, 7], q, KnnConfig(k=1, metric="cosine")).tolist() == [3]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_knn_matches_brute_force(seed, k):
    rng = np.random.default_rng(seed)
    train = rng.integers(-2, 3, (2, 12)).astype(float)
    y = rng.integers(0, 3, 12)
    q = rng.integers(-2, 3, (2, 5)).astype(float)
    got = knn_classify(train, y, q, KnnConfig(k=k))
    assert got.tolist() == [brute_knn(train, y, q[:, i], k) for i in range(5)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_knn_query_permutation(seed):
    rng = np.random.default_rng(seed)
    train = rng.standard_normal((3, 15))
    y = rng.integers(0, 3, 15)
    q = rng.standard_normal((3, 6))
    perm = rng.permutation(6)
    a = knn_classify(train, y, q)
    b = knn_classify(train, y, q[:, perm])
    assert np.array_equal(a[perm], b)


def test_accuracy_gap_separable():
    rng = np.random.default_rng(0)
    W = np.eye(4)
    def blob(n):
        y = np.arange(n) % 2
        X = np.where(y == 0, 1.0, 0.0) * np.array([5, 5, 0, 0])[:, None] \
            + np.where(y == 1, 1.0, 0.0) * np.array([0, 0, 5, 5])[:, None]
        return X + 0.05 * rng.standard_normal((4, n)), y
    Xtr, ytr = blob(20)
    Xte, yte = blob(10)
    rep, A_tr, A_te = accuracy_gap(W, 0.01, Xtr, ytr, Xte, yte, KnnConfig(k=3))
    assert (rep.train_acc, rep.test_acc, rep.gap) == (1.0, 1.0, 0.0)
    assert A_tr.shape == (4, 20) and A_te.shape == (4, 10)
    assert rep.to_tsv().startswith("split\taccuracy\tgap\ntrain\t1.0\t0.0\n")
    with pytest.raises(ValueError):
        accuracy_gap(W, 0.01, Xtr, None, Xte, yte)


def test_variant_weights():
    assert variant_weights("lddl1", 0.5) == (0.5, 0.5)
    assert variant_weights("ldd", 0.5) == (0.5, 0.0)
    assert variant_weights("l1", 0.5) == (0.0, 0.5)
    assert variant_weights("none", 0.5) == (0.0, 0.0)
    with pytest.raises(ValueError):
        variant_weights("l2", 1.0)


def test_interpret_examples():
    W = np.zeros((6, 2))
    W[4, 0] = 1.0
    W[[1, 2, 5], 1] = [0.2, -0.9, 0.5]
    rep = interpret(W, ["a", "b", "c", "d", "e", "f"])
    assert rep.rows[0] == [("e", 1.0)]
    assert [t for t, _ in rep.rows[1]] == ["c", "f", "b"]
    assert interpret(W, list("abcdef"), tau=10.0).rows == [[], []]
    with pytest.raises(VocabMismatch):
        interpret(W, ["a"])


def test_interpret_report_formats():
    rep = InterpretReport([[("gpu", 0.5), ("card", 0.25)], [("god", -1.0)]], 1e-6)
    sep = "-" * 29
    assert rep.to_text() == "\n".join([
        sep,
        "Vector | Representative Words",
        sep,
        "  1    | gpu, card           ",
        "  2    | god                 ",
        sep,
    ]) + "\n"
    assert rep.to_text([1]).count("\n") == 5
    assert rep.to_tsv().splitlines() == ["vector\trank\tterm\tweight", "0\t0\tgpu\t0.5",
                                         "0\t1\tcard\t0.25", "1\t0\tgod\t-1.0"]


def test_sweep_small_and_deterministic(rng):
    X = rng.standard_normal((10, 30))
    base = ScProblem(X=X, m=3, lambda1=0.1, lambda2=0.1, lambda3=0.0, lambda4=0.0,
                     max_outer=20, seed=1)
    a = sweep_overlap(base, "lddl1", [0.01, 0.1])
    b = sweep_overlap(base, "lddl1", [0.01, 0.1])
    assert a.overlap_scores == b.overlap_scores
    assert a.objective_traces == b.objective_traces
    assert len(a.flags) == 2 and all(0 <= v <= 1 for v in a.overlap_scores)
    with pytest.raises(ValueError):
        sweep_overlap(base, "lddl1", [0.1, 0.01])


def test_sweep_tsv():
    r = SweepResult([0.1, 1.0], "ldd", [1.0, 0.5], ["ok", "not-converged"])
    assert r.to_tsv() == ("lambda\tvariant\toverlap\tflag\n0.1\tldd\t1.0\tok\n"
                          "1.0\tldd\t0.5\tnot-converged\n")
