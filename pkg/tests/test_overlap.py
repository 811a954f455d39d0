import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lddl1.errors import DimensionMismatch, TooFewVectors
from lddl1.overlap import overlap_score, pairwise_overlap, support


def set_oracle(W, tau):
    """Mean Jaccard over ordered pairs using Python sets."""
    m = W.shape[1]
    sets = [{i for i in range(W.shape[0]) if abs(W[i, j]) > tau} for j in range(m)]
    vals = []
    for i, j in itertools.permutations(range(m), 2):
        u = sets[i] | sets[j]
        vals.append(len(sets[i] & sets[j]) / len(u) if u else 0.0)
    return sum(vals) / len(vals)


def test_support_examples():
    assert support([0, 0, 0], 0).tolist() == []
    assert support([1, 0, 2], 0).tolist() == [0, 2]
    assert support([1e-9, 0.5], 1e-6).tolist() == [1]


def test_support_negative_tau():
    with pytest.raises(ValueError):
        support([1.0], -1)


def test_pairwise_examples():
    v = np.array([1.0, -2.0, 3.0])
    assert pairwise_overlap(v, v) == 1.0
    assert pairwise_overlap([1, 0], [0, 1]) == 0.0
    assert pairwise_overlap([1, 0, 2], [0, 3, 1], 0) == pytest.approx(1 / 3)
    assert pairwise_overlap([0, 0], [0, 0]) == 0.0


def test_pairwise_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        pairwise_overlap([1, 2], [1, 2, 3])


def test_score_examples():
    assert overlap_score(np.eye(4)).aggregate == 0.0
    v = np.array([1.0, 2.0, 3.0])
    assert overlap_score(np.column_stack([v, v])).aggregate == 1.0
    W = np.array([[1, 0, 1], [0, 3, 1], [2, 1, 0]], dtype=float)
    assert overlap_score(W, 0).aggregate == pytest.approx(1 / 3)


def test_score_too_few():
    with pytest.raises(TooFewVectors):
        overlap_score(np.ones((3, 1)))


def test_report_tsv():
    rep = overlap_score(np.eye(3))
    lines = rep.to_tsv().splitlines()
    assert lines[0] == "i\tj\toverlap"
    assert len(lines) == 1 + 3 + 1
    assert lines[-1] == "aggregate\t0.0"
    assert rep.support_sizes.tolist() == [1, 1, 1]
    assert np.all(np.tril(rep.pairwise) == 0)


sparse_mats = st.integers(2, 8).flatmap(lambda m: st.integers(1, 10).flatmap(
    lambda d: arrays(np.float64, (d, m), elements=st.sampled_from([0.0, 0.0, 1e-9, -0.3, 1.0, 2.5]))))


@settings(max_examples=100, deadline=None)
@given(sparse_mats)
def test_matches_set_oracle(W):
    assert overlap_score(W, 1e-6).aggregate == pytest.approx(set_oracle(W, 1e-6), abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(sparse_mats, st.integers(0, 2**31 - 1))
def test_permutation_and_scaling_invariance(W, seed):
    rng = np.random.default_rng(seed)
    base = overlap_score(W, 0).aggregate
    perm = W[:, rng.permutation(W.shape[1])]
    assert overlap_score(perm, 0).aggregate == pytest.approx(base, abs=1e-14)
    scale = rng.uniform(1.0, 5.0, W.shape[1]) * rng.choice([-1, 1], W.shape[1])
    assert overlap_score(W * scale, 1e-6).aggregate == pytest.approx(
        overlap_score(W, 1e-6).aggregate, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(-3, 3)), arrays(np.float64, 6, elements=st.floats(-3, 3)))
def test_pairwise_symmetric_and_bounded(a, b):
    v = pairwise_overlap(a, b)
    assert v == pairwise_overlap(b, a)
    assert 0.0 <= v <= 1.0
    if support(a).size:
        assert pairwise_overlap(a, a) == 1.0
