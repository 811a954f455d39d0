"""Text ingestion and plain-text file formats.

Matrix files hold one matrix row per line after a ``rows cols`` header.
Values are written with ``repr`` so they read back bit-identically. A sparse
variant starts with a ``# sparse`` line, then the ``rows cols`` header, then
``row col value`` triplets (zero-based).
"""

from __future__ import annotations

import logging
import math
import os
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import EmptyCorpus, LengthMismatch, ParseError, ShapeError

log = logging.getLogger(__name__)

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass
class Corpus:
    documents: list
    labels: list | None = None
    class_names: list | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.documents):
            raise LengthMismatch(f"{len(self.labels)} labels for "
                                 f"{len(self.documents)} documents")


@dataclass
class Vocabulary:
    terms: list
    doc_freq: list

    def __len__(self):
        return len(self.terms)

    def index(self) -> dict:
        return {t: i for i, t in enumerate(self.terms)}


@dataclass
class LabeledMatrix:
    X: np.ndarray
    labels: np.ndarray | None = None
    vocab: Vocabulary | None = None


def tokenize(text: str) -> list:
    """Lowercase and split on anything that is not a letter or digit."""
    return _TOKEN.findall(text.lower())


def build_vocab(corpus: Corpus, stopwords=(), size: int = 1000) -> Vocabulary:
    """Top ``size`` terms by document frequency, ties broken alphabetically."""
    if size < 1:
        raise ValueError("vocabulary size must be >= 1")
    if not corpus.documents:
        raise EmptyCorpus("corpus has no documents")
    stop = {s.lower() for s in stopwords}
    df = Counter()
    for doc in corpus.documents:
        df.update({t for t in tokenize(doc) if t not in stop})
    if not df:
        raise EmptyCorpus("no terms left after tokenization and stopword removal")
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:size]
    return Vocabulary([t for t, _ in ranked], [c for _, c in ranked])


def tfidf(corpus: Corpus, vocab: Vocabulary) -> LabeledMatrix:
    """Raw-count tf times ``log((1+n)/(1+df)) + 1``; columns scaled to unit L2.

    Document frequencies are recomputed on ``corpus``. Documents without any
    vocabulary term stay as zero columns.
    """
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    index = vocab.index()
    n = len(corpus.documents)
    X = np.zeros((len(vocab), n))
    for i, doc in enumerate(corpus.documents):
        for t, cnt in Counter(tokenize(doc)).items():
            k = index.get(t)
            if k is not None:
                X[k, i] = cnt
    df = np.count_nonzero(X, axis=1)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    X *= idf[:, None]
    norms = np.linalg.norm(X, axis=0)
    empty = norms == 0
    if np.any(empty):
        log.warning("%d documents contain no vocabulary term; kept as zero columns",
                    int(empty.sum()))
    X[:, ~empty] /= norms[~empty]
    labels = None if corpus.labels is None else np.asarray(corpus.labels, dtype=int)
    return LabeledMatrix(X, labels, vocab)


# ---------------------------------------------------------------- files

def write_matrix(path, M, sparse: bool = False) -> None:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("write_matrix expects a 2-D array")
    rows, cols = M.shape
    with open(path, "w") as fh:
        if sparse:
            fh.write("# sparse\n")
            fh.write(f"{rows} {cols}\n")
            for i, j in zip(*np.nonzero(M)):
                fh.write(f"{i} {j} {float(M[i, j])!r}\n")
        else:
            fh.write(f"{rows} {cols}\n")
            for row in M:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _parse_shape(line, lineno):
    parts = line.split()
    if len(parts) != 2:
        raise ParseError("expected header 'rows cols'", lineno)
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError("header must hold two integers", lineno) from None
    if rows < 0 or cols < 0:
        raise ParseError("negative dimensions", lineno)
    return rows, cols


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        lines = [(k + 1, ln.strip()) for k, ln in enumerate(fh)]
    lines = [(k, ln) for k, ln in lines if ln]
    if not lines:
        raise ParseError("empty matrix file", 1)
    sparse = lines[0][1].lower() == "# sparse"
    if sparse:
        lines = lines[1:]
        if not lines:
            raise ParseError("missing header after '# sparse'", 2)
    rows, cols = _parse_shape(lines[0][1], lines[0][0])
    body = lines[1:]
    M = np.zeros((rows, cols))
    if sparse:
        for k, ln in body:
            parts = ln.split()
            if len(parts) != 3:
                raise ShapeError("sparse entries need 'row col value'", k)
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(f"cannot parse {ln!r}", k) from None
            if not (0 <= i < rows and 0 <= j < cols):
                raise ShapeError(f"entry ({i}, {j}) outside {rows}x{cols}", k)
            M[i, j] = v
        return M
    if len(body) != rows:
        raise ShapeError(f"header says {rows} rows, found {len(body)}",
                         body[-1][0] if body else lines[0][0])
    for r, (k, ln) in enumerate(body):
        parts = ln.split()
        if len(parts) != cols:
            raise ShapeError(f"row has {len(parts)} values, expected {cols}", k)
        try:
            M[r] = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-numeric value in {ln!r}", k) from None
    return M


def read_labels(path) -> np.ndarray:
    out = []
    with open(path) as fh:
        for k, ln in enumerate(fh, 1):
            ln = ln.strip()
            if not ln:
                continue
            try:
                out.append(int(ln))
            except ValueError:
                raise ParseError(f"label {ln!r} is not an integer", k) from None
    return np.asarray(out, dtype=int)


def write_labels(path, labels) -> None:
    with open(path, "w") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


def read_stopwords(path) -> set:
    with open(path) as fh:
        return {ln.strip().lower() for ln in fh if ln.strip()}


def write_vocab(path, vocab: Vocabulary) -> None:
    with open(path, "w") as fh:
        for t, c in zip(vocab.terms, vocab.doc_freq):
            fh.write(f"{t}\t{c}\n")


def read_vocab(path) -> Vocabulary:
    terms, dfs = [], []
    with open(path) as fh:
        for k, ln in enumerate(fh, 1):
            ln = ln.rstrip("\n")
            if not ln.strip():
                continue
            parts = ln.split("\t")
            terms.append(parts[0])
            try:
                dfs.append(int(parts[1]) if len(parts) > 1 else 0)
            except ValueError:
                raise ParseError(f"bad document frequency in {ln!r}", k) from None
    return Vocabulary(terms, dfs)


def load_corpus(path, labels_path=None) -> Corpus:
    """Read documents from a directory or a one-document-per-line file.

    A directory whose entries are subdirectories is read as one class per
    subdirectory (sorted by name). A flat directory gives one document per
    file. ``labels_path`` overrides any inferred labels.
    """
    path = Path(path)
    labels = names = None
    if path.is_dir():
        subdirs = sorted(p for p in path.iterdir() if p.is_dir())
        docs = []
        if subdirs:
            labels, names = [], [p.name for p in subdirs]
            for cid, sub in enumerate(subdirs):
                for f in sorted(p for p in sub.iterdir() if p.is_file()):
                    docs.append(f.read_text(errors="replace"))
                    labels.append(cid)
        else:
            docs = [f.read_text(errors="replace")
                    for f in sorted(p for p in path.iterdir() if p.is_file())]
    else:
        with open(path, errors="replace") as fh:
            docs = [ln.rstrip("\n") for ln in fh]
    if labels_path is not None:
        labels = list(read_labels(labels_path))
    return Corpus(docs, labels, names)


def save_dataset(out_dir, lm: LabeledMatrix, sparse: bool = True) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "X.txt", lm.X, sparse=sparse)
    if lm.labels is not None:
        write_labels(out / "labels.txt", lm.labels)
    if lm.vocab is not None:
        write_vocab(out / "vocab.tsv", lm.vocab)


def load_dataset(data_dir) -> LabeledMatrix:
    d = Path(data_dir)
    X = read_matrix(d / "X.txt")
    labels = read_labels(d / "labels.txt") if (d / "labels.txt").exists() else None
    vocab = read_vocab(d / "vocab.tsv") if (d / "vocab.tsv").exists() else None
    if labels is not None and labels.size != X.shape[1]:
        raise LengthMismatch(f"{labels.size} labels for {X.shape[1]} columns")
    return LabeledMatrix(X, labels, vocab)


# ---------------------------------------------------------------- splits

class Split(NamedTuple):
    X: np.ndarray
    labels: np.ndarray | None
    indices: np.ndarray


def _allocate(count, fractions):
    raw = [f * count for f in fractions]
    base = [math.floor(r) for r in raw]
    rest = count - sum(base)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:rest]:
        base[i] += 1
    return base


def split_indices(n: int, fractions, seed: int = 0, labels=None,
                  stratified: bool = False) -> list:
    fractions = [float(f) for f in fractions]
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be nonnegative and sum to 1")
    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(n)
        counts = _allocate(n, fractions)
        edges = np.cumsum([0] + counts)
        return [np.sort(perm[edges[k]:edges[k + 1]]) for k in range(len(fractions))]
    if labels is None:
        raise ValueError("stratified split needs labels")
    labels = np.asarray(labels)
    if labels.size != n:
        raise LengthMismatch(f"{labels.size} labels for {n} samples")
    parts = [[] for _ in fractions]
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        edges = np.cumsum([0] + _allocate(idx.size, fractions))
        for k in range(len(fractions)):
            parts[k].extend(idx[edges[k]:edges[k + 1]])
    return [np.sort(np.asarray(p, dtype=int)) for p in parts]


def train_test_split(X, labels, fractions, seed: int = 0,
                     stratified: bool = False) -> list:
    """Seeded shuffle split of the columns of ``X``; one Split per fraction."""
    X = np.asarray(X)
    n = X.shape[1]
    if labels is not None and len(labels) != n:
        raise LengthMismatch(f"{len(labels)} labels for {n} samples")
    lab = None if labels is None else np.asarray(labels)
    out = []
    for idx in split_indices(n, fractions, seed, lab, stratified):
        out.append(Split(X[:, idx], None if lab is None else lab[idx], idx))
    return out


# ---------------------------------------------------------------- synthetic text

_SYLLABLES = ["ka", "lo", "mi", "ne", "ru", "sa", "te", "vo", "zi", "pa",
              "do", "fe", "gu", "hi", "bo", "ce", "ja", "wu", "xe", "yo"]


def _words(rng, count, taken):
    out = []
    while len(out) < count:
        w = "".join(rng.choice(_SYLLABLES, size=rng.integers(2, 4)))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


STOPWORDS = ("the", "a", "of", "and", "to", "in", "is", "it", "that", "for")


def synthetic_corpus(n_docs: int = 500, n_topics: int = 4, words_per_topic: int = 40,
                     n_shared: int = 60, doc_len=(20, 60), topic_weight: float = 0.5,
                     label_noise: float = 0.0, seed: int = 0) -> Corpus:
    """Seeded topic-model corpus used as a stand-in for newsgroup text.

    Each class owns a block of topic words; every document mixes words from
    its class topic, one other random topic, shared background words and
    stopwords.
    """
    rng = np.random.default_rng(seed)
    taken = set(STOPWORDS)
    topics = [_words(rng, words_per_topic, taken) for _ in range(n_topics)]
    shared = _words(rng, n_shared, taken)
    zipf = 1.0 / np.arange(1, words_per_topic + 1)
    zipf /= zipf.sum()
    zs = 1.0 / np.arange(1, n_shared + 1) ** 0.8
    zs /= zs.sum()
    docs, labels = [], []
    for i in range(n_docs):
        y = i % n_topics
        other = (y + 1 + rng.integers(n_topics - 1)) % n_topics
        L = int(rng.integers(doc_len[0], doc_len[1] + 1))
        toks = []
        for _ in range(L):
            u = rng.random()
            if u < topic_weight:
                toks.append(topics[y][rng.choice(words_per_topic, p=zipf)])
            elif u < topic_weight + 0.15:
                toks.append(topics[other][rng.choice(words_per_topic, p=zipf)])
            elif u < 0.9:
                toks.append(shared[rng.choice(n_shared, p=zs)])
            else:
                toks.append(STOPWORDS[rng.integers(len(STOPWORDS))])
        docs.append(" ".join(toks))
        if label_noise and rng.random() < label_noise:
            y = int(rng.integers(n_topics))
        labels.append(y)
    return Corpus(docs, labels, [f"topic{k}" for k in range(n_topics)])


def write_corpus_dir(corpus: Corpus, out_dir) -> None:
    """Write a corpus as one subdirectory per class, one file per document."""
    out = Path(out_dir)
    names = corpus.class_names or [f"class{k}" for k in sorted(set(corpus.labels or [0]))]
    for k, doc in enumerate(corpus.documents):
        cls = names[corpus.labels[k]] if corpus.labels is not None else "docs"
        d = out / cls
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{k:06d}.txt").write_text(doc)


def atomic_write_text(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
