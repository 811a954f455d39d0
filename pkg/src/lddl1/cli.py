"""Command-line workbench.

Every command takes long flags and an optional ``--config FILE`` of
``key = value`` lines; flags override the file, the file overrides built-in
defaults. Each run writes the merged settings as ``config.txt`` (or
``<out>.config.txt`` for single-file outputs) so it can be replayed.

Exit codes: 0 ok, 2 I/O error, 3 invalid settings, 4 solver did not converge.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path


import numpy as np
from threadpoolctl import threadpool_limits

from . import data as dio
from .errors import ConvergenceWarning, LddError, ParseError
from .evaluation import (REFERENCE_20NEWS, KnnConfig, accuracy_gap, interpret,
                         sweep_overlap)
from .lasso import SolverOptions
from .nn import MlpSpec, train_mlp, two_class_task
from .overlap import overlap_score
from .sc import ScProblem, train

log = logging.getLogger("lddl1")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NOCONV = 0, 2, 3, 4
THREADS_ENV = "LDDL1_THREADS"

PRESETS = {
    "20news": {"m": 50, "lambda1": 1.0, "lambda2": 1.0, "lambda3": 0.1, "lambda4": 0.001},
    "rcv1": {"m": 200, "lambda1": 0.01, "lambda2": 1.0, "lambda3": 1.0, "lambda4": 1.0},
    "synthetic": {"m": 8, "lambda1": 0.1, "lambda2": 0.1, "lambda3": 0.1, "lambda4": 0.1},
}


class UsageError(Exception):
    """Invalid settings, reported with exit code 3."""


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (name, type, default, help); None default means "required"
SC_OPTIONS = [
    ("m", int, 50, "number of basis vectors"),
    ("lambda1", float, 1.0, "L1 weight on codes"),
    ("lambda2", float, 1.0, "squared Frobenius weight on the dictionary"),
    ("lambda3", float, 0.1, "log-determinant divergence weight"),
    ("lambda4", float, 0.001, "L1 weight on the dictionary"),
    ("rho", float, 1.0, "ADMM penalty"),
    ("adaptive_rho", _bool, False, "rebalance rho from the ADMM residuals"),
    ("seed", int, 0, "random seed"),
    ("tol_outer", float, 1e-5, "relative objective change for the outer loop"),
    ("max_outer", int, 200, "outer iteration cap"),
    ("tol_admm", float, 1e-4, "relative consensus residual for ADMM"),
    ("max_admm", int, 200, "ADMM iteration cap"),
    ("tol_cd", float, 1e-6, "coordinate descent tolerance"),
    ("max_sweeps", int, 50, "coordinate descent sweep cap"),
    ("ridge", float, 1e-8, "ridge added to singular Gram matrices"),
    ("lasso_max_iters", int, 1000, "Lasso iteration cap"),
    ("lasso_tol", float, 1e-7, "Lasso relative objective tolerance"),
    ("lasso_acceleration", _bool, False, "momentum in the Lasso solver"),
]

COMMANDS = {
    "ingest": [
        ("corpus", str, None, "directory (one file per document, optional class "
                              "subdirectories) or file with one document per line"),
        ("labels", str, "", "label file overriding inferred labels"),
        ("stopwords", str, "", "stopword file, one token per line"),
        ("vocab_size", int, 1000, "vocabulary size"),
        ("split", _floats, "0.6,0.2,0.2", "train,validation,test fractions"),
        ("stratified", _bool, True, "stratify the split by label"),
        ("seed", int, 0, "split seed"),
        ("out", str, None, "output directory"),
    ],
    "train-sc": [
        ("data", str, None, "dataset directory written by ingest"),
        ("preset", str, "", "20news, rcv1 or synthetic; flags still win"),
        ("subset", str, "train", "split used for training (train, validation, test, all)"),
        ("max_docs", int, 0, "use at most this many training documents (0 = all)"),
        ("out", str, None, "model directory"),
        ("plots", _bool, True, "write figures next to the trace"),
    ] + SC_OPTIONS,
    "overlap": [
        ("model", str, None, "model directory"),
        ("tau", float, 1e-6, "support threshold"),
        ("out", str, "", "TSV path (default: <model>/overlap.tsv)"),
    ],
    "interpret": [
        ("model", str, None, "model directory"),
        ("vocab", str, None, "vocabulary file"),
        ("tau", float, 1e-6, "support threshold"),
        ("columns", _ints, "", "comma-separated zero-based columns to show"),
        ("out", str, "", "output prefix (default: <model>/interpret)"),
    ],
    "knn-eval": [
        ("model", str, None, "model directory"),
        ("data", str, None, "dataset directory with labels and splits"),
        ("k", int, 5, "number of neighbours"),
        ("metric", str, "euclidean", "euclidean or cosine"),
        ("out", str, "", "TSV path (default: <model>/accuracy.tsv)"),
    ],
    "sweep": [
        ("data", str, None, "dataset directory"),
        ("variant", str, "lddl1", "comma-separated subset of lddl1, ldd, l1"),
        ("lambdas", _floats, "1e-4,1e-3,1e-2,1e-1,1", "regularization strengths"),
        ("tau", float, 1e-6, "support threshold"),
        ("subset", str, "train", "split used for training"),
        ("max_docs", int, 0, "use at most this many documents (0 = all)"),
        ("out", str, None, "output TSV"),
        ("plots", _bool, True, "write a figure next to the TSV"),
    ] + [o for o in SC_OPTIONS if o[0] not in ("lambda3", "lambda4")],
    "train-nn": [
        ("spec", str, "", "network spec file (key = value)"),
        ("data", str, "", "directory with X.txt and labels.txt; empty for the "
                          "built-in two-class task"),
        ("out", str, None, "output directory"),
        ("layer_dims", _ints, "8,6,2", "layer sizes, input first"),
        ("activation", str, "tanh", "tanh, relu or sigmoid"),
        ("loss", str, "softmax-cross-entropy", "squared or softmax-cross-entropy"),
        ("lam", float, 0.01, "regularization weight"),
        ("gamma", float, 1.0, "L1 tradeoff inside the regularizer"),
        ("seed", int, 0, "random seed"),
        ("epochs", int, 300, "training epochs"),
        ("step", float, 0.1, "initial step size"),
        ("schedule", str, "halve", "constant or halve"),
        ("batch_size", int, 0, "minibatch size (0 = full batch)"),
        ("tau", float, 1e-3, "support threshold for overlap tracking"),
        ("plots", _bool, True, "write a figure next to the trace"),
    ],
    "synth": [
        ("kind", str, "corpus", "corpus (topic text) or blobs (two-class vectors)"),
        ("n", int, 500, "number of documents or samples"),
        ("seed", int, 0, "random seed"),
        ("out", str, None, "output directory"),
    ],
}


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for k, ln in enumerate(fh, 1):
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            if "=" not in ln:
                raise ParseError(f"expected 'key = value', got {ln!r}", k)
            key, val = ln.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _fmt(v):
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_config(path, settings: dict) -> None:
    lines = [f"{k} = {_fmt(v)}" for k, v in sorted(settings.items())]
    dio.atomic_write_text(path, "\n".join(lines) + "\n")


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file, preset and flags for ``command``."""
    options = COMMANDS[command]
    types = {name: typ for name, typ, _, _ in options}
    settings = {name: default for name, _, default, _ in options}
    layers = []
    if getattr(args, "config", None):
        layers.append(read_config(args.config))
    flags = {name: getattr(args, name) for name in types if getattr(args, name) is not None}
    preset = flags.get("preset") or (layers[0].get("preset") if layers else None)
    if preset:
        if preset not in PRESETS:
            raise UsageError(f"--preset must be one of {sorted(PRESETS)}")
        layers.insert(0, PRESETS[preset])
    if command == "train-nn" and (flags.get("spec") or settings.get("spec")):
        spec_path = flags.get("spec")
        if spec_path:
            layers.insert(0, read_config(spec_path))
    layers.append(flags)
    for layer in layers:
        for key, val in layer.items():
            if key not in types:
                raise UsageError(f"unknown setting {key!r} for {command}")
            settings[key] = val
    for key, val in list(settings.items()):
        if val is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")
        if isinstance(val, str) and types[key] is not str:
            try:
                settings[key] = types[key](val)
            except ValueError as exc:
                raise UsageError(f"--{key.replace('_', '-')}: {exc}") from None
    return settings


def _sc_problem(X, s) -> ScProblem:
    lasso = SolverOptions(max_iters=s["lasso_max_iters"], tol=s["lasso_tol"],
                          acceleration=s["lasso_acceleration"])
    kw = {k: s[k] for k in ("m", "lambda1", "lambda2", "lambda3", "lambda4", "rho",
                            "seed", "tol_outer", "max_outer", "tol_admm", "max_admm",
                            "tol_cd", "max_sweeps", "ridge", "adaptive_rho") if k in s}
    try:
        return ScProblem(X=X, lasso=lasso, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _select(lm: dio.LabeledMatrix, data_dir, subset, max_docs=0):
    idx = np.arange(lm.X.shape[1])
    split_file = Path(data_dir) / "splits.txt"
    if subset != "all":
        if not split_file.exists():
            if subset != "train":
                raise UsageError(f"{split_file} missing; cannot select {subset!r}")
        else:
            names = np.array(split_file.read_text().split())
            if names.size != idx.size:
                raise UsageError(f"{split_file} has {names.size} entries for {idx.size} columns")
            idx = idx[names == subset]
            if idx.size == 0:
                raise UsageError(f"split {subset!r} is empty")
    if max_docs:
        idx = idx[:max_docs]
    labels = None if lm.labels is None else lm.labels[idx]
    return lm.X[:, idx], labels, idx


def _write_trace(path, trace):
    lines = ["iter\tobjective"] + [f"{k}\t{v!r}" for k, v in enumerate(trace)]
    dio.atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------- commands

def cmd_ingest(s):
    corpus = dio.load_corpus(s["corpus"], s["labels"] or None)
    stop = dio.read_stopwords(s["stopwords"]) if s["stopwords"] else set()
    if s["vocab_size"] < 1:
        raise UsageError("--vocab-size must be >= 1")
    vocab = dio.build_vocab(corpus, stop, s["vocab_size"])
    lm = dio.tfidf(corpus, vocab)
    out = Path(s["out"])
    dio.save_dataset(out, lm)
    names = ["train", "validation", "test"]
    fr = s["split"]
    if len(fr) > 3:
        raise UsageError("--split takes at most three fractions")
    try:
        parts = dio.split_indices(lm.X.shape[1], fr, s["seed"], lm.labels,
                                  s["stratified"] and lm.labels is not None)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tags = np.empty(lm.X.shape[1], dtype=object)
    for name, idx in zip(names, parts):
        tags[idx] = name
    dio.atomic_write_text(out / "splits.txt", "\n".join(tags) + "\n")
    write_config(out / "config.txt", {"command": "ingest", **s})
    n = lm.X.shape[1]
    density = np.count_nonzero(lm.X) / max(lm.X.size, 1)
    print(f"n\t{n}\nd\t{lm.X.shape[0]}\ndensity\t{density:.6f}")
    return EXIT_OK


def save_model(out, model, settings):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    dio.write_matrix(out / "dictionary.txt", model.W)
    if model.W_admm is not None:
        dio.write_matrix(out / "dictionary_admm.txt", model.W_admm)
    dio.write_matrix(out / "codes.txt", model.A)
    _write_trace(out / "objective_trace.tsv", model.objective_trace)
    write_config(out / "config.txt", {**settings, "converged": model.converged,
                                      "iters": model.iters})


def cmd_train_sc(s):
    lm = dio.load_dataset(s["data"])
    X, _, _ = _select(lm, s["data"], s["subset"], s["max_docs"])
    prob = _sc_problem(X, s)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model = train(prob)
    save_model(s["out"], model, {"command": "train-sc", **s})
    out = Path(s["out"])
    if s["plots"]:
        from .plotting import plot_objective, plot_supports
        plot_objective(model.objective_trace, out / "objective.png")
        plot_supports(model.W, out / "supports.png")
    ov = overlap_score(model.W).aggregate
    print(f"iters\t{model.iters}\nobjective\t{model.objective_trace[-1]!r}\n"
          f"converged\t{model.converged}\noverlap\t{ov!r}")
    return EXIT_OK if model.converged else EXIT_NOCONV


def _load_model_W(model_dir):
    p = Path(model_dir) / "dictionary.txt"
    return dio.read_matrix(p)


def cmd_overlap(s):
    if s["tau"] < 0:
        raise UsageError("--tau must be nonnegative")
    W = _load_model_W(s["model"])
    try:
        rep = overlap_score(W, s["tau"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(s["out"]) if s["out"] else Path(s["model"]) / "overlap.tsv"
    dio.atomic_write_text(out, rep.to_tsv())
    write_config(str(out) + ".config.txt", {"command": "overlap", **s})
    print(f"aggregate\t{rep.aggregate!r}")
    return EXIT_OK


def cmd_interpret(s):
    W = _load_model_W(s["model"])
    vocab = dio.read_vocab(s["vocab"])
    try:
        rep = interpret(W, vocab, s["tau"])
    except LddError as exc:
        raise UsageError(str(exc)) from None
    cols = s["columns"] or None
    if cols and any(not 0 <= c < W.shape[1] for c in cols):
        raise UsageError(f"--columns must lie in [0, {W.shape[1]})")
    prefix = s["out"] or str(Path(s["model"]) / "interpret")
    text = rep.to_text(cols)
    dio.atomic_write_text(prefix + ".txt", text)
    dio.atomic_write_text(prefix + ".tsv", rep.to_tsv())
    write_config(prefix + ".config.txt", {"command": "interpret", **s})
    print(text, end="")
    return EXIT_OK


def cmd_knn_eval(s):
    W = _load_model_W(s["model"])
    cfg_path = Path(s["model"]) / "config.txt"
    model_cfg = read_config(cfg_path) if cfg_path.exists() else {}
    lambda1 = float(model_cfg.get("lambda1", 1.0))
    lm = dio.load_dataset(s["data"])
    if lm.labels is None:
        raise UsageError("knn-eval needs labels.txt in the data directory")
    Xtr, ytr, _ = _select(lm, s["data"], "train")
    Xte, yte, _ = _select(lm, s["data"], "test")
    try:
        cfg = KnnConfig(s["k"], s["metric"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.k > ytr.size - 1:
        raise UsageError(f"--k must be below the {ytr.size} training documents")
    rep, _, _ = accuracy_gap(W, lambda1, Xtr, ytr, Xte, yte, cfg)
    out = Path(s["out"]) if s["out"] else Path(s["model"]) / "accuracy.tsv"
    dio.atomic_write_text(out, rep.to_tsv())
    write_config(str(out) + ".config.txt", {"command": "knn-eval", "lambda1": lambda1, **s})
    print(rep.to_tsv(), end="")
    ref = REFERENCE_20NEWS
    print(f"# reference 20-News: SC test {ref['sc']['test']} gap {ref['sc']['gap']}; "
          f"LDD-L1-SC test {ref['lddl1-sc']['test']} gap {ref['lddl1-sc']['gap']}")
    return EXIT_OK


def cmd_sweep(s):
    variants = [v.strip() for v in s["variant"].split(",") if v.strip()]
    for v in variants:
        if v not in ("lddl1", "ldd", "l1"):
            raise UsageError(f"unknown variant {v!r}")
    lams = s["lambdas"]
    if not lams or any(b <= a for a, b in zip(lams, lams[1:])):
        raise UsageError("--lambdas must be strictly increasing")
    lm = dio.load_dataset(s["data"])
    X, _, _ = _select(lm, s["data"], s["subset"], s["max_docs"])
    base = _sc_problem(X, {**s, "lambda3": 0.0, "lambda4": 0.0})
    results = [sweep_overlap(base, v, lams, s["tau"]) for v in variants]
    out = Path(s["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    body = results[0].to_tsv() + "".join(r.to_tsv().split("\n", 1)[1] for r in results[1:])
    dio.atomic_write_text(out, body)
    for r in results:
        lines = ["variant\tlambda\titer\tobjective"]
        for lam, tr in zip(r.lambdas, r.objective_traces):
            lines += [f"{r.variant}\t{lam!r}\t{k}\t{v!r}" for k, v in enumerate(tr)]
        dio.atomic_write_text(f"{out}.{r.variant}.trace.tsv", "\n".join(lines) + "\n")
    write_config(str(out) + ".config.txt", {"command": "sweep", **s})
    if s["plots"]:
        from .plotting import plot_sweep
        plot_sweep(results, out.with_suffix(".png"))
    print(body, end="")
    ok = all(f == "ok" for r in results for f in r.flags)
    return EXIT_OK if ok else EXIT_NOCONV


def cmd_train_nn(s):
    try:
        spec = MlpSpec(s["layer_dims"], s["activation"], s["loss"], s["lam"],
                       s["gamma"], s["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if s["schedule"] not in ("constant", "halve"):
        raise UsageError("--schedule must be constant or halve")
    if s["data"]:
        lm = dio.load_dataset(s["data"])
        X, y = lm.X, lm.labels
        if y is None:
            raise UsageError("train-nn needs labels.txt in the data directory")
    else:
        X, y = two_class_task(d=spec.layer_dims[0], seed=s["seed"])
    if X.shape[0] != spec.layer_dims[0]:
        raise UsageError(f"data has {X.shape[0]} features, layer_dims starts "
                         f"with {spec.layer_dims[0]}")
    params, trace = train_mlp(spec, X, y, s["epochs"], s["step"], s["schedule"],
                              s["batch_size"] or None, s["tau"])
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        dio.write_matrix(out / f"layer{l}_weights.txt", W)
        dio.write_matrix(out / f"layer{l}_bias.txt", b[None, :])
    dio.atomic_write_text(out / "metrics.tsv", trace.to_tsv())
    write_config(out / "config.txt", {"command": "train-nn", **s})
    if s["plots"]:
        from .plotting import plot_nn_trace
        plot_nn_trace(trace, out / "metrics.png")
    print(f"objective\t{trace.objective[-1]!r}\ndata_loss\t{trace.data_loss[-1]!r}")
    for l, v in enumerate(trace.overlap[-1]):
        print(f"overlap_layer{l}\t{v!r}")
    return EXIT_OK


def cmd_synth(s):
    out = Path(s["out"])
    if s["kind"] == "corpus":
        corpus = dio.synthetic_corpus(n_docs=s["n"], seed=s["seed"])
        dio.write_corpus_dir(corpus, out)
        dio.atomic_write_text(out.parent / (out.name + ".stopwords.txt"),
                              "\n".join(dio.STOPWORDS) + "\n")
    elif s["kind"] == "blobs":
        X, y = two_class_task(n=s["n"], seed=s["seed"])
        dio.save_dataset(out, dio.LabeledMatrix(X, y), sparse=False)
    else:
        raise UsageError("--kind must be corpus or blobs")
    write_config(out / "config.txt", {"command": "synth", **s})
    return EXIT_OK


HANDLERS = {
    "ingest": cmd_ingest, "train-sc": cmd_train_sc, "overlap": cmd_overlap,
    "interpret": cmd_interpret, "knn-eval": cmd_knn_eval, "sweep": cmd_sweep,
    "train-nn": cmd_train_nn, "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lddl1", description=__doc__.split("\n\n")[0])
    p.add_argument("--threads", type=int, default=None,
                   help=f"cap on BLAS threads (default: ${THREADS_ENV} or all cores)")
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, options in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key = value settings file")
        for opt, _, default, help_ in options:
            shown = "required" if default is None else f"default: {_fmt(default) or 'none'}"
            # type conversion happens in resolve() so config files share it
            sp.add_argument("--" + opt.replace("_", "-"), dest=opt, default=None,
                            help=f"{help_} ({shown})")
    return p


def _limit_threads(n):
    if not n:
        return None
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads or int(os.environ.get(THREADS_ENV, "0") or 0)
    try:
        settings = resolve(args.command, args)
        _limiter = _limit_threads(threads)  # noqa: F841 - keeps the limit active
        return HANDLERS[args.command](settings)
    except UsageError as exc:
        print(f"lddl1 {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ParseError as exc:
        print(f"lddl1 {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        name = getattr(exc, "filename", None) or ""
        print(f"lddl1 {args.command}: {exc.strerror or exc} {name}".rstrip(), file=sys.stderr)
        return EXIT_IO
    except LddError as exc:
        print(f"lddl1 {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
