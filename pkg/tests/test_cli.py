import numpy as np
import pytest

from lddl1 import data as dio
from lddl1.cli import (EXIT_INVALID, EXIT_IO, EXIT_NOCONV, EXIT_OK, build_parser, main,
                       read_config, resolve)
from lddl1.errors import ParseError


def _ingested(tmp_path, n=60):
    corpus = tmp_path / "corpus"
    data = tmp_path / "data"
    assert main(["synth", "--n", str(n), "--out", str(corpus)]) == EXIT_OK
    assert main(["ingest", "--corpus", str(corpus), "--vocab-size", "40",
                 "--out", str(data)]) == EXIT_OK
    return data


def test_missing_input_is_io_error(tmp_path, capsys):
    rc = main(["train-sc", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "m")])
    assert rc == EXIT_IO
    assert "lddl1 train-sc" in capsys.readouterr().err


def test_invalid_settings(tmp_path):
    assert main(["overlap", "--model", str(tmp_path), "--tau", "-1"]) == EXIT_INVALID
    assert main(["synth", "--kind", "images", "--out", str(tmp_path / "x")]) == EXIT_INVALID
    assert main(["train-nn", "--out", str(tmp_path / "n"), "--layer-dims", "4,6,2"]) \
        == EXIT_INVALID
    assert main(["synth", "--n", "ten", "--out", str(tmp_path / "x")]) == EXIT_INVALID


def test_required_flag(tmp_path, capsys):
    assert main(["ingest", "--out", str(tmp_path)]) == EXIT_INVALID
    assert "--corpus is required" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nm = 7\nlambda1 = 0.5\npreset = synthetic\n")
    args = build_parser().parse_args(["train-sc", "--config", str(cfg), "--data", "d",
                                      "--out", "o", "--lambda1", "0.25"])
    s = resolve("train-sc", args)
    assert s["lambda1"] == 0.25          # flag beats file
    assert s["m"] == 7                   # file beats preset
    assert s["lambda3"] == 0.1           # preset beats default
    assert s["rho"] == 1.0               # default


def test_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("m 7\n")
    with pytest.raises(ParseError, match="line 1"):
        read_config(cfg)
    assert main(["train-sc", "--config", str(cfg), "--data", "d", "--out", "o"]) == EXIT_IO
    cfg.write_text("colour = red\n")
    assert main(["train-sc", "--config", str(cfg), "--data", "d", "--out", "o"]) == EXIT_INVALID


def test_ingest_outputs(tmp_path):
    data = _ingested(tmp_path)
    lm = dio.load_dataset(data)
    assert lm.X.shape == (40, 60)
    tags = (data / "splits.txt").read_text().split()
    assert sorted(set(tags)) == ["test", "train", "validation"] and len(tags) == 60
    assert read_config(data / "config.txt")["command"] == "ingest"


def test_train_sc_and_downstream(tmp_path, capsys):
    data = _ingested(tmp_path)
    model = tmp_path / "model"
    rc = main(["train-sc", "--data", str(data), "--out", str(model), "--preset", "synthetic",
               "--m", "4", "--max-outer", "30"])
    assert rc in (EXIT_OK, EXIT_NOCONV)
    for name in ("dictionary.txt", "codes.txt", "objective_trace.tsv", "config.txt",
                 "objective.png", "supports.png"):
        assert (model / name).exists(), name
    W = dio.read_matrix(model / "dictionary.txt")
    assert W.shape == (40, 4)
    cfg = read_config(model / "config.txt")
    assert cfg["m"] == "4" and cfg["lambda3"] == "0.1"

    assert main(["overlap", "--model", str(model)]) == EXIT_OK
    assert (model / "overlap.tsv").exists()
    assert main(["interpret", "--model", str(model), "--vocab", str(data / "vocab.tsv"),
                 "--columns", "0,1"]) == EXIT_OK
    assert "Representative Words" in (model / "interpret.txt").read_text()
    assert main(["interpret", "--model", str(model), "--vocab", str(data / "vocab.tsv"),
                 "--columns", "9"]) == EXIT_INVALID
    assert main(["knn-eval", "--model", str(model), "--data", str(data), "--k", "3"]) == EXIT_OK
    assert (model / "accuracy.tsv").read_text().startswith("split\taccuracy\tgap\n")
    capsys.readouterr()


def test_overlap_identity_model(tmp_path, capsys):
    model = tmp_path / "m"
    model.mkdir()
    dio.write_matrix(model / "dictionary.txt", np.eye(5))
    assert main(["overlap", "--model", str(model)]) == EXIT_OK
    assert "aggregate\t0.0" in capsys.readouterr().out


def test_knn_eval_separable(tmp_path, capsys):
    model, data = tmp_path / "m", tmp_path / "d"
    model.mkdir()
    dio.write_matrix(model / "dictionary.txt", np.eye(2))
    (model / "config.txt").write_text("lambda1 = 0.01\n")
    rng = np.random.default_rng(0)
    y = np.arange(40) % 2
    X = np.stack([np.where(y == 0, 3.0, 0.0), np.where(y == 1, 3.0, 0.0)])
    X += 0.05 * rng.random((2, 40))
    dio.save_dataset(data, dio.LabeledMatrix(X, y), sparse=False)
    (data / "splits.txt").write_text("\n".join(["train"] * 30 + ["test"] * 10) + "\n")
    assert main(["knn-eval", "--model", str(model), "--data", str(data)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "train\t1.0\t0.0" in out and "test\t1.0\t0.0" in out


def test_sweep_command(tmp_path, capsys):
    data = _ingested(tmp_path)
    out = tmp_path / "sweep.tsv"
    rc = main(["sweep", "--data", str(data), "--out", str(out), "--variant", "lddl1,l1",
               "--lambdas", "0.01,0.1", "--m", "3", "--max-outer", "15",
               "--lambda1", "0.1", "--lambda2", "0.1"])
    assert rc in (EXIT_OK, EXIT_NOCONV)
    rows = out.read_text().splitlines()
    assert rows[0] == "lambda\tvariant\toverlap\tflag" and len(rows) == 5
    assert (tmp_path / "sweep.png").exists()
    assert (tmp_path / "sweep.tsv.l1.trace.tsv").exists()
    assert main(["sweep", "--data", str(data), "--out", str(out),
                 "--lambdas", "0.1,0.01"]) == EXIT_INVALID
    capsys.readouterr()


def test_train_nn_command(tmp_path, capsys):
    out = tmp_path / "nn"
    spec = tmp_path / "net.cfg"
    spec.write_text("layer_dims = 8,6,2\nlam = 0.01\n")
    assert main(["train-nn", "--spec", str(spec), "--out", str(out), "--epochs", "20"]) == EXIT_OK
    for name in ("layer0_weights.txt", "layer0_bias.txt", "layer1_weights.txt",
                 "metrics.tsv", "metrics.png", "config.txt"):
        assert (out / name).exists(), name
    assert len((out / "metrics.tsv").read_text().splitlines()) == 21
    assert "overlap_layer0" in capsys.readouterr().out
