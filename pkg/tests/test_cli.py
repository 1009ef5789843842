import json

import pytest

from opentc.cli import main
from opentc.data import Document, save_jsonl
from opentc.synthetic import generate_synthetic_dataset


FAST_FLAGS = [
    "--embed-dim", "8",
    "--doc-len", "20",
    "--vocab-size", "150",
    "--filter-widths", "2,3",
    "--filters-per-width", "4",
    "--hidden-dim", "8",
    "--epochs", "3",
    "--batch-size", "32",
]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "toy.jsonl"
    docs = generate_synthetic_dataset(num_classes=3, docs_per_class=40, seed=1)
    save_jsonl(path, docs)
    return str(path)


def _train(dataset, out, *extra):
    rc = main(["train", "--data", dataset, "--out", str(out), "--seed", "0", *FAST_FLAGS, *extra])
    assert rc == 0
    return str(out)


def test_train_writes_model_and_report(dataset, tmp_path, capsys):
    report = tmp_path / "report.json"
    _train(dataset, tmp_path / "m.docm", "--report", str(report))
    out = capsys.readouterr().out
    assert "saved model" in out
    rep = json.loads(report.read_text())
    assert "train_losses" in rep and len(rep["train_losses"]) >= 1


def test_train_with_calibrate_then_predict_json(dataset, tmp_path, capsys):
    model = _train(dataset, tmp_path / "m.docm", "--calibrate")
    capsys.readouterr()
    inp = tmp_path / "docs.txt"
    inp.write_text("cls0kw00 cls0kw01 cls0kw02 cls0kw03\n")
    rc = main(["predict", "--model", model, "--input", str(inp)])
    assert rc == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert set(rec) == {"prediction", "probability", "probs"}
    assert rec["prediction"] in {"class0", "class1", "class2", "REJECT"}
    assert set(rec["probs"]) == {"class0", "class1", "class2"}


def test_predict_tsv_format_and_t_override(dataset, tmp_path, capsys):
    model = _train(dataset, tmp_path / "m.docm")
    capsys.readouterr()
    inp = tmp_path / "docs.txt"
    inp.write_text("cls1kw00 cls1kw01\nunrelated gibberish words\n")
    rc = main(["predict", "--model", model, "--input", str(inp), "--format", "tsv", "--t", "0.5"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 2
    cols = lines[0].split("\t")
    assert len(cols) == 2 + 3  # name, top prob, one prob per class


def test_predict_without_thresholds_errors(dataset, tmp_path, capsys):
    model = _train(dataset, tmp_path / "m.docm")  # no --calibrate
    capsys.readouterr()
    inp = tmp_path / "docs.txt"
    inp.write_text("anything\n")
    rc = main(["predict", "--model", model, "--input", str(inp)])
    assert rc == 2
    assert "calibrate" in capsys.readouterr().err


def test_calibrate_command_updates_model(dataset, tmp_path, capsys):
    model = _train(dataset, tmp_path / "m.docm")
    rc = main(["calibrate", "--model", model, "--data", dataset, "--alpha", "2.0"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "sigma" in out and "class0" in out
    from opentc.model_io import load_model

    loaded = load_model(model)
    assert loaded.thresholds is not None
    assert loaded.thresholds.alpha == 2.0
    assert (loaded.thresholds.t >= 0.5).all()


def test_inspect_command(dataset, tmp_path, capsys):
    model = _train(dataset, tmp_path / "m.docm", "--calibrate")
    capsys.readouterr()
    rc = main(["inspect", "--model", model])
    assert rc == 0
    out = capsys.readouterr().out
    assert "head: one_vs_rest" in out
    assert "class0" in out and "thresholds" in out


def test_train_softmax_head(dataset, tmp_path, capsys):
    model = _train(dataset, tmp_path / "m.docm", "--head", "softmax")
    capsys.readouterr()
    rc = main(["inspect", "--model", model])
    assert rc == 0
    assert "head: softmax" in capsys.readouterr().out


def test_experiment_command(dataset, tmp_path, capsys):
    report = tmp_path / "exp.json"
    rc = main(
        [
            "experiment",
            "--data", dataset,
            "--fractions", "1.0",
            "--reps", "1",
            "--seed", "0",
            "--report", str(report),
            *FAST_FLAGS,
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "doc" in out and "softmax" in out and "100%" in out
    rep = json.loads(report.read_text())
    assert "summary" in rep and "doc@1.0" in rep["summary"]


def test_missing_data_file_exit_code(tmp_path, capsys):
    rc = main(["train", "--data", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "m"), *FAST_FLAGS])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_data_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n")
    rc = main(["train", "--data", str(bad), "--out", str(tmp_path / "m"), *FAST_FLAGS])
    assert rc == 2


def test_corrupt_model_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.docm"
    bad.write_bytes(b"garbage")
    rc = main(["inspect", "--model", str(bad)])
    assert rc == 2


def test_pretrained_embeddings_flag(dataset, tmp_path, capsys):
    vecs = tmp_path / "vecs.txt"
    vecs.write_text("cls0kw00 " + " ".join(["0.1"] * 8) + "\n")
    model = _train(dataset, tmp_path / "m.docm", "--pretrained", str(vecs))
    err = capsys.readouterr().err
    assert "pretrained vectors loaded for 1 tokens" in err


def test_unknown_subcommand_exits_nonzero(capsys):
    with pytest.raises(SystemExit):
        main(["frobnicate"])
