import json
import time

import pytest

from hscls.cli import build_parser, default_workers, main
from hscls.model import load_model

LSHTC_LINES = [
    "545, 32 8:1 18:2",
    "545 8:3 19:1",
    "32 18:1 20:2",
    "7 3:1 4:1",
    "545, 7 8:1 3:2",
    "32, 545 18:1 8:1",
    "9 30:1",
    "545 8:1",
    "32 18:2",
    "7 3:4",
]


@pytest.fixture
def lshtc(tmp_path):
    p = tmp_path / "lshtc.txt"
    p.write_text("\n".join(LSHTC_LINES) + "\n")
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_prep_outputs(lshtc, tmp_path, capsys):
    out = tmp_path / "prep"
    assert run("prep", "-input", lshtc, "-n", 3, "-seed", 1, "-outdir", out) == 0
    manifest = dict(line.split("\t") for line in (out / "prep.manifest").read_text().splitlines())
    assert manifest["n"] == "3" and manifest["seed"] == "1"
    assert (manifest["train_size"], manifest["test_size"]) == ("6", "3")
    assert manifest["predict_k"] == "1"  # 12 labels over 9 docs
    assert (out / "labels.txt").read_text().split() == ["545", "32", "7"]
    train_lines = (out / "train.txt").read_text().splitlines()
    assert all(line.startswith("__label__") for line in train_lines)
    assert "__label__9" not in (out / "train.txt").read_text() + (out / "test.txt").read_text()
    run_manifest = json.loads((out / "prep.run.json").read_text())
    assert run_manifest["subcommand"] == "prep" and run_manifest["seed"] == 1
    assert "predict_k\t1" in capsys.readouterr().out


def test_prep_identity_when_n_large(lshtc, tmp_path):
    out = tmp_path / "prep"
    assert run("prep", "-input", lshtc, "-n", 100, "-outdir", out) == 0
    lines = (out / "train.txt").read_text().splitlines() + (out / "test.txt").read_text().splitlines()
    assert len(lines) == 10


def test_prep_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2:1\n3 4:x\n")
    assert run("prep", "-input", bad, "-n", 2, "-outdir", tmp_path / "o") == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "4:x" in err


def test_train_defaults_echo():
    args = build_parser().parse_args(["train", "-input", "x"])
    assert (args.dim, args.epoch, args.lr, args.loss) == (200, 100, 0.25, "hs")


def test_double_dash_flags():
    args = build_parser().parse_args(["train", "--input", "x", "--loss", "softmax", "--dim", "3"])
    assert args.loss == "softmax" and args.dim == 3


def test_unknown_flag():
    with pytest.raises(SystemExit) as exc:
        main(["train", "-input", "x", "-bogus", "1"])
    assert exc.value.code != 0


def test_threads_env(monkeypatch):
    monkeypatch.setenv("HSCLS_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.delenv("HSCLS_THREADS")
    assert default_workers() == 1


@pytest.fixture
def prepared(lshtc, tmp_path):
    out = tmp_path / "prep"
    run("prep", "-input", lshtc, "-n", 3, "-seed", 0, "-outdir", out)
    return out


@pytest.mark.parametrize("loss", ["hs", "softmax"])
def test_train_predict_evaluate(prepared, tmp_path, loss, capsys):
    model = tmp_path / f"{loss}.bin"
    t0 = time.perf_counter()
    assert run("train", "-input", prepared / "train.txt", "-output", model, "-epoch", 1, "-loss", loss) == 0
    assert time.perf_counter() - t0 < 1.0
    assert load_model(model).mode == loss
    report = json.loads((tmp_path / f"{loss}.bin.report.json").read_text())
    assert report["config"]["loss"] == loss and report["config"]["dim"] == 200
    assert f"loss\t{loss}" in capsys.readouterr().out

    preds = tmp_path / "preds.txt"
    assert run("predict", model, prepared / "test.txt", "-k", 1, "-output", preds) == 0
    lines = preds.read_text().splitlines()
    assert len(lines) == 3 and all(len(line.split()) == 1 for line in lines)

    assert run("evaluate", preds, prepared / "test.txt", "-classes", prepared / "labels.txt",
               "-n", 3, "-mode", loss, "-output", tmp_path / "scores") == 0
    tsv = (tmp_path / "scores.tsv").read_text().splitlines()
    assert tsv[0] == "n\tmode\tmacro_precision\tmacro_recall\tmacro_f1\ttrain_seconds"
    assert tsv[1].startswith(f"3\t{loss}\t")
    assert json.loads((tmp_path / "scores.json").read_text())["n_classes"] == 3


def test_predict_k_from_manifest(prepared, tmp_path):
    model = tmp_path / "m.bin"
    run("train", "-input", prepared / "train.txt", "-output", model, "-epoch", 1, "-dim", 4)
    (prepared / "prep.manifest").write_text(
        (prepared / "prep.manifest").read_text().replace("predict_k\t1", "predict_k\t2")
    )
    preds = tmp_path / "p.txt"
    assert run("predict", model, prepared / "test.txt", "-output", preds) == 0
    assert all(len(line.split()) == 2 for line in preds.read_text().splitlines())


def test_predict_without_k_or_manifest(tmp_path, capsys):
    test = tmp_path / "t.txt"
    test.write_text("__label__1 w1\n")
    assert run("predict", tmp_path / "missing.bin", test) == 2


def test_predict_empty_doc_line(prepared, tmp_path, caplog):
    model = tmp_path / "m.bin"
    run("train", "-input", prepared / "train.txt", "-output", model, "-epoch", 1, "-dim", 4)
    test = tmp_path / "t.txt"
    test.write_text("__label__545 w8\n__label__545 w123456\n")
    preds = tmp_path / "p.txt"
    assert run("predict", model, test, "-k", 1, "-output", preds) == 0
    lines = preds.read_text().split("\n")
    assert lines[1] == "" and lines[0] != ""
    assert "no in-vocabulary token" in caplog.text


@pytest.mark.parametrize(
    "pred_lines,expected",
    [
        (["1", "1", "1"], "0.33\t0.50\t0.40"),
        (["1", "1 2", "2"], "1.00\t1.00\t1.00"),
        (["2", "3", "1"], None),
    ],
)
def test_evaluate_table(tmp_path, capsys, pred_lines, expected):
    gold = tmp_path / "gold.txt"
    gold.write_text("__label__1 w1\n__label__1 __label__2 w2\n__label__2 w3\n")
    preds = tmp_path / "p.txt"
    preds.write_text("\n".join(pred_lines) + "\n")
    classes = tmp_path / "c.txt"
    classes.write_text("1\n2\n")
    assert run("evaluate", preds, gold, "-classes", classes) == 0
    row = capsys.readouterr().out.splitlines()[1].split("\t")
    if expected:
        assert "\t".join(row[2:5]) == expected
    else:
        assert row[4] == "0.00"


def test_evaluate_line_mismatch(tmp_path, capsys):
    gold = tmp_path / "gold.txt"
    gold.write_text("__label__1 w1\n__label__2 w2\n")
    preds = tmp_path / "p.txt"
    preds.write_text("1\n")
    assert run("evaluate", preds, gold) == 2
    assert "1 lines" in capsys.readouterr().err


def test_synth_then_bench(tmp_path, capsys):
    data = tmp_path / "synth.txt"
    assert run("synth", "-labels", 16, "-docs-per-label", 4, "-tokens-per-doc", 6, "-output", data) == 0
    out = tmp_path / "bench"
    assert run("bench", "-input", data, "-n-list", "4,16", "-epoch", 2, "-dim", 4, "-outdir", out) == 0
    assert len((out / "bench.tsv").read_text().splitlines()) == 5
    assert (out / "curve.tsv").exists() and (out / "tables.txt").exists()
    assert "Training seconds" in capsys.readouterr().out
