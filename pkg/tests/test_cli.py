import json

import pytest

from typeslot.cli import main
from typeslot.pipeline import Settings, TrainedModel
from typeslot.synthetic import names_corpus, write_corpus

SMALL = {"hidden": 8, "epochs": 2, "embedding_dim": 12, "embedding_epochs": 1, "top_k": 3}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus"
    write_corpus(names_corpus(12, 4, seed=1), corpus)
    cfg = root / "cfg.json"
    cfg.write_text(json.dumps(SMALL))
    ds = root / "ds.jsonl"
    assert main(["extract", str(corpus), "-o", str(ds)]) == 0
    assert main(["train-embeddings", str(corpus), "--dataset", str(ds), "-o", str(root / "emb"), "--config", str(cfg)]) == 0
    assert main(["train", "--dataset", str(ds), "--source", str(corpus), "-o", str(root / "model"), "--config", str(cfg)]) == 0
    return root


def test_extract_writes_jsonl(workspace):
    lines = (workspace / "ds.jsonl").read_text().splitlines()
    assert len(lines) == 48
    assert {"file_path", "function_name"} <= set(json.loads(lines[0]))


def test_trained_model_directory(workspace):
    model = TrainedModel.load(workspace / "model")
    assert model.settings.hidden == 8
    assert len(model.train_files) + len(model.valid_files) == 12
    assert not set(model.train_files) & set(model.valid_files)


def test_train_from_saved_embeddings(workspace, tmp_path):
    out = tmp_path / "m2"
    args = ["train", "--dataset", str(workspace / "ds.jsonl"), "--embeddings", str(workspace / "emb"), "-o", str(out)]
    assert main(args + ["--config", str(workspace / "cfg.json"), "--disable", "ids"]) == 0
    assert TrainedModel.load(out).settings.disabled == ("ids",)
    assert main(["train", "--dataset", str(workspace / "ds.jsonl"), "-o", str(out)]) == 2


def test_predict(workspace, tmp_path, capsys):
    target = tmp_path / "u.py"
    target.write_text("def count_rows(size, label):\n    return size\n")
    out = tmp_path / "p.json"
    assert main(["predict", str(target), "--model", str(workspace / "model"), "-o", str(out)]) == 0
    data = json.loads(out.read_text())[str(target)]
    assert set(data) <= {"count_rows:size", "count_rows:label", "count_rows:return"}
    assert all(len(v) <= 3 for v in data.values())


def test_annotate_diff_and_write(workspace, tmp_path, capsys):
    target = tmp_path / "u.py"
    original = "def count_rows(size, label):\n    return size\n"
    target.write_text(original)
    model = str(workspace / "model")
    assert main(["annotate", str(target), "--model", model]) == 0
    assert target.read_text() == original
    assert main(["annotate", str(target), "--model", model, "--write", "--diff"]) == 2
    assert main(["annotate", str(target), "--model", model, "--write", "--strategy", "non-greedy"]) == 0
    assert target.read_text().count("\n") == original.count("\n")


def test_evaluations(workspace, tmp_path):
    model, ds = str(workspace / "model"), str(workspace / "ds.jsonl")
    out = tmp_path / "m.json"
    assert main(["eval-model", "--dataset", ds, "--model", model, "-k", "1", "3", "-o", str(out)]) == 0
    data = json.loads(out.read_text())
    assert {"argument/top-1", "return/top-3"} <= set(data)
    assert out.with_suffix(".txt").exists()
    assert main(["baseline", "--dataset", ds, "--model", model, "-k", "1", "-o", str(tmp_path / "b.json")]) == 0
    search_out = tmp_path / "s.json"
    files = sorted(str(p) for p in (workspace / "corpus").glob("*.py"))[:2]
    assert main(["eval-search", *files, "--model", model, "-o", str(search_out)]) == 0
    assert json.loads(search_out.read_text())["summary"]["files"] == 2


def test_bad_config_is_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"no_such_setting": 1}))
    with pytest.raises(ValueError):
        Settings.from_file(cfg)
