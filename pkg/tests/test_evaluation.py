import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import METRIC_CASES, ScriptedChecker

from typeslot.evaluation import (
    metrics_table,
    naive_baseline,
    plot_threshold_curve,
    search_eval,
    split_by_file,
    threshold_curve,
    topk_metrics,
    truth_of,
    write_report,
)
from typeslot.extract import SlotId, extract_functions
from typeslot.model import PredictionSet
from typeslot.synthetic import names_corpus


def as_sets(preds):
    return {sid: PredictionSet(sid, [(t, 1.0 / (i + 1)) for i, t in enumerate(ranked)]) for sid, ranked in preds.items()}


@pytest.mark.parametrize("case", METRIC_CASES, ids=[c[0] for c in METRIC_CASES])
def test_hand_computed_metrics(case):
    _, truth, preds, k, vocab, expected, weighted = case
    m = topk_metrics(as_sets(preds), truth, k, vocab)
    assert (m.precision, m.recall, m.f1) == pytest.approx(expected, abs=1e-9)
    if weighted:
        assert (m.weighted_precision, m.weighted_recall, m.weighted_f1) == pytest.approx(weighted, abs=1e-9)


def test_metric_flags():
    assert topk_metrics({}, {}, 1).flags == ["no-slots", "no-predictions"]
    sid = SlotId("m.py", "f", "x")
    assert topk_metrics({}, {sid: "int"}, 1).flags == ["no-predictions"]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABC"), st.lists(st.sampled_from("ABCD"), max_size=4, unique=True)), min_size=1, max_size=12))
def test_metrics_monotone_in_k(rows):
    truth = {SlotId("m", "f", f"a{i}"): t for i, (t, _) in enumerate(rows)}
    preds = as_sets({SlotId("m", "f", f"a{i}"): r for i, (_, r) in enumerate(rows)})
    last = None
    for k in range(1, 5):
        m = topk_metrics(preds, truth, k)
        assert m.n_correct <= min(m.n_predicted, m.n_slots)
        assert 0 <= m.precision <= 1 and 0 <= m.recall <= 1
        if last is not None:
            assert m.precision >= last.precision and m.recall >= last.recall
        last = m


def test_split_by_file():
    files = {f"m{i}.py": "def f(x: int):\n    pass\n" for i in range(10)}
    records = [r for path, src in files.items() for r in extract_functions(src, path)]
    train, valid = split_by_file(records, seed=3)
    tf, vf = {r.file_path for r in train}, {r.file_path for r in valid}
    assert len(tf) == 8 and len(vf) == 2 and not tf & vf
    assert split_by_file(records, seed=3) == (train, valid)
    with pytest.warns(UserWarning):
        t, v = split_by_file(extract_functions("def f(x: int):\n    pass\n", "a.py"))
    assert len(t) == 1 and v == []
    with pytest.raises(ValueError):
        split_by_file(records, ratio=1.0)


def test_naive_baseline_frequency():
    train = ["int"] * 90 + ["str"] * 10
    sids = [SlotId("m", "f", f"a{i}") for i in range(10_000)]
    preds = naive_baseline(train, sids, k=1, seed=0)
    share = Counter(p.types[0] for p in preds.values())["int"] / len(sids)
    assert abs(share - 0.9) <= 0.02
    assert naive_baseline(train, sids[:50], seed=4) == naive_baseline(train, sids[:50], seed=4)
    two = naive_baseline(train, sids[:20], k=2)
    assert all(sorted(p.types) == ["int", "str"] for p in two.values())
    assert all(p.types == ["int"] for p in naive_baseline(["int"], sids[:5], k=3).values())
    with pytest.raises(ValueError):
        naive_baseline([], sids[:1])


def test_naive_baseline_only_uses_top_types():
    train = [f"T{i}" for i in range(20) for _ in range(20 - i)]
    preds = naive_baseline(train, [SlotId("m", "f", f"a{i}") for i in range(2000)], top=10)
    assert {p.types[0] for p in preds.values()} <= {f"T{i}" for i in range(10)}


def test_truth_of_kinds():
    recs = extract_functions("def f(a: int, b) -> str:\n    pass\n", "m.py")
    assert truth_of(recs) == {SlotId("m.py", "f", "a"): "int", SlotId("m.py", "f", "return"): "str"}
    assert list(truth_of(recs, "return").values()) == ["str"]
    assert list(truth_of(recs, "argument").values()) == ["int"]


def test_threshold_curve_and_plot(tmp_path):
    sids = [SlotId("m", "f", f"a{i}") for i in range(4)]
    truth = dict(zip(sids, ["int", "int", "str", "str"]))
    preds = {
        sids[0]: PredictionSet(sids[0], [("int", 0.9)]),
        sids[1]: PredictionSet(sids[1], [("int", 0.4)]),
        sids[2]: PredictionSet(sids[2], [("int", 0.3)]),
        sids[3]: PredictionSet(sids[3], [("str", 0.8)]),
    }
    rows = threshold_curve(preds, truth, [0.0, 0.5, 0.95])
    assert rows[0] == (0.0, 0.75, 0.75)
    assert rows[1] == (0.5, 1.0, 0.5)
    assert rows[2] == (0.95, 0.0, 0.0)
    pytest.importorskip("matplotlib")
    plot_threshold_curve(rows, tmp_path / "c.png", "demo")
    assert (tmp_path / "c.png").stat().st_size > 0


def truth_predictor(files):
    """Answers every slot with its real annotation."""
    answers = {}
    for path, src in files:
        for rec in extract_functions(src, path):
            for sid, slot in rec.slots():
                if slot.declared_type and not slot.is_trivial:
                    answers[(path, sid.function, sid.name)] = slot.declared_type

    def predict(records, k):
        out = {}
        for rec in records:
            for sid, _ in rec.slots():
                t = answers.get((sid.file, sid.function, sid.name))
                if t:
                    out[sid] = PredictionSet(sid, [(t, 1.0)])
        return out

    return predict


def small_files():
    return sorted(names_corpus(3, 4, seed=2).items())


def test_search_eval_with_true_types():
    files = small_files()
    report = search_eval(files, truth_predictor(files), k=3)
    s = report.summary()
    assert s["files"] == 3 and s["slots"] > 0
    assert s["ground_truth_matches"] == s["slots"] == s["type_correct_annotations"]
    assert s["files_exact_match"] == 3 and s["upper_bound"] == s["slots"]


def test_search_eval_with_abstaining_predictor():
    report = search_eval(small_files(), lambda records, k: {}, k=3)
    s = report.summary()
    assert s["type_correct_annotations"] == 0 and s["upper_bound"] == 0


def test_search_eval_excludes_and_records_failures():
    bad = ("bad.py", "def f(x: int) -> str:\n    return x\n")
    broken = ("broken.py", "def f(:\n")
    report = search_eval([bad, broken] + small_files()[:1], lambda records, k: {}, k=1)
    assert "bad.py" in report.excluded and "broken.py" in report.failures
    assert len(report.files) == 1
    assert "type-correct annotations" in report.table()


def test_search_eval_with_scripted_checker():
    files = [("a.py", "def f(x: int) -> int:\n    return x\n")]
    preds = lambda records, k: {sid: PredictionSet(sid, [("str", 0.6), ("int", 0.3)]) for r in records for sid, _ in r.slots()}
    checker = ScriptedChecker({(("f", "x"), "str"): 1, (("f", "return"), "str"): 1}, {})
    s = search_eval(files, preds, k=2, checker=checker).summary()
    assert s["ground_truth_matches"] == 2 and s["upper_bound"] == 2


def test_write_report_and_table(tmp_path):
    write_report({"a": 1}, tmp_path / "r.json", "hello")
    assert json.loads((tmp_path / "r.json").read_text()) == {"a": 1}
    assert (tmp_path / "r.txt").read_text() == "hello\n"
    sid = SlotId("m", "f", "x")
    table = metrics_table({"full": topk_metrics({sid: PredictionSet(sid, [("int", 1.0)])}, {sid: "int"}, 1)})
    assert "full" in table and "1.000" in table
