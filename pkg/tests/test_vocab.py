import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from typeslot.extract import extract_functions
from typeslot.vocab import (
    UNKNOWN,
    EmbeddingTable,
    EmptyCorpus,
    FormatError,
    InsufficientData,
    TypeVocabulary,
    build_type_vocabulary,
    code_sentences,
    comment_words,
    cosine,
    train_embeddings,
)


def records_with(counts: dict[str, int]):
    lines = []
    i = 0
    for t, n in counts.items():
        for _ in range(n):
            lines.append(f"def f{i}(x: {t}):\n    pass\n")
            i += 1
    return extract_functions("\n".join(lines))


def test_vocabulary_cap_and_unknown():
    vocab = build_type_vocabulary(records_with({"int": 5, "str": 3, "Foo": 1}), cap=2)
    assert vocab.types == [UNKNOWN, "int", "str"]
    assert vocab.encode("Foo") == 0
    assert "Foo" not in vocab and "int" in vocab


def test_vocabulary_keeps_all_and_breaks_ties_lexicographically():
    vocab = build_type_vocabulary(records_with({"int": 5, "str": 3, "Foo": 1}), cap=10)
    assert vocab.types == [UNKNOWN, "int", "str", "Foo"]
    assert build_type_vocabulary(records_with({"B": 2, "A": 2}), cap=1).types == [UNKNOWN, "A"]


def test_vocabulary_pools_arguments_and_returns_and_skips_trivial():
    recs = extract_functions(
        "class C:\n    def __str__(self: 'C') -> str:\n        return ''\n"
        "def g(a: int) -> bytes:\n    return b''\n"
    )
    assert sorted(build_type_vocabulary(recs).types[1:]) == ["bytes", "int"]


def test_vocabulary_errors_and_round_trip(tmp_path):
    with pytest.raises(EmptyCorpus):
        build_type_vocabulary(extract_functions("def f(x):\n    pass\n"))
    with pytest.raises(ValueError):
        build_type_vocabulary(records_with({"int": 1}), cap=0)
    vocab = build_type_vocabulary(records_with({"int": 2, "Dict[str,int]": 1}))
    vocab.save(tmp_path / "t.txt")
    again = TypeVocabulary.load(tmp_path / "t.txt")
    assert again.types == vocab.types and again.digest == vocab.digest
    for i in range(len(vocab)):
        assert vocab.encode(vocab.decode(i)) == i
    (tmp_path / "bad.txt").write_text("nonsense\n")
    with pytest.raises(FormatError):
        TypeVocabulary.load(tmp_path / "bad.txt")


@given(st.dictionaries(st.sampled_from(list("ABCDEFGH")), st.integers(1, 6), min_size=1), st.integers(1, 8), st.integers(1, 8))
def test_coverage_monotone_in_cap(counts, cap1, cap2):
    cap1, cap2 = sorted((cap1, cap2))
    recs = records_with(counts)
    names = [t for t, n in counts.items() for _ in range(n)]
    v1, v2 = build_type_vocabulary(recs, cap1), build_type_vocabulary(recs, cap2)
    assert v1.coverage(names) <= v2.coverage(names)
    freqs = [v2.counts[t] for t in v2.types[1:]]
    assert freqs == sorted(freqs, reverse=True)


def test_correlated_tokens_embed_close():
    rng = np.random.default_rng(0)
    noise = [f"w{i}" for i in range(40)]
    sentences = [["a", "b"] for _ in range(500)]
    sentences += [list(rng.choice(noise, 6)) for _ in range(300)]
    table = train_embeddings(sentences, d=16, epochs=3)
    a, b = table.lookup("a"), table.lookup("b")
    others = [cosine(a, table.lookup(t)) for t in noise]
    assert cosine(a, b) > max(others)


def test_embeddings_unknown_pad_and_determinism(tmp_path):
    sentences = [["x", "y", "z"], ["y", "z", "x", "x"]] * 20
    t1 = train_embeddings(sentences, d=8, epochs=2, seed=5)
    t2 = train_embeddings(sentences, d=8, epochs=2, seed=5)
    assert np.array_equal(t1.vectors, t2.vectors)
    assert np.array_equal(t1.lookup("never seen"), t1.vectors[1])
    assert not t1.vectors[0].any()
    t1.save(tmp_path / "e.emb")
    back = EmbeddingTable.load(tmp_path / "e.emb")
    assert back.tokens == t1.tokens and np.array_equal(back.vectors, t1.vectors) and back.kind == t1.kind


def test_newline_tokens_survive_checkpoint(tmp_path):
    table = train_embeddings(code_sentences(["def f(a):\n    return a\n"] * 5), d=4, epochs=1)
    assert "\n" in table.tokens
    table.save(tmp_path / "c.emb")
    assert EmbeddingTable.load(tmp_path / "c.emb").tokens == table.tokens


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        train_embeddings([["only"]], d=4)


def test_training_sentences():
    assert comment_words("Update the name, and (optionally) propagate.") == [
        "update", "the", "name", "and", "optionally", "propagate",
    ]
    raw, expanded = code_sentences(["first_name = x\n"])
    assert raw[:2] == ["first_name", "="]
    assert expanded[:3] == ["first", "name", "="]
