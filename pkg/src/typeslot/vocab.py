"""Type vocabulary and pre-trained token/word embeddings."""

from __future__ import annotations

import hashlib
import json
import re
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._source import generate_tokens, render_all
from .extract import FunctionRecord, normalize_identifier

UNKNOWN = "unknown"
PAD, UNK, SEP = "<pad>", "<unk>", "<sep>"
RESERVED = (PAD, UNK, SEP)

_VOCAB_MAGIC = "typeslot-type-vocabulary"
_EMB_MAGIC = b"TSLEMB\x00\x01"
FORMAT_VERSION = 1


class EmptyCorpus(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class FormatError(ValueError):
    pass


@dataclass
class TypeVocabulary:
    """Most frequent type names first; index 0 is the ``unknown`` type."""

    types: list[str]
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.types or self.types[0] != UNKNOWN:
            raise ValueError("index 0 must be the unknown type")
        self._index = {t: i for i, t in enumerate(self.types)}

    def __len__(self) -> int:
        return len(self.types)

    def __contains__(self, type_name: str) -> bool:
        return type_name in self._index and type_name != UNKNOWN

    def encode(self, type_name: str | None) -> int:
        return self._index.get(type_name, 0)

    def decode(self, index: int) -> str:
        return self.types[index]

    def coverage(self, type_names: Iterable[str]) -> float:
        names = list(type_names)
        if not names:
            return 0.0
        return sum(name in self for name in names) / len(names)

    @property
    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.types).encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        lines = [f"{_VOCAB_MAGIC} {FORMAT_VERSION} {len(self.types)}"]
        lines += [f"{self.counts.get(t, 0)}\t{t}" for t in self.types]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> TypeVocabulary:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = lines[0].split()
        if len(header) != 3 or header[0] != _VOCAB_MAGIC:
            raise FormatError(f"{path}: not a type vocabulary file")
        if int(header[1]) != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported version {header[1]}")
        rows = [line.split("\t", 1) for line in lines[1 : 1 + int(header[2])]]
        types = [t for _, t in rows]
        counts = {t: int(c) for c, t in rows if t != UNKNOWN}
        return cls(types, counts)


def slot_types(records: Iterable[FunctionRecord]) -> list[str]:
    """Declared types of all non-trivial annotated slots, arguments and returns pooled."""
    return [
        slot.declared_type
        for rec in records
        for _, slot in rec.slots()
        if not slot.is_trivial and slot.declared_type is not None
    ]


def build_type_vocabulary(records: Iterable[FunctionRecord], cap: int = 1000) -> TypeVocabulary:
    if cap < 1:
        raise ValueError("cap must be >= 1")
    counts = Counter(slot_types(records))
    if not counts:
        raise EmptyCorpus("no annotated slots")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
    return TypeVocabulary([UNKNOWN] + [t for t, _ in ranked], dict(ranked))


# ---------------------------------------------------------------------------
# Embeddings


@dataclass
class EmbeddingTable:
    tokens: list[str]
    vectors: np.ndarray
    kind: str = "code"

    def __post_init__(self):
        if tuple(self.tokens[:3]) != RESERVED:
            raise ValueError(f"first entries must be {RESERVED}")
        if self.vectors.shape[0] != len(self.tokens):
            raise ValueError("one vector per token required")
        self._index = {t: i for i, t in enumerate(self.tokens)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, token: str) -> int:
        return self._index.get(token, 1)

    def lookup(self, token: str) -> np.ndarray:
        return self.vectors[self.index(token)]

    def save(self, path: str | Path) -> None:
        kind = self.kind.encode("utf-8")
        blob = json.dumps(self.tokens, ensure_ascii=False).encode("utf-8")
        vectors = np.ascontiguousarray(self.vectors, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(_EMB_MAGIC)
            fh.write(struct.pack("<IIQQQ", FORMAT_VERSION, len(kind), len(self.tokens), self.dim, len(blob)))
            fh.write(kind)
            fh.write(blob)
            fh.write(vectors.tobytes())

    @classmethod
    def load(cls, path: str | Path) -> EmbeddingTable:
        data = Path(path).read_bytes()
        if not data.startswith(_EMB_MAGIC):
            raise FormatError(f"{path}: not an embedding file")
        pos = len(_EMB_MAGIC)
        version, n_kind, n, d, n_blob = struct.unpack_from("<IIQQQ", data, pos)
        if version != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        pos += struct.calcsize("<IIQQQ")
        kind = data[pos : pos + n_kind].decode("utf-8")
        pos += n_kind
        tokens = json.loads(data[pos : pos + n_blob].decode("utf-8"))
        pos += n_blob
        vectors = np.frombuffer(data, dtype="<f8", count=n * d, offset=pos).reshape(n, d).astype(np.float64)
        if len(tokens) != n:
            raise FormatError(f"{path}: token count mismatch")
        return cls(tokens, vectors, kind)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b) + 1e-12))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30, 30)))


def _scatter_add(target: np.ndarray, rows: np.ndarray, values: np.ndarray) -> None:
    """``target[rows] += values`` with repeated rows summed (a faster ``np.add.at``)."""
    order = np.argsort(rows, kind="stable")
    rows = rows[order]
    starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
    target[rows[starts]] += np.add.reduceat(values[order], starts, axis=0)


def train_embeddings(
    sentences: Sequence[Sequence[str]],
    d: int = 100,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    seed: int = 0,
    lr: float = 0.025,
    min_count: int = 1,
    batch_size: int = 256,
    kind: str = "code",
) -> EmbeddingTable:
    """Skip-gram with negative sampling, trained with mini-batch SGD.

    Deterministic for a fixed seed. Negatives are drawn from the unigram
    distribution raised to 3/4; the learning rate decays linearly to 1e-4 of
    its start value. The published vector of a token is the sum of its input
    and output vectors.
    """
    sentences = [list(s) for s in sentences if len(s) >= 1]
    if not any(len(s) >= 2 for s in sentences):
        raise InsufficientData("need at least one sentence with two or more tokens")
    counts = Counter(tok for s in sentences for tok in s if tok not in RESERVED)
    vocab = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    tokens = list(RESERVED) + vocab
    index = {t: i for i, t in enumerate(tokens)}
    n = len(tokens)
    rng = np.random.default_rng(seed)

    centers, contexts = [], []
    for s in sentences:
        ids = np.array([index.get(t, -1) for t in s])
        for offset in range(1, window + 1):
            a, b = ids[:-offset], ids[offset:]
            keep = (a >= 3) & (b >= 3)
            centers += [a[keep], b[keep]]
            contexts += [b[keep], a[keep]]
    centers = np.concatenate(centers) if centers else np.zeros(0, int)
    contexts = np.concatenate(contexts) if contexts else np.zeros(0, int)
    if centers.size == 0:
        raise InsufficientData("no co-occurring tokens")

    freq = np.zeros(n)
    for t in vocab:
        freq[index[t]] = counts[t]
    noise = freq**0.75
    noise /= noise.sum()
    noise_cdf = np.cumsum(noise)

    w_in = (rng.random((n, d)) - 0.5) / d
    w_out = np.zeros((n, d))
    total = epochs * int(np.ceil(centers.size / batch_size))
    step = 0
    for _ in range(epochs):
        order = rng.permutation(centers.size)
        for start in range(0, centers.size, batch_size):
            alpha = lr * max(1e-4, 1.0 - step / total)
            step += 1
            sel = order[start : start + batch_size]
            c, o = centers[sel], contexts[sel]
            neg = np.searchsorted(noise_cdf, rng.random((sel.size, negatives)), side="right")
            neg = np.minimum(neg, n - 1)
            targets = np.concatenate([o[:, None], neg], axis=1)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0
            v = w_in[c]
            u = w_out[targets]
            g = (labels - _sigmoid(np.einsum("bd,bkd->bk", v, u))) * alpha
            grad_in = np.einsum("bk,bkd->bd", g, u)
            grad_out = g[:, :, None] * v[:, None, :]
            _scatter_add(w_out, targets.ravel(), grad_out.reshape(-1, d))
            _scatter_add(w_in, c, grad_in)

    # input + output vectors: the sum also reflects direct co-occurrence,
    # not only shared contexts
    vectors = w_in + w_out
    vectors[0] = 0.0
    vectors[1] = vectors[3:].mean(axis=0) if n > 3 else 0.0
    vectors[2] = np.random.default_rng(seed + 1).normal(0.0, 1.0 / np.sqrt(d), d)
    return EmbeddingTable(tokens, vectors, kind)


# ---------------------------------------------------------------------------
# Training sentences

_COMMENT_SPLIT = re.compile(r"[^\w]+")


def comment_words(text: str | None) -> list[str]:
    if not text:
        return []
    return [w for w in _COMMENT_SPLIT.split(text.lower()) if w]


def code_sentences(sources: Iterable[str]) -> list[list[str]]:
    """Two sentences per file: its raw token stream, and the same stream with
    every identifier expanded to its normalized words (identifier sequences
    are looked up in the code embedding too)."""
    out = []
    for source in sources:
        try:
            toks = render_all(generate_tokens(source))
        except Exception:
            continue
        out.append(toks)
        expanded = []
        for tok in toks:
            if tok.isidentifier():
                expanded += normalize_identifier(tok)
            else:
                expanded.append(tok)
        out.append(expanded)
    return out


def word_sentences(records: Iterable[FunctionRecord]) -> list[list[str]]:
    return [words for rec in records if (words := comment_words(rec.docstring))]
