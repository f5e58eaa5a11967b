"""Neural type predictor.

Three bidirectional LSTM encoders summarize the identifier words, the code
token windows and the docstring words of a slot; their final hidden states
are concatenated with the type-availability mask and fed to one dense softmax
layer over the type vocabulary. Embeddings are pre-trained and frozen.

Everything is plain numpy with hand-written backpropagation.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .extract import RETURN, FunctionRecord, SlotId, normalize_identifier
from .vocab import PAD, SEP, UNKNOWN, EmbeddingTable, TypeVocabulary, comment_words

log = logging.getLogger(__name__)

ENCODERS = ("ids", "tokens", "comments")
SUBMODELS = ENCODERS + ("mask",)
CHECKPOINT_MAGIC = "typeslot-model"
CHECKPOINT_VERSION = 1

BUILTIN_TYPE_NAMES = frozenset(
    """int float str bool bytes None complex object list dict set tuple frozenset type
    bytearray memoryview range slice Exception BaseException""".split()
)
TYPING_NAMES = frozenset(
    """Any List Dict Set FrozenSet Tuple Optional Union Callable Iterable Iterator
    Sequence Mapping MutableMapping MutableSequence Generator Type Literal
    AsyncIterator AsyncGenerator Awaitable Coroutine NoReturn TypeVar IO TextIO
    BinaryIO Pattern Match NamedTuple Collection Container Hashable Sized""".split()
)
_NAME_RE = re.compile(r"[A-Za-z_][\w.]*")


class ShapeMismatch(ValueError):
    pass


class LabelOutOfRange(ValueError):
    pass


class VocabularyMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    id_length: int = 10
    window_length: int = 7
    max_windows: int = 3
    comment_length: int = 20
    hidden: int = 200
    epochs: int = 10
    lr: float = 0.005
    batch_size: int = 128
    disabled: tuple[str, ...] = ()

    @property
    def token_length(self) -> int:
        # windows of window_length tokens joined by <sep>
        return self.max_windows * (self.window_length + 1) - 1

    def without(self, *submodels: str) -> ModelConfig:
        unknown = set(submodels) - set(SUBMODELS)
        if unknown:
            raise ValueError(f"unknown submodels {sorted(unknown)}")
        return replace(self, disabled=tuple(sorted(set(self.disabled) | set(submodels))))


NL2TYPE_LIKE = ("tokens", "mask")


# ---------------------------------------------------------------------------
# Inputs


@dataclass
class ModelInput:
    id_sequence: np.ndarray
    token_sequence: np.ndarray
    comment_sequence: np.ndarray
    type_mask: np.ndarray


def type_available(type_name: str, available: Iterable[str]) -> bool:
    """True if every name in the type is built in, from ``typing``, or imported/defined in the file."""
    available = set(available)
    for name in _NAME_RE.findall(type_name):
        if name in BUILTIN_TYPE_NAMES or name in TYPING_NAMES or name in available:
            continue
        head = name.split(".")[0]
        if head in available or (head == "typing" and name.split(".")[-1] in TYPING_NAMES):
            continue
        return False
    return True


def type_mask(vocab: TypeVocabulary, available: Iterable[str]) -> np.ndarray:
    available = frozenset(available)
    mask = np.zeros(len(vocab))
    for i, t in enumerate(vocab.types[1:], start=1):
        mask[i] = type_available(t, available)
    return mask


def _fit(indices: list[int], length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.int64)
    indices = indices[:length]
    out[: len(indices)] = indices
    return out


def identifier_words(record: FunctionRecord, slot: str) -> list[str]:
    fct = normalize_identifier(record.function_name)
    if slot == RETURN:
        args = [w for a in record.arguments for w in normalize_identifier(a.name)]
        return fct + [SEP] + args
    others = [w for a in record.arguments if a.name != slot for w in normalize_identifier(a.name)]
    return normalize_identifier(slot) + [SEP] + fct + others


def code_tokens(record: FunctionRecord, slot: str, config: ModelConfig) -> list[str]:
    s = record.slot(slot)
    windows = s.return_statements if slot == RETURN else s.usage_windows
    out: list[str] = []
    for i, window in enumerate(windows[: config.max_windows]):
        if i:
            out.append(SEP)
        out += list(window[: config.window_length])
    return out


def build_inputs(
    record: FunctionRecord,
    slot: str,
    vocab: TypeVocabulary,
    code: EmbeddingTable,
    words: EmbeddingTable,
    config: ModelConfig = ModelConfig(),
    mask_cache: dict | None = None,
) -> ModelInput:
    record.slot(slot)  # KeyError if the slot is not in the record
    ids = [code.index(w) for w in identifier_words(record, slot)]
    toks = [code.index(t) for t in code_tokens(record, slot, config)]
    com = [words.index(w) for w in comment_words(record.docstring)]
    key = record.available_types
    if mask_cache is not None and key in mask_cache:
        mask = mask_cache[key]
    else:
        mask = type_mask(vocab, key)
        if mask_cache is not None:
            mask_cache[key] = mask
    return ModelInput(
        _fit(ids, config.id_length),
        _fit(toks, config.token_length),
        _fit(com, config.comment_length),
        mask,
    )


@dataclass
class Batch:
    ids: np.ndarray
    tokens: np.ndarray
    comments: np.ndarray
    mask: np.ndarray

    @classmethod
    def stack(cls, inputs: Sequence[ModelInput]) -> Batch:
        return cls(
            np.stack([x.id_sequence for x in inputs]),
            np.stack([x.token_sequence for x in inputs]),
            np.stack([x.comment_sequence for x in inputs]),
            np.stack([x.type_mask for x in inputs]),
        )

    def __len__(self) -> int:
        return self.ids.shape[0]

    def take(self, rows) -> Batch:
        return Batch(self.ids[rows], self.tokens[rows], self.comments[rows], self.mask[rows])


# ---------------------------------------------------------------------------
# Parameters


@dataclass
class ModelParameters:
    """Trainable arrays plus the frozen embedding matrices they read from."""

    arrays: dict[str, np.ndarray]
    code_vectors: np.ndarray
    word_vectors: np.ndarray
    hidden: int
    n_types: int
    disabled: tuple[str, ...] = ()

    @classmethod
    def initialize(cls, code_vectors, word_vectors, hidden: int, n_types: int, seed: int = 0, disabled=()) -> ModelParameters:
        rng = np.random.default_rng(seed)
        arrays = {}
        for enc in ENCODERS:
            d = (word_vectors if enc == "comments" else code_vectors).shape[1]
            bound = 1.0 / np.sqrt(hidden)
            for direction in ("fw", "bw"):
                arrays[f"{enc}.{direction}.Wx"] = rng.uniform(-bound, bound, (d, 4 * hidden))
                arrays[f"{enc}.{direction}.Wh"] = rng.uniform(-bound, bound, (hidden, 4 * hidden))
                arrays[f"{enc}.{direction}.b"] = rng.uniform(-bound, bound, 4 * hidden)
        concat = 3 * 2 * hidden + n_types
        bound = 1.0 / np.sqrt(concat)
        arrays["out.W"] = rng.uniform(-bound, bound, (concat, n_types))
        arrays["out.b"] = rng.uniform(-bound, bound, n_types)
        return cls(arrays, code_vectors, word_vectors, hidden, n_types, tuple(disabled))

    @property
    def concat_dim(self) -> int:
        return 3 * 2 * self.hidden + self.n_types

    def copy(self) -> ModelParameters:
        return replace(self, arrays={k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}


# ---------------------------------------------------------------------------
# Forward and backward


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _lstm_forward(x, m, wx, wh, b, reverse):
    """Masked LSTM over time axis 1 of ``x``; returns the final hidden state and a cache.

    Masked (padding) steps carry the previous state through unchanged.
    """
    n, steps, _ = x.shape
    h_dim = wh.shape[0]
    xw = x @ wx + b
    h = np.zeros((n, h_dim))
    c = np.zeros((n, h_dim))
    cache = []
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        mt = m[:, t : t + 1]
        if not mt.any():
            cache.append(None)
            continue
        a = xw[:, t] + h @ wh
        i = _sigmoid(a[:, :h_dim])
        f = _sigmoid(a[:, h_dim : 2 * h_dim])
        g = np.tanh(a[:, 2 * h_dim : 3 * h_dim])
        o = _sigmoid(a[:, 3 * h_dim :])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        cache.append((t, mt, h, c, i, f, g, o, tc))
        c = mt * c_new + (1 - mt) * c
        h = mt * h_new + (1 - mt) * h
    return h, cache


def _lstm_backward(dh, x, wx, wh, cache, grads, prefix):
    h_dim = wh.shape[0]
    dc = np.zeros_like(dh)
    da_all = np.zeros((x.shape[0], x.shape[1], 4 * h_dim))
    dwh = grads[prefix + "Wh"]
    for entry in reversed(cache):
        if entry is None:
            continue
        t, mt, h_prev, c_prev, i, f, g, o, tc = entry
        dh_new = mt * dh
        dc_new = mt * dc + dh_new * o * (1 - tc * tc)
        da = np.concatenate(
            [
                dc_new * g * i * (1 - i),
                dc_new * c_prev * f * (1 - f),
                dc_new * i * (1 - g * g),
                dh_new * tc * o * (1 - o),
            ],
            axis=1,
        )
        da_all[:, t] = da
        dwh += h_prev.T @ da
        dc = dc_new * f + (1 - mt) * dc
        dh = da @ wh.T + (1 - mt) * dh
    grads[prefix + "Wx"] += np.einsum("ntd,ntk->dk", x, da_all)
    grads[prefix + "b"] += da_all.sum(axis=(0, 1))


def _encoder_inputs(params: ModelParameters, batch: Batch):
    for enc, idx in (("ids", batch.ids), ("tokens", batch.tokens), ("comments", batch.comments)):
        table = params.word_vectors if enc == "comments" else params.code_vectors
        yield enc, table[idx], (idx != 0).astype(float)


def _check_shapes(params: ModelParameters, batch: Batch) -> None:
    if batch.mask.shape[1] != params.n_types:
        raise ShapeMismatch(f"type mask has {batch.mask.shape[1]} entries, model has {params.n_types} types")
    for idx, table in ((batch.ids, params.code_vectors), (batch.tokens, params.code_vectors), (batch.comments, params.word_vectors)):
        if idx.size and (idx.max() >= table.shape[0] or idx.min() < 0):
            raise ShapeMismatch("token index outside the embedding table")


def _forward(params: ModelParameters, batch: Batch):
    _check_shapes(params, batch)
    a = params.arrays
    parts, caches = [], {}
    for enc, x, m in _encoder_inputs(params, batch):
        if enc in params.disabled:
            parts.append(np.zeros((len(batch), 2 * params.hidden)))
            continue
        hf, cf = _lstm_forward(x, m, a[f"{enc}.fw.Wx"], a[f"{enc}.fw.Wh"], a[f"{enc}.fw.b"], False)
        hb, cb = _lstm_forward(x, m, a[f"{enc}.bw.Wx"], a[f"{enc}.bw.Wh"], a[f"{enc}.bw.b"], True)
        parts.append(np.concatenate([hf, hb], axis=1))
        caches[enc] = (x, cf, cb)
    parts.append(np.zeros_like(batch.mask) if "mask" in params.disabled else batch.mask)
    z = np.concatenate(parts, axis=1)
    logits = z @ a["out.W"] + a["out.b"]
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return p, (z, caches)


def forward(inputs: ModelInput | Batch, params: ModelParameters) -> np.ndarray:
    """Probability distribution over the type vocabulary (one row per input for a batch)."""
    single = isinstance(inputs, ModelInput)
    batch = Batch.stack([inputs]) if single else inputs
    p, _ = _forward(params, batch)
    return p[0] if single else p


def loss_and_gradients(params: ModelParameters, batch: Batch, labels: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its gradient for every trainable array."""
    p, (z, caches) = _forward(params, batch)
    n = len(batch)
    loss = float(-np.log(p[np.arange(n), labels] + 1e-300).mean())
    grads = params.zeros_like()
    dlogits = p.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grads["out.W"] += z.T @ dlogits
    grads["out.b"] += dlogits.sum(axis=0)
    dz = dlogits @ params.arrays["out.W"].T
    h2 = 2 * params.hidden
    for k, enc in enumerate(ENCODERS):
        if enc not in caches:
            continue
        x, cf, cb = caches[enc]
        dv = dz[:, k * h2 : (k + 1) * h2]
        a = params.arrays
        _lstm_backward(dv[:, : params.hidden].copy(), x, a[f"{enc}.fw.Wx"], a[f"{enc}.fw.Wh"], cf, grads, f"{enc}.fw.")
        _lstm_backward(dv[:, params.hidden :].copy(), x, a[f"{enc}.bw.Wx"], a[f"{enc}.bw.Wh"], cb, grads, f"{enc}.bw.")
    return loss, grads


# ---------------------------------------------------------------------------
# Training


class Adam:
    def __init__(self, params: ModelParameters, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: ModelParameters, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for name, g in grads.items():
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params.arrays[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train_model(
    dataset: Sequence[tuple[ModelInput, int]] | tuple[Batch, np.ndarray],
    params: ModelParameters,
    epochs: int = 10,
    lr: float = 0.005,
    seed: int = 0,
    batch_size: int = 128,
    history: list | None = None,
) -> ModelParameters:
    """Adam on mean cross-entropy; returns new parameters (the input is not modified).

    Mini-batches are reshuffled every epoch from ``seed``. Mean training loss
    per epoch is appended to ``history`` when given.
    """
    if isinstance(dataset, tuple):
        batch, labels = dataset
    else:
        if not dataset:
            raise ValueError("empty dataset")
        batch = Batch.stack([x for x, _ in dataset])
        labels = np.array([y for _, y in dataset])
    if len(labels) == 0:
        raise ValueError("empty dataset")
    if labels.min() < 0 or labels.max() >= params.n_types:
        raise LabelOutOfRange(f"labels must be in [0, {params.n_types})")
    params = params.copy()
    opt = Adam(params, lr)
    rng = np.random.default_rng(seed)
    n = len(labels)
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            rows = order[start : start + batch_size]
            loss, grads = loss_and_gradients(params, batch.take(rows), labels[rows])
            opt.step(params, grads)
            total += loss * len(rows)
        log.info("epoch %d: mean loss %.4f", epoch + 1, total / n)
        if history is not None:
            history.append(total / n)
    return params


# ---------------------------------------------------------------------------
# Prediction


@dataclass
class PredictionSet:
    slot_id: SlotId
    ranked: list[tuple[str, float]]
    contains_unknown_top1: bool = False

    @property
    def types(self) -> list[str]:
        return [t for t, _ in self.ranked]


def rank_distribution(
    probs: np.ndarray, vocab: TypeVocabulary, k: int, threshold: float = 0.0, slot_id: SlotId | None = None
) -> PredictionSet:
    if not 1 <= k < len(vocab):
        raise ValueError("k must satisfy 1 <= k < |vocabulary|")
    if int(np.argmax(probs)) == 0:
        return PredictionSet(slot_id, [], True)
    order = np.argsort(-probs, kind="stable")
    ranked = [(vocab.decode(int(i)), float(probs[i])) for i in order if i != 0 and probs[i] >= threshold]
    return PredictionSet(slot_id, ranked[:k], False)


def predict_topk(
    inputs: ModelInput, params: ModelParameters, vocab: TypeVocabulary, k: int = 5, threshold: float = 0.0, slot_id=None
) -> PredictionSet:
    return rank_distribution(forward(inputs, params), vocab, k, threshold, slot_id)


def training_slots(records: Iterable[FunctionRecord], kind: str):
    """(record, slot name) for every non-trivial slot of one kind."""
    for rec in records:
        if kind == "return":
            if not rec.return_slot.is_trivial:
                yield rec, RETURN
        else:
            for arg in rec.arguments:
                if not arg.is_trivial:
                    yield rec, arg.name


@dataclass
class TypePredictor:
    """Vocabulary, embeddings and the two classifiers (arguments, returns)."""

    vocab: TypeVocabulary
    code: EmbeddingTable
    words: EmbeddingTable
    config: ModelConfig = field(default_factory=ModelConfig)
    arg_params: ModelParameters | None = None
    ret_params: ModelParameters | None = None

    def _params_for(self, kind: str) -> ModelParameters:
        return self.ret_params if kind == "return" else self.arg_params

    def encode(self, records: Iterable[FunctionRecord], kind: str, annotated_only: bool = False):
        inputs, labels, ids = [], [], []
        cache: dict = {}
        for rec, name in training_slots(records, kind):
            declared = rec.slot(name).declared_type
            if annotated_only and declared is None:
                continue
            inputs.append(build_inputs(rec, name, self.vocab, self.code, self.words, self.config, cache))
            labels.append(self.vocab.encode(declared))
            ids.append(rec.slot_id(name))
        return inputs, np.array(labels, dtype=np.int64), ids

    def fit(self, records: Sequence[FunctionRecord], seed: int = 0, history: dict | None = None) -> TypePredictor:
        for kind in ("argument", "return"):
            inputs, labels, _ = self.encode(records, kind, annotated_only=True)
            params = ModelParameters.initialize(
                self.code.vectors, self.words.vectors, self.config.hidden, len(self.vocab), seed, self.config.disabled
            )
            if inputs:
                losses = [] if history is not None else None
                params = train_model(
                    (Batch.stack(inputs), labels), params, self.config.epochs, self.config.lr, seed,
                    self.config.batch_size, losses,
                )
                if history is not None:
                    history[kind] = losses
            if kind == "return":
                self.ret_params = params
            else:
                self.arg_params = params
        return self

    def predict(
        self, records: Sequence[FunctionRecord], k: int = 5, threshold: float = 0.0, only_missing: bool = False
    ) -> dict[SlotId, PredictionSet]:
        out = {}
        declared = {sid: slot.declared_type for rec in records for sid, slot in rec.slots()}
        for kind in ("argument", "return"):
            inputs, _, ids = self.encode(records, kind)
            if only_missing:
                keep = [i for i, sid in enumerate(ids) if declared[sid] is None]
                inputs, ids = [inputs[i] for i in keep], [ids[i] for i in keep]
            if not inputs:
                continue
            probs = np.concatenate(
                [forward(Batch.stack(inputs[s : s + 512]), self._params_for(kind)) for s in range(0, len(inputs), 512)]
            )
            for sid, row in zip(ids, probs):
                out[sid] = rank_distribution(row, self.vocab, k, threshold, sid)
        return out

    def __call__(self, records, k: int = 5):
        return self.predict(records, k)

    # checkpoint --------------------------------------------------------
    def save(self, path: str | Path) -> None:
        header = {
            "magic": CHECKPOINT_MAGIC,
            "version": CHECKPOINT_VERSION,
            "vocabulary_sha256": self.vocab.digest,
            "code_embedding_sha256": _array_digest(self.code.vectors),
            "word_embedding_sha256": _array_digest(self.words.vectors),
            "config": asdict(self.config),
            "n_types": len(self.vocab),
        }
        arrays = {"header": np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8)}
        for kind, params in (("argument", self.arg_params), ("return", self.ret_params)):
            for name, value in params.arrays.items():
                arrays[f"{kind}/{name}"] = value
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path, vocab: TypeVocabulary, code: EmbeddingTable, words: EmbeddingTable) -> TypePredictor:
        with np.load(path) as data:
            header = json.loads(data["header"].tobytes().decode("utf-8"))
            if header.get("magic") != CHECKPOINT_MAGIC or header.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"{path}: not a model checkpoint of version {CHECKPOINT_VERSION}")
            if header["vocabulary_sha256"] != vocab.digest:
                raise VocabularyMismatch("checkpoint was trained with a different type vocabulary")
            if header["code_embedding_sha256"] != _array_digest(code.vectors) or header[
                "word_embedding_sha256"
            ] != _array_digest(words.vectors):
                raise VocabularyMismatch("checkpoint was trained with different embeddings")
            cfg = dict(header["config"])
            cfg["disabled"] = tuple(cfg["disabled"])
            config = ModelConfig(**cfg)
            parts = {}
            for kind in ("argument", "return"):
                arrays = {k.split("/", 1)[1]: data[k].copy() for k in data.files if k.startswith(kind + "/")}
                parts[kind] = ModelParameters(arrays, code.vectors, words.vectors, config.hidden, len(vocab), config.disabled)
        return cls(vocab, code, words, config, parts["argument"], parts["return"])


def _array_digest(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a, dtype="<f8").tobytes()).hexdigest()
