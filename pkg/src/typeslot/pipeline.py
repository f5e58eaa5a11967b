"""End-to-end helpers: settings, training from a corpus, and model directories.

A model directory holds everything prediction needs::

    settings.json   hyperparameters used for training
    types.txt       type vocabulary
    code.emb        code token embeddings
    words.emb       comment word embeddings
    model.npz       both classifiers
    split.json      training and validation file lists
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

from .evaluation import split_by_file
from .extract import DEFAULT_MAX_WINDOWS, DEFAULT_RADIUS, FunctionRecord
from .model import ModelConfig, TypePredictor, type_available
from .vocab import EmbeddingTable, TypeVocabulary, build_type_vocabulary, code_sentences, train_embeddings, word_sentences

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    radius: int = DEFAULT_RADIUS
    max_windows: int = DEFAULT_MAX_WINDOWS
    id_length: int = 10
    window_length: int = 2 * DEFAULT_RADIUS + 1
    comment_length: int = 20
    vocab_size: int = 1000
    hidden: int = 200
    epochs: int = 10
    lr: float = 0.005
    batch_size: int = 128
    embedding_dim: int = 100
    embedding_epochs: int = 5
    embedding_window: int = 5
    split_ratio: float = 0.8
    top_k: int = 5
    budget_factor: int = 7
    disabled: tuple[str, ...] = ()

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            id_length=self.id_length,
            window_length=self.window_length,
            max_windows=self.max_windows,
            comment_length=self.comment_length,
            hidden=self.hidden,
            epochs=self.epochs,
            lr=self.lr,
            batch_size=self.batch_size,
            disabled=tuple(self.disabled),
        )

    def updated(self, overrides: Mapping) -> Settings:
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown settings: {sorted(unknown)}")
        values = {k: tuple(v) if k == "disabled" else v for k, v in overrides.items() if v is not None}
        return replace(self, **values)

    @classmethod
    def from_file(cls, path: str | Path | None) -> Settings:
        if path is None:
            return cls()
        return cls().updated(json.loads(Path(path).read_text(encoding="utf-8")))


def embed(sources: Sequence[str], records: Sequence[FunctionRecord], settings: Settings, seed: int = 0):
    """Train the (code, words) embedding pair."""
    kw = dict(d=settings.embedding_dim, window=settings.embedding_window, epochs=settings.embedding_epochs, seed=seed)
    code = train_embeddings(code_sentences(sources), kind="code", **kw)
    words = word_sentences(records)
    if not any(len(s) >= 2 for s in words):
        log.warning("not enough docstring text for word embeddings; using a placeholder table")
        words = [["no", "docstring"]]
    return code, train_embeddings(words, kind="word", **kw)


def train_predictor(
    records: Sequence[FunctionRecord],
    code: EmbeddingTable,
    words: EmbeddingTable,
    settings: Settings,
    seed: int = 0,
    history: dict | None = None,
) -> TypePredictor:
    vocab = build_type_vocabulary(records, settings.vocab_size)
    return TypePredictor(vocab, code, words, settings.model_config()).fit(records, seed, history)


@dataclass
class TrainedModel:
    predictor: TypePredictor
    settings: Settings
    train_files: list[str]
    valid_files: list[str]

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        p = self.predictor
        p.vocab.save(directory / "types.txt")
        p.code.save(directory / "code.emb")
        p.words.save(directory / "words.emb")
        p.save(directory / "model.npz")
        settings = asdict(self.settings)
        settings["disabled"] = list(settings["disabled"])
        (directory / "settings.json").write_text(json.dumps(settings, indent=2) + "\n", encoding="utf-8")
        split = {"train": self.train_files, "validation": self.valid_files}
        (directory / "split.json").write_text(json.dumps(split, indent=2) + "\n", encoding="utf-8")
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> TrainedModel:
        directory = Path(directory)
        settings = Settings.from_file(directory / "settings.json")
        vocab = TypeVocabulary.load(directory / "types.txt")
        code = EmbeddingTable.load(directory / "code.emb")
        words = EmbeddingTable.load(directory / "words.emb")
        predictor = TypePredictor.load(directory / "model.npz", vocab, code, words)
        split = json.loads((directory / "split.json").read_text(encoding="utf-8"))
        return cls(predictor, settings, split["train"], split["validation"])


def train_from_corpus(
    records: Sequence[FunctionRecord],
    sources: Mapping[str, str],
    settings: Settings = Settings(),
    seed: int = 0,
    code: EmbeddingTable | None = None,
    words: EmbeddingTable | None = None,
) -> TrainedModel:
    """Split by file, train embeddings on the training files only, then both classifiers.

    ``sources`` maps the records' file paths to file contents. Pass ``code``
    and ``words`` to reuse embeddings (e.g. across ablations).
    """
    train, valid = split_by_file(records, settings.split_ratio, seed)
    train_files = sorted({r.file_path for r in train})
    valid_files = sorted({r.file_path for r in valid})
    if code is None or words is None:
        code, words = embed([sources[f] for f in train_files if f in sources], train, settings, seed)
    predictor = train_predictor(train, code, words, settings, seed)
    return TrainedModel(predictor, settings, train_files, valid_files)


def unimported(added: Mapping, records: Sequence[FunctionRecord]) -> list[tuple]:
    """(slot, type) pairs whose type names are neither built in nor imported in the file."""
    available = {(rec.qualname): rec.available_types for rec in records}
    return [
        (sid, t)
        for sid, t in added.items()
        if not type_available(t, available.get(sid.function, frozenset()))
    ]
