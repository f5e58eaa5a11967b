"""Evaluation: file-level splits, top-k metrics, the naive baseline and search evaluation."""

from __future__ import annotations

import json
import logging
import warnings
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .checker import BuiltinChecker
from .extract import FunctionRecord, SlotId, extract_functions
from .model import PredictionSet
from .rewrite import strip_annotations
from .search import GREEDY, two_phase_annotate
from .vocab import TypeVocabulary

log = logging.getLogger(__name__)


def split_by_file(records: Sequence[FunctionRecord], ratio: float = 0.8, seed: int = 0):
    """Partition records into (train, validation) so that no file is on both sides."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    files = sorted({r.file_path for r in records})
    order = np.random.default_rng(seed).permutation(len(files))
    n_train = int(round(ratio * len(files)))
    n_train = min(max(n_train, 1), max(len(files) - 1, 1))
    train_files = {files[i] for i in order[:n_train]}
    if len(files) - n_train == 0:
        warnings.warn("only one file: validation split is empty", stacklevel=2)
    train = [r for r in records if r.file_path in train_files]
    valid = [r for r in records if r.file_path not in train_files]
    return train, valid


@dataclass
class Metrics:
    precision: float
    recall: float
    f1: float
    n_correct: int
    n_predicted: int
    n_slots: int
    k: int
    weighted_precision: float = 0.0
    weighted_recall: float = 0.0
    weighted_f1: float = 0.0
    flags: list[str] = field(default_factory=list)


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def topk_metrics(
    predictions: Iterable[PredictionSet] | Mapping[SlotId, PredictionSet],
    truth: Mapping[SlotId, str],
    k: int,
    vocab: TypeVocabulary | None = None,
) -> Metrics:
    """Precision = correct / non-abstained, recall = correct / all slots.

    Slots whose true type is outside ``vocab`` are left out entirely; a slot
    counts as correct if its true type is among the first ``k`` suggestions.
    The ``weighted_*`` fields average the same quantities per true type,
    weighted by how often each type occurs.
    """
    if isinstance(predictions, Mapping):
        by_slot = dict(predictions)
    else:
        by_slot = {p.slot_id: p for p in predictions}
    slots = [s for s, t in truth.items() if vocab is None or t in vocab]
    n_corr = n_all = 0
    per_type = defaultdict(lambda: [0, 0, 0])  # correct, predicted, total
    for sid in slots:
        pred = by_slot.get(sid)
        ranked = pred.types[:k] if pred is not None else []
        stats = per_type[truth[sid]]
        stats[2] += 1
        if ranked:
            n_all += 1
            stats[1] += 1
            if truth[sid] in ranked:
                n_corr += 1
                stats[0] += 1
    flags = []
    if not slots:
        flags.append("no-slots")
    if n_all == 0:
        flags.append("no-predictions")
    precision = n_corr / n_all if n_all else 0.0
    recall = n_corr / len(slots) if slots else 0.0
    wp = wr = wf = 0.0
    for corr, pred, total in per_type.values():
        p = corr / pred if pred else 0.0
        r = corr / total
        share = total / len(slots)
        wp += share * p
        wr += share * r
        wf += share * _f1(p, r)
    return Metrics(precision, recall, _f1(precision, recall), n_corr, n_all, len(slots), k, wp, wr, wf, flags)


def naive_baseline(
    train_types: Iterable[str],
    slot_ids: Iterable[SlotId],
    k: int = 1,
    seed: int = 0,
    top: int = 10,
) -> dict[SlotId, PredictionSet]:
    """Context-free guesses: k distinct types per slot, drawn without replacement
    from the ``top`` most frequent training types in proportion to their counts."""
    counts = Counter(train_types)
    if not counts:
        raise ValueError("need at least one annotated training slot")
    common = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top]
    names = [t for t, _ in common]
    probs = np.array([c for _, c in common], dtype=float)
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    size = min(k, len(names))
    out = {}
    for sid in slot_ids:
        picks = rng.choice(len(names), size=size, replace=False, p=probs)
        out[sid] = PredictionSet(sid, [(names[i], float(probs[i])) for i in picks])
    return out


def truth_of(records: Iterable[FunctionRecord], kind: str | None = None) -> dict[SlotId, str]:
    out = {}
    for rec in records:
        for sid, slot in rec.slots():
            if slot.is_trivial or slot.declared_type is None:
                continue
            if kind is None or (kind == "return") == sid.is_return:
                out[sid] = slot.declared_type
    return out


def threshold_curve(predictions: Mapping[SlotId, PredictionSet], truth: Mapping[SlotId, str], thresholds: Sequence[float], vocab=None):
    """Top-1 (threshold, precision, recall) triples; suggestions below a threshold count as abstentions."""
    rows = []
    for tau in thresholds:
        kept = {
            sid: PredictionSet(sid, [(t, p) for t, p in ps.ranked[:1] if p >= tau])
            for sid, ps in predictions.items()
        }
        m = topk_metrics(kept, truth, 1, vocab)
        rows.append((tau, m.precision, m.recall))
    return rows


def plot_threshold_curve(rows, path: str | Path, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    taus, prec, rec = zip(*rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(taus, prec, marker="o", label="precision")
    ax.plot(taus, rec, marker="s", label="recall")
    ax.set_xlabel("confidence threshold")
    ax.set_ylim(0, 1.02)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Search evaluation


@dataclass
class FileOutcome:
    path: str
    n_slots: int
    n_added: int
    n_truth_match: int
    n_upper_bound: int
    complete: bool
    exact: bool
    checker_calls: int


@dataclass
class SearchReport:
    strategy: str
    k: int
    files: list[FileOutcome] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)
    excluded: dict[str, str] = field(default_factory=dict)

    def _total(self, attr: str) -> int:
        return sum(getattr(f, attr) for f in self.files)

    @property
    def n_slots(self) -> int:
        return self._total("n_slots")

    def summary(self) -> dict:
        n = self.n_slots or 1
        nf = len(self.files) or 1
        return {
            "strategy": self.strategy,
            "k": self.k,
            "files": len(self.files),
            "slots": self.n_slots,
            "type_correct_annotations": self._total("n_added"),
            "type_correct_fraction": self._total("n_added") / n,
            "ground_truth_matches": self._total("n_truth_match"),
            "ground_truth_fraction": self._total("n_truth_match") / n,
            "upper_bound": self._total("n_upper_bound"),
            "upper_bound_fraction": self._total("n_upper_bound") / n,
            "files_complete_and_correct": sum(f.complete for f in self.files),
            "files_complete_fraction": sum(f.complete for f in self.files) / nf,
            "files_exact_match": sum(f.exact for f in self.files),
            "files_exact_fraction": sum(f.exact for f in self.files) / nf,
            "checker_calls": self._total("checker_calls"),
            "failed_files": len(self.failures),
            "excluded_files": len(self.excluded),
        }

    def to_dict(self) -> dict:
        return {"summary": self.summary(), "files": [asdict(f) for f in self.files],
                "failures": self.failures, "excluded": self.excluded}

    def table(self) -> str:
        s = self.summary()
        rows = [
            ("slots", s["slots"], ""),
            ("type-correct annotations", s["type_correct_annotations"], f"{s['type_correct_fraction']:.1%}"),
            ("ground-truth matches", s["ground_truth_matches"], f"{s['ground_truth_fraction']:.1%}"),
            ("upper bound (prediction)", s["upper_bound"], f"{s['upper_bound_fraction']:.1%}"),
            ("files complete + type-correct", s["files_complete_and_correct"], f"{s['files_complete_fraction']:.1%}"),
            ("files exact match", s["files_exact_match"], f"{s['files_exact_fraction']:.1%}"),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"search: {self.strategy}, top-{self.k}, {s['files']} files"]
        lines += [f"  {name:<{width}}  {count:>7}  {pct:>7}" for name, count, pct in rows]
        return "\n".join(lines)


Predictor = Callable[[Sequence[FunctionRecord], int], Mapping[SlotId, PredictionSet]]


def search_eval(
    files: Iterable[tuple[str, str]],
    predictor: Predictor,
    strategy: str = GREEDY,
    k: int = 5,
    checker=None,
    budget_factor: int = 7,
    seed: int = 0,
) -> SearchReport:
    """Strip each (path, source) file, annotate it again with predictions plus search, and compare."""
    checker = checker or BuiltinChecker()
    report = SearchReport(strategy, k)
    for path, source in files:
        try:
            before = checker.check(source, extract_functions(source, path))
            if before.n_errors:
                report.excluded[path] = f"{before.n_errors} type errors before stripping"
                continue
            stripped, truth = strip_annotations(source, path)
            records = extract_functions(stripped, path)
            preds = predictor(records, k)
            ranked = {sid: ps.types[:k] for sid, ps in preds.items()}
            result = two_phase_annotate(stripped, ranked, checker, strategy, budget_factor, seed, path)
        except Exception as exc:  # noqa: BLE001 - one bad file must not stop the run
            log.warning("search evaluation failed for %s: %s", path, exc)
            report.failures[path] = f"{type(exc).__name__}: {exc}"
            continue
        added = {(s.function, s.name): t for s, t in result.added.items()}
        truth_site = {(s.function, s.name): t for s, t in truth.items()}
        ranked_site = {(s.function, s.name): r for s, r in ranked.items()}
        n_match = sum(added.get(site) == t for site, t in truth_site.items())
        report.files.append(
            FileOutcome(
                path=path,
                n_slots=len(truth_site),
                n_added=sum(site in truth_site for site in added),
                n_truth_match=n_match,
                n_upper_bound=sum(t in ranked_site.get(site, []) for site, t in truth_site.items()),
                complete=all(site in added for site in truth_site) and len(added) == len(result.assignment),
                exact=n_match == len(truth_site),
                checker_calls=result.checker_calls,
            )
        )
    return report


def write_report(data: dict, json_path: str | Path, text: str | None = None) -> None:
    Path(json_path).write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    if text is not None:
        Path(json_path).with_suffix(".txt").write_text(text + "\n", encoding="utf-8")


def metrics_table(rows: Mapping[str, Metrics]) -> str:
    lines = [f"{'configuration':<28} {'k':>2} {'prec':>6} {'rec':>6} {'f1':>6} {'w-f1':>6}"]
    for name, m in rows.items():
        lines.append(f"{name:<28} {m.k:>2} {m.precision:6.3f} {m.recall:6.3f} {m.f1:6.3f} {m.weighted_f1:6.3f}")
    return "\n".join(lines)
