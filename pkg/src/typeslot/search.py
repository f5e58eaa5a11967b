"""Feedback-directed search for a type-correct subset of predicted types.

A state assigns every slot either one of its top-k predictions (by 1-based
rank) or nothing. States are scored with a type checker as
``v * n_missing + w * n_errors``; with ``w`` larger than the number of slots,
no assignment that adds a type error can beat leaving the file alone.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .checker import BuiltinChecker, CheckerError, CheckerReport
from .extract import ParseError, SlotId, extract_functions, missing_slots
from .rewrite import RewriteError, apply_assignment

log = logging.getLogger(__name__)

NONE = None  # a slot left unannotated
GREEDY = "greedy"
NON_GREEDY = "non-greedy"

BIAS_ASSIGNED = 1.0
BIAS_PROXIMITY = 2.0
PROXIMITY_LINES = 2


@dataclass(frozen=True)
class Slot:
    slot_id: SlotId
    decl_line: int
    kind: str  # "argument" or "return"


@dataclass
class SlotCatalog:
    slots: list[Slot]
    predictions: dict[SlotId, list[str]]

    def __len__(self) -> int:
        return len(self.slots)

    def ranked(self, i: int) -> list[str]:
        return self.predictions.get(self.slots[i].slot_id, [])

    def subset(self, kind: str) -> SlotCatalog:
        slots = [s for s in self.slots if s.kind == kind]
        return SlotCatalog(slots, {s.slot_id: self.predictions.get(s.slot_id, []) for s in slots})

    @classmethod
    def from_source(cls, source: str, predictions: Mapping[SlotId, Sequence[str]], file_path: str = "<string>") -> SlotCatalog:
        """Catalog of the non-trivial unannotated slots of a file.

        ``predictions`` may be keyed with any file component; matching is on
        (function, name).
        """
        by_site = {(sid.function, sid.name): list(ranked) for sid, ranked in predictions.items()}
        slots = []
        for sid, slot in missing_slots(extract_functions(source, file_path)):
            slots.append(Slot(sid, slot.decl_line, "return" if sid.is_return else "argument"))
        return cls(slots, {s.slot_id: by_site.get((s.slot_id.function, s.slot_id.name), []) for s in slots})


@dataclass(eq=False)
class SearchState:
    """One candidate type assignment.

    ``ranks[i]`` is a 1-based rank into slot i's predictions or ``NONE``.
    Equality and hashing use the assignment only.
    """

    ranks: tuple[int | None, ...]
    parent: SearchState | None = None
    changed_slot: int | None = None
    order: int = 0
    score: float = math.inf
    report: CheckerReport | None = None

    def __eq__(self, other):
        return isinstance(other, SearchState) and self.ranks == other.ranks

    def __hash__(self):
        return hash(self.ranks)

    @property
    def n_assigned(self) -> int:
        return sum(r is not NONE for r in self.ranks)

    def assignment(self, catalog: SlotCatalog) -> dict[SlotId, str | None]:
        return {
            slot.slot_id: (None if r is NONE else catalog.ranked(i)[r - 1])
            for i, (slot, r) in enumerate(zip(catalog.slots, self.ranks))
        }


def feedback_score(report: CheckerReport, v: float = 1, w: float = 1) -> float:
    if v < 1 or w < 1:
        raise ValueError("weights must be >= 1")
    return v * report.n_missing + w * report.n_errors


def new_states(a: SearchState, catalog: SlotCatalog, counter: Callable[[], int] | None = None) -> list[SearchState]:
    """All states differing from ``a`` in one slot: a lower-ranked prediction, or no type."""
    counter = counter or itertools.count().__next__
    children = []
    for t, rank in enumerate(a.ranks):
        if rank is NONE:
            continue
        for j in range(rank + 1, len(catalog.ranked(t)) + 1):
            children.append(SearchState(a.ranks[:t] + (j,) + a.ranks[t + 1 :], a, t, counter()))
        children.append(SearchState(a.ranks[:t] + (NONE,) + a.ranks[t + 1 :], a, t, counter()))
    return children


def pick_weight(state: SearchState, catalog: SlotCatalog) -> float:
    n = len(state.ranks)
    weight = 1.0 + BIAS_ASSIGNED * (state.n_assigned / n if n else 0.0)
    parent = state.parent
    if parent is not None and parent.report is not None and state.changed_slot is not None:
        line = catalog.slots[state.changed_slot].decl_line
        if any(abs(line - e) <= PROXIMITY_LINES for e in parent.report.error_lines):
            weight += BIAS_PROXIMITY
    return weight


def pick(work_set: dict, rng: np.random.Generator, catalog: SlotCatalog) -> SearchState:
    """Remove and return a state, sampled with probability proportional to its weight.

    ``work_set`` maps ranks to states and keeps insertion order, which makes
    the draw reproducible for a seeded ``rng``.
    """
    states = list(work_set.values())
    weights = np.array([pick_weight(s, catalog) for s in states])
    u = rng.random() * weights.sum()
    i = min(int(np.searchsorted(np.cumsum(weights), u, side="right")), len(states) - 1)
    chosen = states[i]
    del work_set[chosen.ranks]
    return chosen


@dataclass
class SearchResult:
    best: SearchState
    catalog: SlotCatalog
    checker_calls: int
    explored: int
    source: str
    history: list[SearchState] = field(default_factory=list, repr=False)

    @property
    def assignment(self) -> dict[SlotId, str | None]:
        return self.best.assignment(self.catalog)

    @property
    def added(self) -> dict[SlotId, str]:
        return {sid: t for sid, t in self.assignment.items() if t is not None}


class _Evaluator:
    """Applies an assignment to the file and scores it with the checker."""

    def __init__(self, source, catalog, checker, v, w, file_path):
        self.source = source
        self.catalog = catalog
        self.checker = checker
        self.v, self.w = v, w
        self.file_path = file_path
        self.calls = 0

    def annotate(self, state: SearchState) -> str:
        added = {sid: t for sid, t in state.assignment(self.catalog).items() if t is not None}
        return apply_assignment(self.source, added)

    def __call__(self, state: SearchState) -> None:
        self.calls += 1
        try:
            text = self.annotate(state)
            records = extract_functions(text, self.file_path)
            state.report = self.checker.check(text, records)
            state.score = feedback_score(state.report, self.v, self.w)
        except (CheckerError, ParseError, RewriteError) as exc:
            log.debug("discarding state %s: %s", state.ranks, exc)
            state.report = None
            state.score = math.inf


def _best(done: Sequence[SearchState]) -> SearchState:
    return min(done, key=lambda s: (s.score, -s.n_assigned, s.order))


def assign_types(
    source: str,
    catalog: SlotCatalog,
    checker=None,
    strategy: str = GREEDY,
    budget: int | None = None,
    seed: int = 0,
    v: float = 1,
    w: float | None = None,
    baseline: CheckerReport | None = None,
    budget_factor: int = 7,
    file_path: str = "<string>",
) -> SearchResult:
    """Search for the assignment of ``catalog``'s slots with the lowest feedback score.

    ``baseline`` is the checker report for the file as given (all slots
    unannotated); when omitted it costs one extra checker call. It is always
    a candidate, so the result never has more errors than the input file.
    """
    if strategy not in (GREEDY, NON_GREEDY):
        raise ValueError(f"unknown strategy {strategy!r}")
    checker = checker or BuiltinChecker()
    if budget is None:
        budget = budget_factor * len(catalog)
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    counter = itertools.count().__next__
    evaluate = _Evaluator(source, catalog, checker, v, 1, file_path)

    extra_calls = 0
    if baseline is None:
        extra_calls = 1
        baseline = checker.check(source, extract_functions(source, file_path))
    if w is None:
        w = baseline.n_missing + 1
    evaluate.w = w

    empty = SearchState(tuple(NONE for _ in catalog.slots), order=math.inf)
    empty.report = baseline
    empty.score = feedback_score(baseline, v, w)
    if not catalog.slots:
        return SearchResult(empty, catalog, extra_calls, 0, source)

    initial = SearchState(tuple(1 if catalog.ranked(i) else NONE for i in range(len(catalog))), order=counter())
    done: dict = {empty.ranks: empty}
    history = []
    if initial.ranks != empty.ranks:
        evaluate(initial)
        done[initial.ranks] = initial
        history.append(initial)
        work = {c.ranks: c for c in new_states(initial, catalog, counter) if c.ranks not in done}
    else:
        work = {}

    # Slots outside this catalog stay missing whatever the search does.
    floor = v * max(baseline.n_missing - len(catalog), 0)
    picks = 0
    while min(s.score for s in done.values()) > floor and work and picks < budget:
        a = pick(work, rng, catalog)
        evaluate(a)
        picks += 1
        history.append(a)
        expand = a.score < math.inf and (strategy == NON_GREEDY or a.score < a.parent.score)
        done[a.ranks] = a
        if expand:
            for child in new_states(a, catalog, counter):
                if child.ranks not in done and child.ranks not in work:
                    work[child.ranks] = child

    best = _best(list(done.values()))
    log.info(
        "search over %d slots: %d checks, best score %s (%d assigned)",
        len(catalog), evaluate.calls, best.score, best.n_assigned,
    )
    text = evaluate.annotate(best) if best is not empty else source
    return SearchResult(best, catalog, evaluate.calls + extra_calls, len(history), text, history)


@dataclass
class AnnotationResult:
    source: str
    annotated: str
    assignment: dict[SlotId, str | None]
    phases: list[SearchResult]
    baseline: CheckerReport
    checker_calls: int

    @property
    def added(self) -> dict[SlotId, str]:
        return {sid: t for sid, t in self.assignment.items() if t is not None}


def two_phase_annotate(
    source: str,
    predictions: Mapping[SlotId, Sequence[str]],
    checker=None,
    strategy: str = GREEDY,
    budget_factor: int = 7,
    seed: int = 0,
    file_path: str = "<string>",
) -> AnnotationResult:
    """Search return slots first, bake the result in, then search argument slots.

    Checkers often skip bodies of functions without a return annotation, so
    argument types are only validated once return types are in place.
    """
    checker = checker or BuiltinChecker()
    catalog = SlotCatalog.from_source(source, predictions, file_path)
    baseline = checker.check(source, extract_functions(source, file_path))
    calls = 1
    w = baseline.n_missing + 1
    assignment: dict[SlotId, str | None] = {s.slot_id: None for s in catalog.slots}
    phases = []
    current, report = source, baseline
    for kind in ("return", "argument"):
        sub = catalog.subset(kind)
        if not sub.slots:
            continue
        result = assign_types(
            current, sub, checker, strategy, budget_factor * len(sub), seed,
            w=w, baseline=report, file_path=file_path,
        )
        phases.append(result)
        calls += result.checker_calls
        assignment.update(result.assignment)
        current, report = result.source, result.best.report
    return AnnotationResult(source, current, assignment, phases, baseline, calls)
