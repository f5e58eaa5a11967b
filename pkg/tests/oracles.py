"""Independent reference implementations and fixtures shared by the tests."""

from __future__ import annotations

import itertools
import random
import sysconfig
from pathlib import Path

import numpy as np

from typeslot.checker import CheckerReport
from typeslot.extract import SlotId, extract_functions, missing_slots
from typeslot.model import Batch, ModelParameters, loss_and_gradients

# ---------------------------------------------------------------------------
# The two-function walkthrough: unannotated source and the ranked predictions
# listed next to each slot.

COLORS_SOURCE = '''def find_match(color):
    """
    Args:
      color (str): color to match on and return
    """
    candidates = get_colors()
    for candidate in candidates:
        if color == candidate:
            return color
    return None


def get_colors():
    return ["red", "blue", "green"]
'''

COLORS_PREDICTIONS = {
    SlotId("colors.py", "find_match", "color"): ["int", "str", "bool"],
    SlotId("colors.py", "find_match", "return"): ["str", "Optional[str]", "None"],
    SlotId("colors.py", "get_colors", "return"): ["List[str]", "List[Any]", "str"],
}

COLORS_ANNOTATED = COLORS_SOURCE.replace("def find_match(color):", "def find_match(color: str) -> Optional[str]:").replace(
    "def get_colors():", "def get_colors() -> List[str]:"
)


# ---------------------------------------------------------------------------
# Tiny model and central finite differences


def tiny_model(seed: int, hidden: int = 4, n_types: int = 6, length: int = 3, batch: int = 4):
    rng = np.random.default_rng(seed)
    d = 5
    code = rng.normal(size=(9, d))
    code[0] = 0.0
    words = rng.normal(size=(8, d))
    words[0] = 0.0
    params = ModelParameters.initialize(code, words, hidden, n_types, seed=seed)
    for name in params.arrays:
        params.arrays[name] = rng.normal(scale=0.5, size=params.arrays[name].shape)
    b = Batch(
        rng.integers(1, 9, (batch, length)),
        rng.integers(0, 9, (batch, length)),
        rng.integers(0, 8, (batch, length)),
        rng.integers(0, 2, (batch, n_types)).astype(float),
    )
    b.ids[0, -1] = 0  # one padded position
    labels = rng.integers(0, n_types, batch)
    return params, b, labels


def numeric_gradients(params: ModelParameters, batch: Batch, labels, eps: float = 1e-4) -> dict[str, np.ndarray]:
    out = {}
    for name, arr in params.arrays.items():
        grad = np.zeros_like(arr)
        for ix in np.ndindex(arr.shape):
            old = arr[ix]
            arr[ix] = old + eps
            plus, _ = loss_and_gradients(params, batch, labels)
            arr[ix] = old - eps
            minus, _ = loss_and_gradients(params, batch, labels)
            arr[ix] = old
            grad[ix] = (plus - minus) / (2 * eps)
        out[name] = grad
    return out


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


# ---------------------------------------------------------------------------
# Scripted oracle checker and brute-force enumeration


class ScriptedChecker:
    """Counts errors from a fixed table instead of analysing code.

    ``unary[(slot, type)]`` errors are charged whenever the slot carries that
    type; ``pairwise[((s1, t1), (s2, t2))]`` when both hold. ``base`` errors
    exist in the file regardless.
    """

    checker_id = "scripted"

    def __init__(self, unary, pairwise, base=0):
        self.unary, self.pairwise, self.base = unary, pairwise, base
        self.calls = 0

    def errors(self, declared: dict) -> int:
        total = self.base
        for key, value in self.unary.items():
            if declared.get(key[0]) == key[1]:
                total += value
        for (a, b), value in self.pairwise.items():
            if declared.get(a[0]) == a[1] and declared.get(b[0]) == b[1]:
                total += value
        return total

    def check(self, source, extraction=None, file_path="<string>"):
        self.calls += 1
        extraction = extraction if extraction is not None else extract_functions(source, file_path)
        declared = {(sid.function, sid.name): slot.declared_type for rec in extraction for sid, slot in rec.slots()}
        n_errors = self.errors(declared)
        lines = [1 + (i % 5) for i in range(n_errors)]
        return CheckerReport(len(missing_slots(extraction)), n_errors, tuple(lines), self.checker_id)


TYPE_POOL = ("int", "str", "bool", "float", "bytes", "List[int]", "Dict[str,int]", "Optional[str]")


def random_instance(rng: random.Random, max_slots: int = 4, max_k: int = 3):
    """A one-function file with |T| slots, k ranked predictions each, and a scripted checker."""
    n_slots = rng.randint(1, max_slots)
    k = rng.randint(1, max_k)
    n_args = rng.randint(max(0, n_slots - 1), n_slots)
    args = [f"a{i}" for i in range(n_args)]
    names = args + (["return"] if n_slots > n_args else [])
    arrow = "" if "return" in names else " -> None"
    source = f"def f({', '.join(args)}){arrow}:\n    return None\n"
    predictions = {SlotId("inst.py", "f", n): rng.sample(TYPE_POOL, k) for n in names}
    unary = {}
    for n in names:
        for t in predictions[SlotId("inst.py", "f", n)]:
            if rng.random() < 0.4:
                unary[(("f", n), t)] = rng.randint(1, 2)
    pairwise = {}
    for a, b in itertools.combinations(names, 2):
        ta = rng.choice(predictions[SlotId("inst.py", "f", a)])
        tb = rng.choice(predictions[SlotId("inst.py", "f", b)])
        if rng.random() < 0.5:
            pairwise[((("f", a), ta), (("f", b), tb))] = 1
    base = rng.choice((0, 0, 1))
    return source, predictions, ScriptedChecker(unary, pairwise, base), k


def brute_force_minimum(predictions, checker: ScriptedChecker, n_missing_outside: int = 0):
    """Global minimum of v*n_missing + w*n_errors over all (k+1)^|T| assignments (v=1)."""
    sids = list(predictions)
    w = len(sids) + n_missing_outside + 1
    best = None
    for combo in itertools.product(*[[None, *predictions[s]] for s in sids]):
        declared = {(s.function, s.name): t for s, t in zip(sids, combo)}
        n_missing = sum(t is None for t in combo) + n_missing_outside
        score = n_missing + w * checker.errors(declared)
        best = score if best is None else min(best, score)
    return best


# ---------------------------------------------------------------------------
# Real files


def stdlib_files(n: int = 50, max_slots: int = 40, max_bytes: int = 20000) -> list[tuple[str, str]]:
    """Small standard-library modules that parse and have a few missing slots, in name order."""
    lib = Path(sysconfig.get_paths()["stdlib"])
    out = []
    for path in sorted(lib.glob("*.py")):
        try:
            text = path.read_text(encoding="utf-8")
            if len(text) > max_bytes:
                continue
            count = len(missing_slots(extract_functions(text, path.name)))
        except Exception:
            continue
        if 3 <= count <= max_slots:
            out.append((path.name, text))
        if len(out) == n:
            break
    return out


# ---------------------------------------------------------------------------
# Hand-computed metric cases: (name, truth, ranked predictions, k, in-vocabulary
# types or None, expected (precision, recall, f1)). Slots are named by index.


def _case(name, truth, preds, k, vocab, expected, weighted=None):
    sid = lambda i: SlotId("m.py", "f", f"a{i}")
    return (
        name,
        {sid(i): t for i, t in enumerate(truth)},
        {sid(i): p for i, p in enumerate(preds) if p is not None},
        k,
        vocab,
        expected,
        weighted,
    )


METRIC_CASES = [
    # 10 slots, 8 answered, 6 right: 6/8, 6/10, 2*.75*.6/1.35
    _case("six-of-eight", ["int"] * 10, [["int"]] * 6 + [["str"]] * 2 + [None] * 2, 1, None, (0.75, 0.6, 2 / 3)),
    _case("all-abstain", ["int", "str"], [[], None], 1, None, (0.0, 0.0, 0.0)),
    _case("all-right", ["int", "str", "bool"], [["int"], ["str"], ["bool"]], 1, None, (1.0, 1.0, 1.0)),
    _case("second-rank-top1", ["int"] * 4, [["str", "int"]] * 4, 1, None, (0.0, 0.0, 0.0)),
    _case("second-rank-top2", ["int"] * 4, [["str", "int"]] * 4, 2, None, (1.0, 1.0, 1.0)),
    # the Foo slot is out of vocabulary and ignored
    _case("oov-excluded", ["int", "str", "Foo"], [["int"], ["str"], ["int"]], 1, {"int", "str"}, (1.0, 1.0, 1.0)),
    _case("two-of-five", ["int"] * 5, [["int"]] * 2 + [["str"]] * 3, 1, None, (0.4, 0.4, 0.4)),
    # one confident correct answer, three abstentions: 1/1, 1/4, 2*.25/1.25
    _case("one-answered", ["int"] * 4, [["int"], None, None, None], 1, None, (1.0, 0.25, 0.4)),
    _case("none-right", ["int", "str", "bool"], [["str"], ["int"], None], 1, None, (0.0, 0.0, 0.0)),
    # int: 1 right + 1 abstain (p 1, r .5); str: 1 right + 1 wrong (p .5, r .5)
    _case(
        "weighted-mix",
        ["int", "int", "str", "str"],
        [["int"], None, ["str"], ["int"]],
        1,
        None,
        (2 / 3, 0.5, 4 / 7),
        (0.75, 0.5, 7 / 12),
    ),
]
