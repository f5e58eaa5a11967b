"""Annotate two small functions from ranked guesses, letting the checker reject the wrong ones.

Run: python demos/walkthrough.py
"""

from typeslot import BuiltinChecker, SlotId, two_phase_annotate
from typeslot.rewrite import unified_diff

SOURCE = '''def find_match(color):
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

# Ranked guesses for each slot, as a model would produce them. The top guess
# for ``color`` and for the return of ``find_match`` are both wrong.
GUESSES = {
    SlotId("colors.py", "find_match", "color"): ["int", "str", "bool"],
    SlotId("colors.py", "find_match", "return"): ["str", "Optional[str]", "None"],
    SlotId("colors.py", "get_colors", "return"): ["List[str]", "List[Any]", "str"],
}

result = two_phase_annotate(SOURCE, GUESSES, BuiltinChecker(), "greedy", seed=0, file_path="colors.py")

print(f"unannotated file: {result.baseline.n_missing} missing slots, {result.baseline.n_errors} errors\n")
for number, phase in enumerate(result.phases, 1):
    names = ", ".join(f"{s.slot_id.function}:{s.slot_id.name}" for s in phase.catalog.slots)
    print(f"phase {number} searches {names}")
    for state in phase.history:
        chosen = {f"{s.function}:{s.name}": t for s, t in state.assignment(phase.catalog).items()}
        print(f"  score {state.score:>4g}  errors {state.report.n_errors}  {chosen}")
    kept = {f"{s.function}:{s.name}": t for s, t in phase.added.items()}
    print(f"  kept {kept} after {phase.checker_calls} checker calls\n")

print(f"{result.checker_calls} checker calls in total\n")
print(unified_diff(SOURCE, result.annotated, "colors.py"))
