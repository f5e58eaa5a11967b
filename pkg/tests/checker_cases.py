"""Hand-written checker snippets with the diagnostic lines each must produce."""

CASES = [
    ("unannotated_is_unchecked", '''
def f(x):
    return x + "a" * 2 - 1
''', []),
    ("return_int_as_str", '''
def f() -> str:
    return 1
''', [3]),
    ("return_param_mismatch", '''
def f(x: int) -> str:
    return x
''', [3]),
    ("int_widens_to_float", '''
def f(x: int) -> float:
    return x
''', []),
    ("float_does_not_narrow", '''
def f(x: float) -> int:
    return x
''', [3]),
    ("optional_accepts_none", '''
from typing import Optional

def f(x: str) -> Optional[str]:
    if x:
        return x
    return None
''', []),
    ("optional_is_not_plain", '''
from typing import Optional

def f(x: Optional[str]) -> str:
    return x
''', [5]),
    ("none_return_with_value", '''
def f(x: int) -> None:
    return x
''', [3]),
    ("none_return_with_any_value", '''
def f(x) -> None:
    return x
''', [3]),
    ("missing_return", '''
def f(x: int) -> int:
    if x:
        return x
''', [2]),
    ("if_else_both_return", '''
def f(x: int) -> int:
    if x:
        return x
    else:
        return 0
''', []),
    ("raise_terminates", '''
def f(x: int) -> int:
    raise ValueError(x)
''', []),
    ("stub_body_not_missing", '''
def f(x: int) -> int:
    """Docstring only."""
    ...
''', []),
    ("list_invariance", '''
from typing import List

def f(x: List[int]) -> List[float]:
    return x
''', [5]),
    ("list_literal_ok", '''
from typing import List

def f() -> List[str]:
    return ["a", "b"]
''', []),
    ("list_literal_wrong_element", '''
from typing import List

def f() -> List[str]:
    return [1, 2]
''', [5]),
    ("dict_literal", '''
from typing import Dict

def f() -> Dict[str, int]:
    return {"a": 1}
''', []),
    ("str_plus_int", '''
def f(x: str) -> str:
    return x + 1
''', [3]),
    ("any_escapes", '''
def g(y):
    return y

def f(x: str) -> int:
    return g(x)
''', []),
    ("call_argument_mismatch", '''
def g(y: int) -> int:
    return y

def f(x: str) -> int:
    return g(x)
''', [6]),
    ("call_return_propagates", '''
def g(y: int) -> str:
    return "v"

def f(x: int) -> int:
    return g(x)
''', [6]),
    ("keyword_argument_checked", '''
def g(y: int, *, z: str) -> int:
    return y

def f() -> int:
    return g(1, z=2)
''', [6]),
    ("module_level_call_checked", '''
def g(y: int) -> int:
    return y

g("text")
''', [5]),
    ("assignment_then_return", '''
def f() -> str:
    value = 3
    return value
''', [4]),
    ("join_of_branches_is_any", '''
def f(x) -> str:
    value = 3
    if x:
        value = "s"
    return value
''', []),
    ("bool_is_int", '''
def f(x: bool) -> int:
    return x
''', []),
    ("generator_not_checked", '''
from typing import Iterator

def f(x: int) -> Iterator[int]:
    yield x
''', []),
    ("method_return", '''
class A:
    def m(self, x: int) -> str:
        return x
''', [4]),
    ("len_is_int", '''
def f(x: str) -> str:
    return len(x)
''', [3]),
    ("two_errors_in_one_function", '''
def f(x: int) -> str:
    if x:
        return x
    y = "a" + 1
    return y
''', [4, 5]),
]
