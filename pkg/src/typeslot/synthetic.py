"""Generated corpora for experiments and tests.

``names_corpus`` writes files whose identifiers alone decide the types:
every argument and function name carries one of a few type words
(``count`` for int, ``label`` for str, ...), while bodies, usage contexts and
docstrings are drawn from the same pool regardless of type.

``formatting_corpus`` stresses the rewriter with comments, odd spacing,
defaults, decorators, nesting and multi-line signatures.
"""

from __future__ import annotations

import random
from pathlib import Path

TYPE_WORDS = {
    "int": ("count", "size", "total", "offset", "limit"),
    "str": ("name", "label", "title", "message", "prefix"),
    "bool": ("enabled", "verbose", "strict", "visible", "active"),
    "float": ("ratio", "weight", "score", "rate", "factor"),
    "List[str]": ("items", "tags", "lines", "words", "keys"),
    "Dict[str, int]": ("mapping", "lookup", "registry", "table", "histogram"),
    "bytes": ("payload", "blob", "buffer", "chunk", "digest"),
    "Optional[str]": ("maybe", "fallback", "hint", "alias", "nickname"),
}

VERBS = ("get", "load", "make", "build", "read", "find", "compute", "resolve", "fetch", "pick")
HELPERS = ("process", "record", "transform", "combine", "emit", "inspect", "convert", "merge")
DOCSTRINGS = (
    "Process the given values.",
    "Helper used by the pipeline.",
    "Return the result for the inputs.",
    "Handle one step of the job.",
    "Small utility; see module notes.",
    "Compute a value from the arguments.",
)
_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _nonce(rng: random.Random) -> str:
    return "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(2))


def _statement(rng: random.Random, arg: str) -> str:
    helper = rng.choice(HELPERS)
    return rng.choice(
        (
            f"{helper}({arg})",
            f"state = {helper}({arg}, state)",
            f"if {helper}({arg}):\n        state = None",
            f"{helper}(state, key={arg})",
        )
    )


def names_function(rng: random.Random, n_args: int | None = None) -> tuple[str, dict[str, str]]:
    """One function; returns its source and the intended type of every slot."""
    n_args = rng.randint(1, 3) if n_args is None else n_args
    ret_type = rng.choice(list(TYPE_WORDS))
    fname = f"{rng.choice(VERBS)}_{rng.choice(TYPE_WORDS[ret_type])}_{_nonce(rng)}"
    args, types = [], {"return": ret_type}
    while len(args) < n_args:
        t = rng.choice(list(TYPE_WORDS))
        name = f"{rng.choice(TYPE_WORDS[t])}_{_nonce(rng)}"
        if name in types:
            continue
        args.append(f"{name}: {t}")
        types[name] = t
    lines = [f"def {fname}({', '.join(args)}) -> {ret_type}:"]
    if rng.random() < 0.7:
        lines.append(f'    """{rng.choice(DOCSTRINGS)}"""')
    lines.append("    state = None")
    for name in list(types)[1:]:
        lines.append("    " + _statement(rng, name))
    lines.append(f"    result = {rng.choice(HELPERS)}(state)")
    lines.append("    return result")
    return "\n".join(lines) + "\n", types


def names_corpus(n_files: int = 250, functions_per_file: int = 8, seed: int = 0) -> dict[str, str]:
    """Map file name -> fully annotated source."""
    rng = random.Random(seed)
    files = {}
    header = (
        "from typing import Dict, List, Optional\n\n"
        f"from support import {', '.join(HELPERS)}\n"
    )
    for i in range(n_files):
        parts = [header]
        for _ in range(functions_per_file):
            src, _ = names_function(rng)
            parts.append("\n" + src)
        files[f"module_{i:04d}.py"] = "\n".join(parts)
    return files


def write_corpus(files: dict[str, str], root: str | Path) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (root / name).write_text(text, encoding="utf-8")
    return root


# ---------------------------------------------------------------------------
# Formatting stress corpus

_ANNOTATIONS = ("int", "str", "float", "bool", "List[int]", "Dict[str, Any]", "Optional[str]", "Tuple[int, ...]", "bytes")


def _ann(rng: random.Random) -> str:
    t = rng.choice(_ANNOTATIONS)
    return rng.choice((f": {t}", f":{t}", f" : {t}", f": {t}"))


def _params(rng: random.Random, names: list[str]) -> list[str]:
    out, defaults = [], False
    for name in names:
        text = name + (_ann(rng) if rng.random() < 0.6 else "")
        defaults = defaults or rng.random() < 0.3
        if defaults:
            text += rng.choice((" = None", "=None", " = 3", "='x'", " = (1, 2)"))
        out.append(text)
    return out


def _signature(rng: random.Random, name: str, params: list[str], ret: str | None, indent: str) -> str:
    arrow = "" if ret is None else rng.choice((f" -> {ret}", f"->{ret}", f"  ->  {ret}"))
    prefix = rng.choice(("def ", "def ", "async def "))
    if rng.random() < 0.3 and params:
        trailing = rng.random() < 0.5
        lines = [
            indent + "    " + p + ("," if i < len(params) - 1 or trailing else "") + rng.choice(("", "  # note"))
            for i, p in enumerate(params)
        ]
        return f"{indent}{prefix}{name}(\n" + "\n".join(lines) + f"\n{indent}){arrow}:"
    return f"{indent}{prefix}{name}({', '.join(params)}){arrow}:"


def formatting_file(rng: random.Random) -> str:
    out = ["# generated module", "from typing import Any, Dict, List, Optional, Tuple", ""]
    if rng.random() < 0.5:
        out += ["CONSTANT = 'def fake(x: int) -> str:'  # not a function", ""]
    for i in range(rng.randint(2, 6)):
        indent = ""
        if rng.random() < 0.3:
            out.append(f"class Holder{i}:")
            out.append('    """Container."""')
            indent = "    "
        names = rng.sample(["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"], rng.randint(0, 4))
        params = (["self"] if indent else []) + _params(rng, names)
        if rng.random() < 0.2:
            params.append("*args" + (":int" if rng.random() < 0.5 else ""))
        if rng.random() < 0.2:
            params.append("**kwargs" + (": Any" if rng.random() < 0.5 else ""))
        ret = rng.choice(_ANNOTATIONS) if rng.random() < 0.6 else None
        if rng.random() < 0.2:
            out.append(indent + "@decorator")
        out.append(_signature(rng, f"func_{i}", params, ret, indent))
        body = indent + "    "
        if rng.random() < 0.5:
            out.append(body + f'"""Docstring with (x: int) -> str inside {i}."""')
        if rng.random() < 0.3:
            out.append(body + "def inner(q:int)->int:")
            out.append(body + "    return q  # inner")
        out.append(body + "value = [n for n in range(3)]  # trailing comment")
        out.append(body + "return value")
        out.append("")
    return "\n".join(out) + "\n"


def formatting_corpus(n_files: int = 200, seed: int = 0) -> dict[str, str]:
    rng = random.Random(seed)
    return {f"fmt_{i:04d}.py": formatting_file(rng) for i in range(n_files)}
