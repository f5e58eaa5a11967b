"""Static extraction of type slots and their context from Python source.

Every function or method definition (nested ones included) becomes a
:class:`FunctionRecord` holding one :class:`ArgumentSlot` per parameter and a
:class:`ReturnSlot`, together with the natural-language and code context a
type predictor learns from.
"""

from __future__ import annotations

import ast
import json
import logging
import re
import tokenize
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple

from . import _source

log = logging.getLogger(__name__)

RETURN = "return"
DEFAULT_RADIUS = 3
DEFAULT_MAX_WINDOWS = 3

FORCED_RETURNS = {
    "__str__": "str",
    "__repr__": "str",
    "__init__": "None",
    "__del__": "None",
    "__len__": "int",
    "__hash__": "int",
    "__bool__": "bool",
    "__eq__": "bool",
    "__ne__": "bool",
    "__lt__": "bool",
    "__le__": "bool",
    "__gt__": "bool",
    "__ge__": "bool",
    "__contains__": "bool",
}


class ParseError(Exception):
    def __init__(self, file: str, line: int | None, message: str = ""):
        super().__init__(f"{file}:{line}: {message}")
        self.file = file
        self.line = line


class SlotId(NamedTuple):
    """A single annotatable location: an argument name, or ``RETURN``."""

    file: str
    function: str
    name: str

    @property
    def is_return(self) -> bool:
        return self.name == RETURN

    def __str__(self) -> str:
        return f"{self.file}::{self.function}::{self.name}"


@dataclass
class ArgumentSlot:
    name: str
    declared_type: str | None
    usage_windows: list[list[str]]
    is_trivial: bool
    decl_line: int
    kind: str = "positional"


@dataclass
class ReturnSlot:
    declared_type: str | None
    return_statements: list[list[str]]
    is_trivial: bool
    decl_line: int


@dataclass
class FunctionRecord:
    file_path: str
    function_name: str
    qualname: str
    line_span: tuple[int, int]
    docstring: str | None
    arguments: list[ArgumentSlot]
    return_slot: ReturnSlot
    available_types: frozenset[str] = field(default_factory=frozenset)
    is_method: bool = False
    is_nested: bool = False

    @property
    def argument_names(self) -> list[str]:
        return [a.name for a in self.arguments]

    def slot_id(self, name: str = RETURN) -> SlotId:
        return SlotId(self.file_path, self.qualname, name)

    def slots(self) -> Iterable[tuple[SlotId, ArgumentSlot | ReturnSlot]]:
        for arg in self.arguments:
            yield self.slot_id(arg.name), arg
        yield self.slot_id(RETURN), self.return_slot

    def slot(self, name: str) -> ArgumentSlot | ReturnSlot:
        if name == RETURN:
            return self.return_slot
        for arg in self.arguments:
            if arg.name == name:
                return arg
        raise KeyError(name)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["line_span"] = list(self.line_span)
        data["available_types"] = sorted(self.available_types)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> FunctionRecord:
        data = dict(data)
        data["line_span"] = tuple(data["line_span"])
        data["available_types"] = frozenset(data["available_types"])
        data["arguments"] = [ArgumentSlot(**a) for a in data["arguments"]]
        data["return_slot"] = ReturnSlot(**data["return_slot"])
        return cls(**data)


_WORD_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


def _lemma(word: str) -> str:
    if len(word) > 4 and word.endswith("ies"):
        return word[:-3] + "y"
    if len(word) > 4 and word.endswith("es") and word[-3] in "sxz":
        return word[:-2]
    if len(word) > 4 and word.endswith(("ches", "shes")):
        return word[:-2]
    if len(word) > 3 and word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def normalize_identifier(name: str) -> list[str]:
    """Split an identifier into lowercased, lemmatized words.

    >>> normalize_identifier("HTMLParserBase")
    ['html', 'parser', 'base']
    """
    words = [_lemma(w.lower()) for w in _WORD_RE.findall(name)]
    return words or [name.lower()]


def extract_usage_windows(
    function_body_tokens: list[str],
    arg_name: str,
    radius: int = DEFAULT_RADIUS,
    max_windows: int = DEFAULT_MAX_WINDOWS,
) -> list[list[str]]:
    if radius < 1:
        raise ValueError("radius must be >= 1")
    windows = []
    for i, tok in enumerate(function_body_tokens):
        if tok != arg_name or (i > 0 and function_body_tokens[i - 1] == "."):
            continue
        windows.append(function_body_tokens[max(0, i - radius) : i + radius + 1])
        if len(windows) == max_windows:
            break
    return windows


def mark_trivial_slots(record: FunctionRecord) -> FunctionRecord:
    arguments = []
    for i, arg in enumerate(record.arguments):
        trivial = arg.kind in ("vararg", "kwarg") or (
            record.is_method and i == 0 and arg.name in ("self", "cls")
        )
        arguments.append(replace(arg, is_trivial=trivial))
    ret = replace(record.return_slot, is_trivial=record.function_name in FORCED_RETURNS)
    return replace(record, arguments=arguments, return_slot=ret)


def available_types(tree: ast.AST) -> frozenset[str]:
    names = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                names.add(alias.asname or alias.name.split(".")[0])
                names.add(alias.name)
        elif isinstance(node, ast.ImportFrom):
            for alias in node.names:
                if alias.name != "*":
                    names.add(alias.asname or alias.name)
        elif isinstance(node, ast.ClassDef):
            names.add(node.name)
    return frozenset(names)


_FUNCTION_NODES = (ast.FunctionDef, ast.AsyncFunctionDef)
_SCOPE_NODES = (ast.FunctionDef, ast.AsyncFunctionDef, ast.Lambda, ast.ClassDef)


def own_returns(node: ast.AST) -> list[ast.Return]:
    """Return statements of a function, excluding those of nested scopes."""
    found = []
    stack = list(ast.iter_child_nodes(node))
    while stack:
        child = stack.pop()
        if isinstance(child, ast.Return):
            found.append(child)
        if not isinstance(child, _SCOPE_NODES):
            stack.extend(ast.iter_child_nodes(child))
    return sorted(found, key=lambda n: (n.lineno, n.col_offset))


def iter_functions(tree: ast.Module):
    """Yield (node, qualname, is_method, is_nested) in source order.

    Repeated qualnames (redefinitions, property setters) get ``#2``, ``#3``
    suffixes in definition order.
    """
    seen: dict[str, int] = {}
    out = []

    def visit(body, prefix, in_class, in_function):
        for node in body:
            if isinstance(node, _FUNCTION_NODES):
                qual = f"{prefix}{node.name}"
                out.append((node, qual, in_class, in_function))
                visit(node.body, qual + ".", False, True)
            elif isinstance(node, ast.ClassDef):
                visit(node.body, f"{prefix}{node.name}.", True, in_function)
            else:
                for child_body in _child_bodies(node):
                    visit(child_body, prefix, in_class, in_function)

    visit(tree.body, "", False, False)
    out.sort(key=lambda item: (item[0].lineno, item[0].col_offset))
    for node, qual, is_method, is_nested in out:
        seen[qual] = seen.get(qual, 0) + 1
        if seen[qual] > 1:
            qual = f"{qual}#{seen[qual]}"
        yield node, qual, is_method, is_nested


def _child_bodies(node: ast.AST):
    for name in ("body", "orelse", "finalbody"):
        value = getattr(node, name, None)
        if isinstance(value, list) and value and isinstance(value[0], ast.stmt):
            yield value
    for handler in getattr(node, "handlers", []) or []:
        yield handler.body
    for case in getattr(node, "cases", []) or []:
        yield case.body


def parse(source: str, file_path: str = "<string>") -> ast.Module:
    try:
        return ast.parse(source, filename=file_path)
    except SyntaxError as exc:
        raise ParseError(str(file_path), exc.lineno, exc.msg) from None
    except ValueError as exc:
        raise ParseError(str(file_path), None, str(exc)) from None


def extract_functions(
    source: str,
    file_path: str | Path = "<string>",
    radius: int = DEFAULT_RADIUS,
    max_windows: int = DEFAULT_MAX_WINDOWS,
) -> list[FunctionRecord]:
    file_path = str(file_path)
    tree = parse(source, file_path)
    try:
        tokens = _source.generate_tokens(source)
    except (tokenize.TokenError, IndentationError) as exc:
        raise ParseError(file_path, None, str(exc)) from None
    index = _source.SourceIndex(source)
    positions = _source.token_index(tokens)
    avail = available_types(tree)

    records = []
    for node, qualname, is_method, is_nested in iter_functions(tree):
        start = positions[_source.def_token_start(index, node)]
        sig = _source.find_signature(tokens, start)
        end = (node.end_lineno, index.char_col(node.end_lineno, node.end_col_offset))
        body = []
        for tok in tokens[start:]:
            if tok.start >= end:
                break
            if tok.start > sig.colon:
                body.append(tok)
        body_text = _source.render_all(body)

        arguments = []
        a = node.args
        params = [(p, "posonly") for p in a.posonlyargs] + [(p, "positional") for p in a.args]
        if a.vararg:
            params.append((a.vararg, "vararg"))
        params += [(p, "kwonly") for p in a.kwonlyargs]
        if a.kwarg:
            params.append((a.kwarg, "kwarg"))
        for param, kind in params:
            arguments.append(
                ArgumentSlot(
                    name=param.arg,
                    declared_type=_source.canonical_annotation(param.annotation),
                    usage_windows=extract_usage_windows(body_text, param.arg, radius, max_windows),
                    is_trivial=False,
                    decl_line=param.lineno,
                    kind=kind,
                )
            )

        statements = []
        for ret in own_returns(node):
            lo = (ret.lineno, index.char_col(ret.lineno, ret.col_offset))
            hi = (ret.end_lineno, index.char_col(ret.end_lineno, ret.end_col_offset))
            statements.append(_source.render_all(t for t in body if lo <= t.start < hi and t.type != tokenize.DEDENT))
        ret_line = node.returns.lineno if node.returns is not None else sig.close_paren_end[0]
        record = FunctionRecord(
            file_path=file_path,
            function_name=node.name,
            qualname=qualname,
            line_span=(node.lineno, node.end_lineno),
            docstring=ast.get_docstring(node),
            arguments=arguments,
            return_slot=ReturnSlot(
                declared_type=_source.canonical_annotation(node.returns),
                return_statements=statements,
                is_trivial=False,
                decl_line=ret_line,
            ),
            available_types=avail,
            is_method=is_method,
            is_nested=is_nested,
        )
        records.append(mark_trivial_slots(record))
    return records


def missing_slots(records: Iterable[FunctionRecord]) -> list[tuple[SlotId, ArgumentSlot | ReturnSlot]]:
    """Non-trivial slots without a declared type, in source order."""
    return [
        (sid, slot)
        for rec in records
        for sid, slot in rec.slots()
        if not slot.is_trivial and slot.declared_type is None
    ]


def annotated_slots(records: Iterable[FunctionRecord]) -> dict[SlotId, str]:
    return {
        sid: slot.declared_type
        for rec in records
        for sid, slot in rec.slots()
        if not slot.is_trivial and slot.declared_type is not None
    }


def _extract_file(args):
    path, root, radius, max_windows = args
    rel = str(Path(path).relative_to(root)) if root else str(path)
    try:
        source = Path(path).read_text(encoding="utf-8")
        return rel, extract_functions(source, rel, radius, max_windows), None
    except ParseError as exc:
        return rel, [], exc
    except (UnicodeDecodeError, OSError) as exc:
        return rel, [], ParseError(rel, None, str(exc))


def extract_corpus(
    root: str | Path,
    radius: int = DEFAULT_RADIUS,
    max_windows: int = DEFAULT_MAX_WINDOWS,
    workers: int | None = None,
) -> tuple[list[FunctionRecord], list[ParseError]]:
    """Extract every ``.py`` file under ``root``; unparsable files are reported, not fatal."""
    root = Path(root)
    paths = sorted(root.rglob("*.py"))
    jobs = [(p, root, radius, max_windows) for p in paths]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract_file, jobs))
    else:
        results = [_extract_file(job) for job in jobs]
    records, failures = [], []
    for rel, recs, err in sorted(results, key=lambda r: r[0]):
        if err is not None:
            log.warning("skipping %s: %s", rel, err)
            failures.append(err)
        records.extend(recs)
    return records, failures


def write_dataset(records: Iterable[FunctionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_dataset(path: str | Path) -> list[FunctionRecord]:
    with open(path, encoding="utf-8") as fh:
        return [FunctionRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
