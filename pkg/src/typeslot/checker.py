"""Gradual type checking used as the oracle behind the search feedback.

Two backends share one report type:

* :class:`BuiltinChecker`, a small intra-file checker for a Python subset.
  Only functions whose return type is annotated have their bodies checked;
  anything it cannot infer is ``Any``, so unannotated code never errors.
* :class:`ExternalChecker`, which runs a command such as ``mypy {file}`` on an
  isolated copy of the file and counts diagnostic lines matching a regex.

``n_missing`` is always computed from extraction, never by the backend.
"""

from __future__ import annotations

import ast
import logging
import math
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .extract import FunctionRecord, ParseError, extract_functions, iter_functions, missing_slots, parse

log = logging.getLogger(__name__)

INFINITY = math.inf
DEFAULT_DIAGNOSTIC_REGEX = r"^(?P<file>[^:]+):(?P<line>\d+):.*\berror\b"


class CheckerError(Exception):
    """A candidate could not be checked; the search discards the state."""


class CheckerCrash(CheckerError):
    pass


class Timeout(CheckerError):
    pass


@dataclass(frozen=True)
class CheckerReport:
    n_missing: int
    n_errors: int
    error_lines: tuple[int, ...] = ()
    checker_id: str = "builtin"
    messages: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.n_errors != len(self.error_lines):
            raise ValueError("n_errors must equal the number of error lines")
        if self.n_missing < 0:
            raise ValueError("negative count")


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class SimpleType:
    """A checker type: a constructor name plus type parameters.

    Constructors are ``int float str bool bytes None Any Callable List Set
    Dict Tuple Optional`` and ``nominal`` (``name`` carries the class name).
    """

    constructor: str
    params: tuple[SimpleType, ...] = ()
    name: str | None = None

    def __str__(self) -> str:
        if self.constructor == "nominal":
            return self.name
        if self.params:
            return f"{self.constructor}[{', '.join(map(str, self.params))}]"
        return self.constructor


ANY = SimpleType("Any")
NONE = SimpleType("None")
INT = SimpleType("int")
FLOAT = SimpleType("float")
STR = SimpleType("str")
BOOL = SimpleType("bool")
BYTES = SimpleType("bytes")
CALLABLE = SimpleType("Callable")

_ATOMS = {"int": INT, "float": FLOAT, "str": STR, "bool": BOOL, "bytes": BYTES, "None": NONE, "Any": ANY}
_CONTAINERS = {
    "List": "List", "list": "List",
    "Set": "Set", "set": "Set", "FrozenSet": "Set", "frozenset": "Set",
    "Dict": "Dict", "dict": "Dict",
    "Tuple": "Tuple", "tuple": "Tuple",
}
_ARITY = {"List": 1, "Set": 1, "Dict": 2}
CONTAINERS = frozenset(_ARITY) | {"Tuple"}


def optional(inner: SimpleType) -> SimpleType:
    if inner.constructor in ("None", "Any"):
        return inner
    if inner.constructor == "Optional":
        return inner
    return SimpleType("Optional", (inner,))


def container(ctor: str, *params: SimpleType) -> SimpleType:
    if ctor in _ARITY and not params:
        params = (ANY,) * _ARITY[ctor]
    return SimpleType(ctor, tuple(params))


def parse_type(text: str | None) -> SimpleType:
    """Parse an annotation string; anything outside the subset becomes ``Any``."""
    if text is None:
        return ANY
    try:
        node = ast.parse(text, mode="eval").body
    except SyntaxError:
        return ANY
    return _from_node(node)


def _dotted(node: ast.AST) -> str | None:
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        base = _dotted(node.value)
        return f"{base}.{node.attr}" if base else None
    return None


def _from_node(node: ast.AST) -> SimpleType:
    if isinstance(node, ast.Constant):
        if node.value is None:
            return NONE
        if isinstance(node.value, str):
            return parse_type(node.value)
        return ANY
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.BitOr):
        return _union([_from_node(node.left), _from_node(node.right)])
    if isinstance(node, ast.Subscript):
        base = _dotted(node.value)
        base = base.split(".")[-1] if base else None
        elts = node.slice.elts if isinstance(node.slice, ast.Tuple) else [node.slice]
        if base == "Optional" and len(elts) == 1:
            return optional(_from_node(elts[0]))
        if base == "Union":
            return _union([_from_node(e) for e in elts])
        if base in ("Callable", "Type", "type"):
            return CALLABLE if base == "Callable" else ANY
        if base in _CONTAINERS:
            ctor = _CONTAINERS[base]
            if ctor == "Tuple":
                if len(elts) == 2 and isinstance(elts[1], ast.Constant) and elts[1].value is Ellipsis:
                    return ANY
                return SimpleType("Tuple", tuple(_from_node(e) for e in elts))
            if len(elts) != _ARITY[ctor]:
                return ANY
            return SimpleType(ctor, tuple(_from_node(e) for e in elts))
        return ANY
    name = _dotted(node)
    if name is None:
        return ANY
    short = name.split(".")[-1]
    if short in _ATOMS and (name == short or name.startswith("typing.")):
        return _ATOMS[short]
    if short in _CONTAINERS:
        return container(_CONTAINERS[short]) if _CONTAINERS[short] != "Tuple" else ANY
    if short == "Callable":
        return CALLABLE
    if short == "object":
        return SimpleType("nominal", name="object")
    if short[:1].isupper() or "." in name:
        return SimpleType("nominal", name=name)
    return ANY


def _union(members: list[SimpleType]) -> SimpleType:
    non_none = [m for m in members if m != NONE]
    if any(m == ANY for m in members):
        return ANY
    has_none = len(non_none) < len(members)
    distinct = []
    for m in non_none:
        inner = m.params[0] if m.constructor == "Optional" else m
        has_none = has_none or m.constructor == "Optional"
        if inner not in distinct:
            distinct.append(inner)
    if len(distinct) > 1:
        return ANY
    if not distinct:
        return NONE
    return optional(distinct[0]) if has_none else distinct[0]


def assignable(src: SimpleType, dst: SimpleType) -> bool:
    """Whether a value of type ``src`` may flow into a slot of type ``dst``."""
    if src == dst or src == ANY or dst == ANY:
        return True
    if dst.constructor == "nominal" and dst.name == "object":
        return True
    if dst.constructor == "Optional":
        if src == NONE:
            return True
        if src.constructor == "Optional":
            return assignable(src.params[0], dst.params[0])
        return assignable(src, dst.params[0])
    if src.constructor == "Optional":
        return False
    if dst == FLOAT and src in (INT, BOOL):
        return True
    if dst == INT and src == BOOL:
        return True
    if src.constructor in CONTAINERS and src.constructor == dst.constructor:
        if len(src.params) != len(dst.params):
            return False
        return all(
            p == ANY or q == ANY or (assignable(p, q) and assignable(q, p))
            for p, q in zip(src.params, dst.params)
        )
    return False


def join(types: Sequence[SimpleType]) -> SimpleType:
    """Common type of several expressions: identical types, else ``Any``."""
    if not types:
        return ANY
    first = types[0]
    return first if all(t == first for t in types) else ANY


# ---------------------------------------------------------------------------
# Built-in checker

_BUILTIN_RESULTS = {
    "len": INT, "int": INT, "float": FLOAT, "str": STR, "bool": BOOL, "bytes": BYTES,
    "repr": STR, "abs": ANY, "list": container("List"), "dict": container("Dict"),
    "set": container("Set"), "sorted": container("List"), "isinstance": BOOL,
    "hasattr": BOOL, "callable": BOOL, "ord": INT, "chr": STR, "hash": INT, "id": INT,
    "print": NONE,
}
_NUMERIC = {INT, FLOAT, BOOL}


@dataclass
class _Function:
    params: list[tuple[str, str, SimpleType]]
    returns: SimpleType | None
    annotated: bool


class _BodyChecker:
    def __init__(self, functions, classes, diagnostics):
        self.functions = functions
        self.classes = classes
        self.diagnostics = diagnostics
        self.env: dict[str, SimpleType] = {}

    def error(self, line: int, message: str) -> None:
        self.diagnostics.append((line, message))

    # statements -------------------------------------------------------
    def block(self, stmts, declared):
        for stmt in stmts:
            self.statement(stmt, declared)

    def statement(self, stmt, declared):
        if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            self.env[stmt.name] = ANY
            return
        if isinstance(stmt, ast.Return):
            value = NONE if stmt.value is None else self.expr(stmt.value)
            if declared == NONE and value != NONE:
                self.error(stmt.lineno, f"no return value expected, got {value}")
            elif declared is not None and not assignable(value, declared):
                self.error(stmt.lineno, f"incompatible return value: expected {declared}, got {value}")
            return
        if isinstance(stmt, ast.Assign):
            value = self.expr(stmt.value)
            for target in stmt.targets:
                self.bind(target, value)
            return
        if isinstance(stmt, ast.AnnAssign):
            if stmt.value is not None:
                self.expr(stmt.value)
            if isinstance(stmt.target, ast.Name):
                self.env[stmt.target.id] = ANY
            return
        if isinstance(stmt, ast.AugAssign):
            self.expr(stmt.value)
            if isinstance(stmt.target, ast.Name):
                self.env[stmt.target.id] = ANY
            return
        if isinstance(stmt, (ast.For, ast.AsyncFor)):
            iterable = self.expr(stmt.iter)
            self.bind(stmt.target, _element(iterable))
            self.block(stmt.body, declared)
            self.block(stmt.orelse, declared)
            return
        if isinstance(stmt, (ast.With, ast.AsyncWith)):
            for item in stmt.items:
                self.expr(item.context_expr)
                if item.optional_vars is not None:
                    self.bind(item.optional_vars, ANY)
            self.block(stmt.body, declared)
            return
        if isinstance(stmt, ast.Try) or type(stmt).__name__ == "TryStar":
            self.block(stmt.body, declared)
            for handler in stmt.handlers:
                if handler.name:
                    self.env[handler.name] = ANY
                self.block(handler.body, declared)
            self.block(stmt.orelse, declared)
            self.block(stmt.finalbody, declared)
            return
        if isinstance(stmt, (ast.If, ast.While)):
            self.expr(stmt.test)
            self.block(stmt.body, declared)
            self.block(stmt.orelse, declared)
            return
        if isinstance(stmt, (ast.Global, ast.Nonlocal)):
            for name in stmt.names:
                self.env[name] = ANY
            return
        if isinstance(stmt, ast.Expr):
            self.expr(stmt.value)
            return
        for child in ast.iter_child_nodes(stmt):
            if isinstance(child, ast.expr):
                self.expr(child)
            elif isinstance(child, ast.stmt):
                self.statement(child, declared)
        for body in ("body", "orelse"):
            for child in getattr(stmt, body, []) or []:
                if isinstance(child, ast.stmt):
                    self.statement(child, declared)
        for case in getattr(stmt, "cases", []) or []:
            self.block(case.body, declared)

    def bind(self, target, value):
        if isinstance(target, ast.Name):
            previous = self.env.get(target.id)
            self.env[target.id] = value if previous is None else join([previous, value])
        elif isinstance(target, (ast.Tuple, ast.List)):
            for elt in target.elts:
                self.bind(elt.value if isinstance(elt, ast.Starred) else elt, ANY)
        else:
            self.expr(target)

    # expressions ------------------------------------------------------
    def expr(self, node) -> SimpleType:
        if isinstance(node, ast.Constant):
            v = node.value
            if v is None:
                return NONE
            if isinstance(v, bool):
                return BOOL
            if isinstance(v, int):
                return INT
            if isinstance(v, float):
                return FLOAT
            if isinstance(v, str):
                return STR
            if isinstance(v, bytes):
                return BYTES
            return ANY
        if isinstance(node, ast.JoinedStr):
            for value in node.values:
                self.expr(value)
            return STR
        if isinstance(node, ast.FormattedValue):
            self.expr(node.value)
            return STR
        if isinstance(node, ast.Name):
            if node.id in self.env:
                return self.env[node.id]
            if node.id in self.functions:
                return CALLABLE
            return ANY
        if isinstance(node, ast.List):
            return container("List", self._elements(node.elts))
        if isinstance(node, ast.Set):
            return container("Set", self._elements(node.elts))
        if isinstance(node, ast.Tuple):
            return SimpleType("Tuple", tuple(self.expr(e) for e in node.elts))
        if isinstance(node, ast.Dict):
            keys = [k for k in node.keys if k is not None]
            if len(keys) != len(node.keys):
                for v in node.values:
                    self.expr(v)
                return container("Dict")
            return container("Dict", self._elements(keys), self._elements(node.values))
        if isinstance(node, ast.Call):
            return self.call(node)
        if isinstance(node, ast.BinOp):
            return self.binop(node)
        if isinstance(node, ast.Compare):
            self.expr(node.left)
            for c in node.comparators:
                self.expr(c)
            return BOOL
        if isinstance(node, ast.BoolOp):
            return join([self.expr(v) for v in node.values])
        if isinstance(node, ast.UnaryOp):
            operand = self.expr(node.operand)
            if isinstance(node.op, ast.Not):
                return BOOL
            if operand in _NUMERIC:
                return INT if operand == BOOL else operand
            return ANY
        if isinstance(node, ast.IfExp):
            self.expr(node.test)
            return join([self.expr(node.body), self.expr(node.orelse)])
        if isinstance(node, ast.Subscript):
            base = self.expr(node.value)
            self.expr(node.slice)
            if isinstance(node.slice, ast.Slice):
                return base if base.constructor in ("List", "str") else ANY
            if base.constructor == "List":
                return base.params[0]
            if base.constructor == "Dict":
                return base.params[1]
            if base == STR:
                return STR
            if base.constructor == "Tuple" and isinstance(node.slice, ast.Constant):
                i = node.slice.value
                if isinstance(i, int) and not isinstance(i, bool) and -len(base.params) <= i < len(base.params):
                    return base.params[i]
            return ANY
        if isinstance(node, ast.ListComp):
            return container("List")
        if isinstance(node, ast.SetComp):
            return container("Set")
        if isinstance(node, ast.DictComp):
            return container("Dict")
        if isinstance(node, ast.Lambda):
            return CALLABLE
        for child in ast.iter_child_nodes(node):
            if isinstance(child, ast.expr) and not isinstance(node, (ast.GeneratorExp,)):
                self.expr(child)
        return ANY

    def _elements(self, elts) -> SimpleType:
        types = [self.expr(e) for e in elts if not isinstance(e, ast.Starred)]
        if len(types) != len(elts):
            return ANY
        return join(types) if types else ANY

    def call(self, node: ast.Call) -> SimpleType:
        args = [self.expr(a) for a in node.args]
        kwargs = {kw.arg: self.expr(kw.value) for kw in node.keywords}
        func = node.func
        if isinstance(func, ast.Name) and func.id not in self.env:
            if func.id in self.functions:
                target = self.functions[func.id]
                self.check_arguments(node, target, args, kwargs)
                return target.returns if target.returns is not None else ANY
            if func.id in self.classes:
                return SimpleType("nominal", name=func.id)
            if func.id in _BUILTIN_RESULTS:
                return _BUILTIN_RESULTS[func.id]
            return ANY
        self.expr(func)
        return ANY

    def check_arguments(self, node, target: _Function, args, kwargs):
        if any(isinstance(a, ast.Starred) for a in node.args) or None in kwargs:
            return
        positional = [p for p in target.params if p[1] in ("posonly", "positional")]
        pairs = []
        for i, value in enumerate(args):
            if i < len(positional):
                pairs.append((positional[i], value))
        by_name = {p[0]: p for p in target.params if p[1] != "posonly"}
        for name, value in kwargs.items():
            if name in by_name:
                pairs.append((by_name[name], value))
        for (pname, _, ptype), value in pairs:
            if not assignable(value, ptype):
                self.error(node.lineno, f"argument {pname!r} expects {ptype}, got {value}")

    def binop(self, node: ast.BinOp) -> SimpleType:
        left, right = self.expr(node.left), self.expr(node.right)
        op = node.op
        if not isinstance(op, (ast.Add, ast.Sub, ast.Mult)):
            if isinstance(op, ast.Div) and left in _NUMERIC and right in _NUMERIC:
                return FLOAT
            return ANY
        if left == ANY or right == ANY:
            return ANY
        if left in _NUMERIC and right in _NUMERIC:
            return FLOAT if FLOAT in (left, right) else INT
        if isinstance(op, ast.Add):
            if left == right and left in (STR, BYTES):
                return left
            if left.constructor == "List" and right.constructor == "List":
                return left if left == right else container("List")
            if left.constructor == "Tuple" and right.constructor == "Tuple":
                return SimpleType("Tuple", left.params + right.params)
        if isinstance(op, ast.Mult):
            for seq, count in ((left, right), (right, left)):
                if count in (INT, BOOL) and (seq in (STR, BYTES) or seq.constructor in ("List", "Tuple")):
                    return seq
        self.error(node.lineno, f"unsupported operand types for {type(op).__name__}: {left} and {right}")
        return ANY


def _element(iterable: SimpleType) -> SimpleType:
    if iterable.constructor in ("List", "Set", "Dict"):
        return iterable.params[0]
    if iterable == STR:
        return STR
    if iterable.constructor == "Tuple":
        return join(list(iterable.params))
    return ANY


def _terminates(stmts) -> bool:
    """Whether control can never fall off the end of a statement list."""
    return any(_stmt_terminates(stmt) for stmt in stmts)


def _stmt_terminates(stmt) -> bool:
    if isinstance(stmt, (ast.Return, ast.Raise)):
        return True
    if isinstance(stmt, ast.If):
        return _terminates(stmt.body) and _terminates(stmt.orelse)
    if isinstance(stmt, (ast.With, ast.AsyncWith)):
        return _terminates(stmt.body)
    if isinstance(stmt, ast.Try):
        if _terminates(stmt.finalbody):
            return True
        body_done = _terminates(stmt.body) or _terminates(stmt.orelse)
        return body_done and all(_terminates(h.body) for h in stmt.handlers)
    if isinstance(stmt, ast.While):
        forever = isinstance(stmt.test, ast.Constant) and bool(stmt.test.value)
        return forever and not any(isinstance(n, ast.Break) for n in _loop_walk(stmt.body))
    if isinstance(stmt, ast.Assert):
        return isinstance(stmt.test, ast.Constant) and not stmt.test.value
    return False


def _loop_walk(stmts):
    stack = list(stmts)
    while stack:
        node = stack.pop()
        yield node
        if not isinstance(node, (ast.For, ast.AsyncFor, ast.While, ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            stack.extend(ast.iter_child_nodes(node))


def _is_trivial_body(stmts) -> bool:
    for i, stmt in enumerate(stmts):
        if isinstance(stmt, ast.Pass):
            continue
        if isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Constant) and (
            stmt.value.value is Ellipsis or (i == 0 and isinstance(stmt.value.value, str))
        ):
            continue
        if isinstance(stmt, ast.Raise):
            continue
        return False
    return True


def _is_generator(node) -> bool:
    for child in _own_nodes(node):
        if isinstance(child, (ast.Yield, ast.YieldFrom)):
            return True
    return False


def _own_nodes(node):
    stack = list(ast.iter_child_nodes(node))
    while stack:
        child = stack.pop()
        yield child
        if not isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef, ast.Lambda, ast.ClassDef)):
            stack.extend(ast.iter_child_nodes(child))


def _params(node) -> list[tuple[str, str, SimpleType]]:
    a = node.args
    out = [(p.arg, "posonly", parse_type(_ann(p))) for p in a.posonlyargs]
    out += [(p.arg, "positional", parse_type(_ann(p))) for p in a.args]
    out += [(p.arg, "kwonly", parse_type(_ann(p))) for p in a.kwonlyargs]
    return out


def _ann(param) -> str | None:
    return ast.unparse(param.annotation) if param.annotation is not None else None


def builtin_diagnostics(source: str, file_path: str = "<string>") -> list[tuple[int, str]]:
    """All built-in checker diagnostics of a module as (line, message), sorted."""
    tree = parse(source, file_path)
    functions: dict[str, _Function] = {}
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            returns = parse_type(ast.unparse(node.returns)) if node.returns is not None else None
            functions[node.name] = _Function(_params(node), returns, node.returns is not None)
    classes = {n.name for n in ast.walk(tree) if isinstance(n, ast.ClassDef)}
    diagnostics: list[tuple[int, str]] = []

    module = _BodyChecker(functions, classes, diagnostics)
    for stmt in tree.body:
        if not isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            module.statement(stmt, None)
    module_env = {name: t for name, t in module.env.items()}

    for node, _, is_method, _ in iter_functions(tree):
        if node.returns is None:
            continue
        declared = parse_type(ast.unparse(node.returns))
        checker = _BodyChecker(functions, classes, diagnostics)
        checker.env.update({k: ANY for k in module_env})
        for name, _, ptype in _params(node):
            checker.env[name] = ptype
        for extra in (node.args.vararg, node.args.kwarg):
            if extra is not None:
                checker.env[extra.arg] = ANY
        generator = _is_generator(node)
        checker.block(node.body, None if generator else declared)
        if generator or _is_trivial_body(node.body):
            continue
        if not assignable(NONE, declared) and not _terminates(node.body):
            diagnostics.append((node.lineno, f"missing return statement: declared {declared}"))
    return sorted(diagnostics)


class BuiltinChecker:
    checker_id = "builtin"

    def check(self, source: str, extraction: list[FunctionRecord] | None = None, file_path: str = "<string>") -> CheckerReport:
        """Check one file. Raises :class:`ParseError` if the source does not parse."""
        if extraction is None:
            extraction = extract_functions(source, file_path)
        diagnostics = builtin_diagnostics(source, file_path)
        return CheckerReport(
            n_missing=len(missing_slots(extraction)),
            n_errors=len(diagnostics),
            error_lines=tuple(line for line, _ in diagnostics),
            checker_id=self.checker_id,
            messages=tuple(f"{line}: {msg}" for line, msg in diagnostics),
        )


def check(source: str, extraction: list[FunctionRecord] | None = None) -> CheckerReport:
    return BuiltinChecker().check(source, extraction)


# ---------------------------------------------------------------------------
# External checker

_process_slots = threading.BoundedSemaphore(int(os.environ.get("TYPESLOT_MAX_CHECKERS", "4")))


def set_max_concurrent(n: int) -> None:
    global _process_slots
    _process_slots = threading.BoundedSemaphore(n)


def run_external(
    command_template: str,
    source_file: str | Path,
    diagnostic_pattern: str = DEFAULT_DIAGNOSTIC_REGEX,
    timeout: float = 60.0,
    extraction: list[FunctionRecord] | None = None,
) -> CheckerReport:
    """Run an external checker on a private copy of ``source_file``.

    Exit codes 0 and 1 are normal (mypy and pyre use 1 for "errors found");
    any other exit code with no matching diagnostics is a crash.
    """
    if "{file}" not in command_template:
        raise ValueError("command template needs a {file} placeholder")
    source_file = Path(source_file)
    source = source_file.read_text(encoding="utf-8")
    if extraction is None:
        extraction = extract_functions(source, str(source_file))
    pattern = re.compile(diagnostic_pattern)
    with tempfile.TemporaryDirectory(prefix="typeslot-") as tmp:
        copy = Path(tmp) / source_file.name
        shutil.copyfile(source_file, copy)
        argv = [part.replace("{file}", str(copy)) for part in shlex.split(command_template)]
        with _process_slots:
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout, cwd=tmp)
            except subprocess.TimeoutExpired:
                raise Timeout(f"{argv[0]} exceeded {timeout}s") from None
            except OSError as exc:
                raise CheckerCrash(str(exc)) from None
    lines, messages = [], []
    for text in (proc.stdout + "\n" + proc.stderr).splitlines():
        match = pattern.search(text)
        if not match:
            continue
        groups = match.groupdict()
        if groups.get("file") and Path(groups["file"]).name != source_file.name:
            continue
        lines.append(int(match.group("line")))
        messages.append(text)
    if proc.returncode not in (0, 1) and not lines:
        raise CheckerCrash(f"exit code {proc.returncode}: {proc.stderr.strip()[:200]}")
    return CheckerReport(
        n_missing=len(missing_slots(extraction)),
        n_errors=len(lines),
        error_lines=tuple(lines),
        checker_id=f"external:{shlex.split(command_template)[0]}",
        messages=tuple(messages),
    )


class ExternalChecker:
    def __init__(self, command_template: str, diagnostic_pattern: str = DEFAULT_DIAGNOSTIC_REGEX, timeout: float = 60.0, file_name: str = "module.py"):
        if "{file}" not in command_template:
            raise ValueError("command template needs a {file} placeholder")
        self.command_template = command_template
        self.diagnostic_pattern = diagnostic_pattern
        self.timeout = timeout
        self.file_name = file_name
        self.checker_id = f"external:{shlex.split(command_template)[0]}"

    def check(self, source: str, extraction: list[FunctionRecord] | None = None, file_path: str | None = None) -> CheckerReport:
        if extraction is None:
            extraction = extract_functions(source, file_path or self.file_name)
        name = Path(file_path).name if file_path else self.file_name
        with tempfile.TemporaryDirectory(prefix="typeslot-src-") as tmp:
            path = Path(tmp) / name
            path.write_text(source, encoding="utf-8")
            return run_external(self.command_template, path, self.diagnostic_pattern, self.timeout, extraction)


def make_checker(kind: str = "builtin", command: str | None = None, regex: str = DEFAULT_DIAGNOSTIC_REGEX, timeout: float = 60.0):
    if kind == "builtin":
        return BuiltinChecker()
    if kind == "external":
        if not command:
            raise ValueError("external checker needs a command template")
        return ExternalChecker(command, regex, timeout)
    raise ValueError(f"unknown checker {kind!r}")


__all__ = [
    "ANY", "INFINITY", "BuiltinChecker", "CheckerCrash", "CheckerError", "CheckerReport",
    "ExternalChecker", "ParseError", "SimpleType", "Timeout", "assignable", "check",
    "make_checker", "parse_type", "run_external",
]
