"""Insert and remove parameter/return annotations with surgical text edits.

Only the bytes of the annotations themselves change; whitespace, comments and
line structure elsewhere are preserved, so line numbers stay valid.
"""

from __future__ import annotations

import ast
import difflib
from pathlib import Path
from typing import Mapping

from . import _source
from .extract import RETURN, SlotId, extract_functions, iter_functions, parse


class RewriteError(Exception):
    pass


class SlotNotFound(RewriteError):
    pass


class AnnotationExists(RewriteError):
    pass


class WouldNotParse(RewriteError):
    pass


def _locate(source: str):
    """Map ``(qualname, name)`` to the function node and its signature."""
    tree = parse(source)
    tokens = _source.generate_tokens(source)
    index = _source.SourceIndex(source)
    positions = _source.token_index(tokens)
    sites = {}
    for node, qualname, _, _ in iter_functions(tree):
        start = positions[_source.def_token_start(index, node)]
        sites[qualname] = (node, _source.find_signature(tokens, start))
    return sites, index


def _params(node):
    a = node.args
    params = list(a.posonlyargs) + list(a.args)
    if a.vararg:
        params.append(a.vararg)
    params += list(a.kwonlyargs)
    if a.kwarg:
        params.append(a.kwarg)
    return {p.arg: p for p in params}


def _apply_edits(source: str, edits: list[tuple[int, int, str]]) -> str:
    out, last = [], 0
    for start, end, text in sorted(edits):
        out.append(source[last:start])
        out.append(text)
        last = end
    out.append(source[last:])
    return "".join(out)


def apply_assignment(source: str, assignment: Mapping[SlotId | tuple[str, str], str]) -> str:
    """Insert ``: T`` after parameter names and ``-> T`` after the parameter list.

    Keys are :class:`SlotId` (the file component is ignored) or
    ``(function qualname, name)`` pairs.
    """
    if not assignment:
        return source
    sites, index = _locate(source)
    edits = []
    for key, type_name in assignment.items():
        function, name = (key.function, key.name) if isinstance(key, SlotId) else key
        if function not in sites:
            raise SlotNotFound(f"no function {function!r}")
        node, sig = sites[function]
        if name == RETURN:
            if node.returns is not None:
                raise AnnotationExists(f"{function} already has a return annotation")
            pos = index.offset(*sig.close_paren_end)
            edits.append((pos, pos, f" -> {type_name}"))
            continue
        params = _params(node)
        if name not in params:
            raise SlotNotFound(f"{function} has no parameter {name!r}")
        param = params[name]
        if param.annotation is not None:
            raise AnnotationExists(f"{function}.{name} is already annotated")
        pos = index.ast_offset(param.lineno, param.col_offset) + len(param.arg)
        edits.append((pos, pos, f": {type_name}"))
    result = _apply_edits(source, edits)
    try:
        ast.parse(result)
    except SyntaxError as exc:
        raise WouldNotParse(str(exc)) from None
    return result


def strip_annotations(source: str, file_path: str = "<string>") -> tuple[str, dict[SlotId, str]]:
    """Remove annotations from every non-trivial slot.

    Returns the stripped text and the removed annotations (canonical form) as
    ground truth. The span from the end of the parameter name to the end of
    its annotation is deleted, so ``x: int = 3`` becomes ``x = 3``.
    """
    records = extract_functions(source, file_path)
    trivial = {sid for rec in records for sid, slot in rec.slots() if slot.is_trivial}
    sites, index = _locate(source)
    edits, truth = [], {}
    for qualname, (node, sig) in sites.items():
        for name, param in _params(node).items():
            sid = SlotId(file_path, qualname, name)
            if param.annotation is None or sid in trivial:
                continue
            start = index.ast_offset(param.lineno, param.col_offset) + len(param.arg)
            end = index.ast_offset(param.annotation.end_lineno, param.annotation.end_col_offset)
            edits.append((start, end, ""))
            truth[sid] = _source.canonical_annotation(param.annotation)
        sid = SlotId(file_path, qualname, RETURN)
        if node.returns is not None and sid not in trivial:
            start = index.offset(*sig.close_paren_end)
            end = index.ast_offset(node.returns.end_lineno, node.returns.end_col_offset)
            edits.append((start, end, ""))
            truth[sid] = _source.canonical_annotation(node.returns)
    return _apply_edits(source, edits), truth


def unified_diff(before: str, after: str, path: str = "file.py") -> str:
    return "".join(
        difflib.unified_diff(
            before.splitlines(keepends=True),
            after.splitlines(keepends=True),
            fromfile=f"a/{path}",
            tofile=f"b/{path}",
        )
    )


def write_annotated(path: str | Path, annotated: str, mode: str = "write") -> str:
    """``mode="write"`` rewrites the file in place; ``"diff"`` only returns the diff."""
    path = Path(path)
    original = path.read_text(encoding="utf-8")
    diff = unified_diff(original, annotated, str(path))
    if mode == "write" and annotated != original:
        path.write_text(annotated, encoding="utf-8")
    return diff
