"""Low-level helpers shared by extraction and rewriting: tokens and positions."""

from __future__ import annotations

import ast
import io
import tokenize
from dataclasses import dataclass

NEWLINE = "\n"
INDENT = "<ind>"
DEDENT = "<ded>"

_SKIPPED = {tokenize.NL, tokenize.COMMENT, tokenize.ENDMARKER, tokenize.ENCODING}


def generate_tokens(source: str) -> list[tokenize.TokenInfo]:
    return list(tokenize.generate_tokens(io.StringIO(source).readline))


def render(tok: tokenize.TokenInfo) -> str | None:
    """Text used for a token in token sequences, or None if the token is dropped."""
    if tok.type in _SKIPPED:
        return None
    if tok.type == tokenize.NEWLINE:
        return NEWLINE
    if tok.type == tokenize.INDENT:
        return INDENT
    if tok.type == tokenize.DEDENT:
        return DEDENT
    return tok.string


def render_all(tokens) -> list[str]:
    return [text for text in map(render, tokens) if text is not None]


class SourceIndex:
    """Maps (row, col) positions to absolute character offsets.

    ``ast`` reports columns as UTF-8 byte offsets while ``tokenize`` uses
    character offsets; both are converted here.
    """

    def __init__(self, source: str):
        self.source = source
        self.lines = source.splitlines(keepends=True)
        self.starts = []
        pos = 0
        for line in self.lines:
            self.starts.append(pos)
            pos += len(line)
        self.starts.append(pos)

    def char_col(self, row: int, byte_col: int) -> int:
        if row - 1 >= len(self.lines):
            return byte_col
        line = self.lines[row - 1]
        return len(line.encode("utf-8")[:byte_col].decode("utf-8", errors="ignore"))

    def offset(self, row: int, col: int) -> int:
        """Absolute offset of a tokenize-style (character column) position."""
        if row - 1 >= len(self.starts):
            return len(self.source)
        return self.starts[row - 1] + col

    def ast_offset(self, row: int, byte_col: int) -> int:
        return self.offset(row, self.char_col(row, byte_col))

    def node_span(self, node: ast.AST) -> tuple[int, int]:
        start = self.ast_offset(node.lineno, node.col_offset)
        end = self.ast_offset(node.end_lineno, node.end_col_offset)
        return start, end


@dataclass(frozen=True)
class Signature:
    """Token positions of a ``def`` header, as (row, char col) pairs."""

    open_paren: tuple[int, int]
    close_paren_end: tuple[int, int]
    colon: tuple[int, int]


def find_signature(tokens: list[tokenize.TokenInfo], start_index: int) -> Signature:
    """Locate the parameter list and the header colon of the def starting at ``start_index``."""
    i = start_index
    while tokens[i].string != "(":
        i += 1
    open_paren = tokens[i].start
    depth = 0
    while True:
        s = tokens[i].string
        if tokens[i].type == tokenize.OP:
            if s in "([{":
                depth += 1
            elif s in ")]}":
                depth -= 1
                if depth == 0:
                    break
        i += 1
    close_end = tokens[i].end
    i += 1
    depth = 0
    while True:
        tok = tokens[i]
        if tok.type == tokenize.OP:
            if tok.string in "([{":
                depth += 1
            elif tok.string in ")]}":
                depth -= 1
            elif tok.string == ":" and depth == 0:
                break
        i += 1
    return Signature(open_paren, close_end, tokens[i].start)


def token_index(tokens: list[tokenize.TokenInfo]) -> dict[tuple[int, int], int]:
    return {tok.start: i for i, tok in enumerate(tokens) if tok.type not in _SKIPPED}


def def_token_start(index: SourceIndex, node: ast.AST) -> tuple[int, int]:
    """Position of the ``def``/``async`` keyword of a function node."""
    return node.lineno, index.char_col(node.lineno, node.col_offset)


def canonical_annotation(node: ast.AST | None) -> str | None:
    """Annotation text with all whitespace removed; string forward references are unquoted."""
    if node is None:
        return None
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        text = node.value
    else:
        text = ast.unparse(node)
    return "".join(text.split())
