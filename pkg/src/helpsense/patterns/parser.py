"""Parser for pattern programs (`.lel` files).

Statements:
    atomic sym, sym2;
    class NAME := { sym, sym2 };
    define NAME [scaled] [internal] := EXPR;

Expressions combine the primitives rate/oneof/all/seq/tightseq/dwell with
infix `and`/`or` and prefix `not`; `--` starts a line comment. Spans are
written `10s`, `1500ms`, or `4cmds`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import DuplicateName, PatternSyntaxError
from ..events import EventClass
from .syntax import (
    All,
    And,
    AtomicDecl,
    Dwell,
    DwellElement,
    FilterDefinition,
    Not,
    Oneof,
    Or,
    PatternExpr,
    Rate,
    Seq,
    Span,
    TightSeq,
)

KEYWORDS = frozenset(
    "atomic class define scaled internal and or not rate oneof all seq tightseq dwell".split()
)

_TOKEN_RE = re.compile(
    r"""
      (?P<comment>--[^\n]*)
    | (?P<ws>[ \t\r]+)
    | (?P<nl>\n)
    | (?P<span>\d+(?:\.\d+)?(?:ms|s|cmds)\b)
    | (?P<int>\d+\b)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>:=|>=|<=|=|\{|\}|\(|\)|,|;)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "span" | "int" | "name" | "keyword" | "op" | "eof"
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise PatternSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(text)
        else:
            if kind == "name" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, line, col))
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


def _parse_span_text(text: str, line: int, col: int) -> Span:
    if text.endswith("cmds"):
        number = text[:-4]
        if "." in number:
            raise PatternSyntaxError("command spans must be integral", line, col)
        return Span("commands", float(int(number)))
    if text.endswith("ms"):
        return Span("time", float(text[:-2]))
    return Span("time", float(text[:-1]) * 1000.0)


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise PatternSyntaxError(message, tok.line, tok.column)

    def expect_op(self, op: str) -> Token:
        tok = self.next()
        if tok.kind != "op" or tok.text != op:
            self.fail(f"expected {op!r}, got {tok.text!r}", tok)
        return tok

    def expect_keyword(self, word: str) -> Token:
        tok = self.next()
        if tok.kind != "keyword" or tok.text != word:
            self.fail(f"expected {word!r}, got {tok.text!r}", tok)
        return tok

    def expect_name(self) -> Token:
        tok = self.next()
        if tok.kind != "name":
            self.fail(f"expected a name, got {tok.text!r}", tok)
        return tok

    def at_op(self, op: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text == op

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.text == word

    # -- statements ---------------------------------------------------------

    def program(self) -> list:
        statements: list = []
        seen: set[str] = set()
        while self.peek().kind != "eof":
            tok = self.peek()
            if self.at_keyword("atomic"):
                statements.append(self.atomic_decl())
            elif self.at_keyword("class"):
                statements.append(self.class_def(seen))
            elif self.at_keyword("define"):
                statements.append(self.filter_def(seen))
            else:
                self.fail(f"expected 'atomic', 'class' or 'define', got {tok.text!r}")
        return statements

    def atomic_decl(self) -> AtomicDecl:
        self.expect_keyword("atomic")
        names = [self.expect_name().text]
        while self.at_op(","):
            self.next()
            names.append(self.expect_name().text)
        self.expect_op(";")
        return AtomicDecl(tuple(names))

    def class_def(self, seen: set[str]) -> EventClass:
        self.expect_keyword("class")
        name_tok = self.expect_name()
        if name_tok.text in seen:
            raise DuplicateName(f"name {name_tok.text!r} defined twice")
        self.expect_op(":=")
        self.expect_op("{")
        members = [self.expect_name().text]
        while self.at_op(","):
            self.next()
            members.append(self.expect_name().text)
        self.expect_op("}")
        self.expect_op(";")
        seen.add(name_tok.text)
        return EventClass(name=name_tok.text, members=frozenset(members))

    def filter_def(self, seen: set[str]) -> FilterDefinition:
        self.expect_keyword("define")
        name_tok = self.expect_name()
        if name_tok.text in seen:
            raise DuplicateName(f"name {name_tok.text!r} defined twice")
        scaled = internal = False
        while self.peek().kind == "keyword" and self.peek().text in ("scaled", "internal"):
            flag = self.next().text
            scaled = scaled or flag == "scaled"
            internal = internal or flag == "internal"
        self.expect_op(":=")
        expr = self.expression()
        self.expect_op(";")
        seen.add(name_tok.text)
        return FilterDefinition(name=name_tok.text, expr=expr, scaled=scaled, internal=internal)

    # -- expressions --------------------------------------------------------

    def expression(self) -> PatternExpr:
        left = self.and_expr()
        while self.at_keyword("or"):
            self.next()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> PatternExpr:
        left = self.unary()
        while self.at_keyword("and"):
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> PatternExpr:
        if self.at_keyword("not"):
            self.next()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> PatternExpr:
        tok = self.peek()
        if self.at_op("("):
            self.next()
            expr = self.expression()
            self.expect_op(")")
            return expr
        if tok.kind != "keyword":
            self.fail(f"expected a primitive, got {tok.text!r}")
        if tok.text == "rate":
            return self.rate()
        if tok.text == "oneof":
            return Oneof(*self.target_set_and_span("oneof"))
        if tok.text == "all":
            return All(*self.target_set_and_span("all"))
        if tok.text == "seq":
            return Seq(*self.elements_and_span("seq"))
        if tok.text == "tightseq":
            return TightSeq(*self.elements_and_span("tightseq"))
        if tok.text == "dwell":
            return Dwell(self.dwell_span())
        self.fail(f"expected a primitive, got {tok.text!r}")

    def span(self) -> Span:
        tok = self.next()
        if tok.kind != "span":
            self.fail(f"expected a span like 10s, 500ms or 3cmds, got {tok.text!r}", tok)
        return _parse_span_text(tok.text, tok.line, tok.column)

    def dwell_span(self) -> Span:
        self.expect_keyword("dwell")
        open_tok = self.expect_op("(")
        span = self.span()
        if span.mode != "time":
            self.fail("dwell spans must be time, not commands", open_tok)
        self.expect_op(")")
        return span

    def rate(self) -> Rate:
        self.expect_keyword("rate")
        self.expect_op("(")
        target = self.expect_name().text
        self.expect_op(",")
        span = self.span()
        self.expect_op(")")
        cmp_tok = self.next()
        if cmp_tok.kind != "op" or cmp_tok.text not in (">=", "=", "<="):
            self.fail(f"expected a comparator (>=, =, <=), got {cmp_tok.text!r}", cmp_tok)
        n_tok = self.next()
        if n_tok.kind != "int":
            self.fail(f"expected an integer threshold, got {n_tok.text!r}", n_tok)
        threshold = int(n_tok.text)
        if threshold < 1:
            self.fail("rate threshold must be >= 1", n_tok)
        return Rate(target=target, span=span, comparator=cmp_tok.text, threshold=threshold)

    def target_set_and_span(self, which: str) -> tuple[tuple[str, ...], Span]:
        self.expect_keyword(which)
        self.expect_op("(")
        self.expect_op("{")
        targets = [self.expect_name().text]
        while self.at_op(","):
            self.next()
            targets.append(self.expect_name().text)
        self.expect_op("}")
        self.expect_op(",")
        span = self.span()
        self.expect_op(")")
        return tuple(targets), span

    def elements_and_span(self, which: str):
        self.expect_keyword(which)
        open_tok = self.expect_op("(")
        elements: list = []
        span: Span | None = None
        while True:
            tok = self.peek()
            if tok.kind == "span":
                span = self.span()
                self.expect_op(")")
                break
            if self.at_keyword("dwell"):
                elements.append(DwellElement(self.dwell_span()))
            else:
                elements.append(self.expect_name().text)
            self.expect_op(",")
        if span is None or not elements:
            self.fail(f"{which} needs at least one element and a final span", open_tok)
        if isinstance(elements[0], DwellElement):
            self.fail(f"{which} may not start with a dwell element", open_tok)
        return tuple(elements), span


def parse(source: str) -> list:
    """Parse a pattern program into its ordered statements.

    Returns AtomicDecl, EventClass and FilterDefinition objects in source
    order. Raises PatternSyntaxError (with line/column) or DuplicateName.
    """
    return _Parser(source).program()
