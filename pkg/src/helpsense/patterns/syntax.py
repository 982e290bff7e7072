"""AST for the pattern language plus its normal-form printer.

Expressions are immutable trees. Spans measure either time (milliseconds,
floats so scaled time survives) or commands (a count of events). The printer
emits one statement per line in a canonical form; parsing that form and
printing again is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

COMPARATORS = (">=", "=", "<=")


@dataclass(frozen=True)
class Span:
    """A window length: milliseconds of time or a count of commands."""

    mode: str  # "time" | "commands"
    amount: float

    def __post_init__(self) -> None:
        if self.mode not in ("time", "commands"):
            raise ValueError(f"bad span mode {self.mode!r}")
        if self.amount <= 0:
            raise ValueError("span must be positive")
        if self.mode == "commands" and self.amount != int(self.amount):
            raise ValueError("command spans must be integral")


def format_span(span: Span) -> str:
    if span.mode == "commands":
        return f"{int(span.amount)}cmds"
    ms = span.amount
    if ms == int(ms) and int(ms) % 1000 == 0:
        return f"{int(ms) // 1000}s"
    if ms == int(ms):
        return f"{int(ms)}ms"
    return f"{ms}ms"


@dataclass(frozen=True)
class DwellElement:
    """A quiet gap of at least `span` inside a sequence."""

    span: Span


@dataclass(frozen=True)
class Rate:
    target: str
    span: Span
    comparator: str
    threshold: int

    def __post_init__(self) -> None:
        if self.comparator not in COMPARATORS:
            raise ValueError(f"bad comparator {self.comparator!r}")
        if self.threshold < 1:
            raise ValueError("rate threshold must be >= 1")


@dataclass(frozen=True)
class Oneof:
    targets: tuple[str, ...]
    span: Span


@dataclass(frozen=True)
class All:
    targets: tuple[str, ...]
    span: Span


@dataclass(frozen=True)
class Seq:
    elements: tuple[Union[str, DwellElement], ...]
    span: Span


@dataclass(frozen=True)
class TightSeq:
    elements: tuple[Union[str, DwellElement], ...]
    span: Span


@dataclass(frozen=True)
class Dwell:
    span: Span


@dataclass(frozen=True)
class And:
    left: "PatternExpr"
    right: "PatternExpr"


@dataclass(frozen=True)
class Or:
    left: "PatternExpr"
    right: "PatternExpr"


@dataclass(frozen=True)
class Not:
    operand: "PatternExpr"


PatternExpr = Union[Rate, Oneof, All, Seq, TightSeq, Dwell, And, Or, Not]


@dataclass(frozen=True)
class AtomicDecl:
    """Declares raw event symbols patterns may reference."""

    symbols: tuple[str, ...]


@dataclass(frozen=True)
class FilterDefinition:
    """A named pattern; `scaled` stretches its time spans to the user's rate,
    `internal` keeps it out of the observation mapping (composition only)."""

    name: str
    expr: PatternExpr
    scaled: bool = False
    internal: bool = False


@dataclass(frozen=True)
class ModeledEvent:
    """A satisfied filter: the most recent match time and its age at `now`."""

    name: str
    satisfied_at: float
    age: float


# --- printer -----------------------------------------------------------------

_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_NOT = 3
_LEVEL_PRIMARY = 4


def _targets(targets: tuple[str, ...]) -> str:
    return "{" + ", ".join(targets) + "}"


def _elements(elements: tuple[Union[str, DwellElement], ...]) -> str:
    out = []
    for el in elements:
        if isinstance(el, DwellElement):
            out.append(f"dwell({format_span(el.span)})")
        else:
            out.append(el)
    return ", ".join(out)


def print_expr(expr: PatternExpr, min_level: int = _LEVEL_OR) -> str:
    if isinstance(expr, Or):
        raw, level = f"{print_expr(expr.left, _LEVEL_OR)} or {print_expr(expr.right, _LEVEL_AND)}", _LEVEL_OR
    elif isinstance(expr, And):
        raw, level = f"{print_expr(expr.left, _LEVEL_AND)} and {print_expr(expr.right, _LEVEL_NOT)}", _LEVEL_AND
    elif isinstance(expr, Not):
        raw, level = f"not {print_expr(expr.operand, _LEVEL_NOT)}", _LEVEL_NOT
    elif isinstance(expr, Rate):
        raw, level = f"rate({expr.target}, {format_span(expr.span)}) {expr.comparator} {expr.threshold}", _LEVEL_PRIMARY
    elif isinstance(expr, Oneof):
        raw, level = f"oneof({_targets(expr.targets)}, {format_span(expr.span)})", _LEVEL_PRIMARY
    elif isinstance(expr, All):
        raw, level = f"all({_targets(expr.targets)}, {format_span(expr.span)})", _LEVEL_PRIMARY
    elif isinstance(expr, Seq):
        raw, level = f"seq({_elements(expr.elements)}, {format_span(expr.span)})", _LEVEL_PRIMARY
    elif isinstance(expr, TightSeq):
        raw, level = f"tightseq({_elements(expr.elements)}, {format_span(expr.span)})", _LEVEL_PRIMARY
    elif isinstance(expr, Dwell):
        raw, level = f"dwell({format_span(expr.span)})", _LEVEL_PRIMARY
    else:
        raise TypeError(f"not a pattern expression: {expr!r}")
    if level < min_level:
        return f"({raw})"
    return raw


def print_statement(stmt) -> str:
    from ..events import EventClass  # local import to avoid a cycle

    if isinstance(stmt, AtomicDecl):
        return f"atomic {', '.join(stmt.symbols)};"
    if isinstance(stmt, EventClass):
        return f"class {stmt.name} := {{{', '.join(sorted(stmt.members))}}};"
    if isinstance(stmt, FilterDefinition):
        flags = ""
        if stmt.scaled:
            flags += " scaled"
        if stmt.internal:
            flags += " internal"
        return f"define {stmt.name}{flags} := {print_expr(stmt.expr)};"
    raise TypeError(f"not a pattern statement: {stmt!r}")


def print_program(statements: list) -> str:
    """Normal form: one statement per line, trailing newline."""
    return "".join(print_statement(s) + "\n" for s in statements)
