"""Temporal pattern language: parse, compile, and evaluate event filters.

A pattern program declares atomic symbols, event classes, and named filter
definitions. Compiled programs turn a queue snapshot into modeled events,
each carrying the timestamp of its most recent match.
"""

from .syntax import (
    All,
    And,
    AtomicDecl,
    Dwell,
    DwellElement,
    FilterDefinition,
    ModeledEvent,
    Not,
    Oneof,
    Or,
    PatternExpr,
    Rate,
    Seq,
    Span,
    TightSeq,
    print_program,
    print_expr,
)
from .parser import parse
from .runtime import CompiledProgram, compile_program, evaluate

__all__ = [
    "All",
    "And",
    "AtomicDecl",
    "CompiledProgram",
    "Dwell",
    "DwellElement",
    "FilterDefinition",
    "ModeledEvent",
    "Not",
    "Oneof",
    "Or",
    "PatternExpr",
    "Rate",
    "Seq",
    "Span",
    "TightSeq",
    "compile_program",
    "evaluate",
    "parse",
    "print_expr",
    "print_program",
]
