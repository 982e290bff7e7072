"""Exception hierarchy shared across the engine.

Every error the engine raises on purpose derives from EngineError so callers
(CLI, service) can map failures to exit codes / HTTP statuses in one place.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine-raised errors."""


# --- event stream ---------------------------------------------------------

class OutOfOrderTimestamp(EngineError):
    """An event arrived with a timestamp earlier than the queue tail.

    Signals a broken event source; events are rejected, never re-sorted.
    """


# --- pattern language ------------------------------------------------------

class PatternSyntaxError(EngineError):
    """Parse failure in a pattern program; carries line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DuplicateName(EngineError):
    """A class or filter name was defined twice."""


class UnknownSymbol(EngineError):
    """A pattern references a target that is not a declared atomic symbol,
    event class, or previously defined filter."""


class CyclicDefinition(EngineError):
    """Filter definitions reference each other in a cycle."""


# --- belief network --------------------------------------------------------

class UnknownVariable(EngineError):
    """A variable or state name does not exist in the network."""


class InconsistentEvidence(EngineError):
    """The asserted evidence has zero probability under the model."""


class MissingAssistanceVariable(EngineError):
    """The model does not designate a binary assistance variable."""


# --- temporal inference ----------------------------------------------------

class UnitMismatch(EngineError):
    """A finding's age units differ from the decay spec's units."""


# --- query analysis --------------------------------------------------------

class DegenerateFusion(EngineError):
    """Weighted multiplication of distributions left zero total mass."""


# --- profile ---------------------------------------------------------------

class UnknownCompetency(EngineError):
    """An indicator rule targets a competency the profile does not know."""


class SchemaVersionError(EngineError):
    """A stored profile declares a schema version newer than this code."""


class CorruptProfile(EngineError):
    """A stored profile file failed to parse."""


# --- controller ------------------------------------------------------------

class DegenerateUtility(EngineError):
    """The utility table yields a zero denominator for the threshold."""


# --- structured-text files ---------------------------------------------------

class FormatError(EngineError):
    """A structured-text file (network, terms, indicators, config) failed to
    parse; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"{message} (line {line})")
        self.line = line


# --- engine / bundles ------------------------------------------------------

class BundleError(EngineError):
    """A model bundle failed to load; aggregates every failure found."""

    def __init__(self, problems: list[str]):
        super().__init__("bundle validation failed:\n" + "\n".join(f"  - {p}" for p in problems))
        self.problems = problems


class LogParseError(EngineError):
    """An event log line failed to parse; carries the line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line
