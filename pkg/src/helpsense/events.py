"""Atomic event capture: ordered queue, rate statistics, event classes.

Timestamps are integer milliseconds from session start; wall-clock anchoring,
if any, lives only in a log header comment. Out-of-order events are rejected
rather than re-sorted so instrumentation bugs surface immediately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import LogParseError, OutOfOrderTimestamp

DEFAULT_QUEUE_CAPACITY = 512
DEFAULT_REFERENCE_RATE = 0.5   # commands per second
DEFAULT_EWMA_WEIGHT = 0.1
DEFAULT_CLAMP = 4.0


@dataclass(frozen=True)
class AtomicEvent:
    """A raw, time-stamped interface event."""

    symbol: str
    timestamp: int  # ms since session start
    attributes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.symbol:
            raise ValueError("event symbol must be non-empty")
        if self.timestamp < 0:
            raise ValueError("event timestamp must be >= 0")


@dataclass(frozen=True)
class EventClass:
    """A named set of atomic symbols treated as one generalized event."""

    name: str
    members: frozenset[str]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError(f"event class {self.name!r} has no members")


@dataclass
class ClockModel:
    """User command-rate tracker backing scaled time.

    observed_rate is an EWMA over instantaneous rates (1000/gap_ms) of
    consecutive inter-event gaps; 0 means no data yet.
    """

    reference_rate: float = DEFAULT_REFERENCE_RATE
    observed_rate: float = 0.0
    smoothing: float = DEFAULT_EWMA_WEIGHT
    clamp: float = DEFAULT_CLAMP

    def __post_init__(self) -> None:
        if self.reference_rate <= 0:
            raise ValueError("reference_rate must be positive")
        if not 0 < self.smoothing <= 1:
            raise ValueError("smoothing must be in (0, 1]")
        if self.clamp < 1:
            raise ValueError("clamp must be >= 1")


class EventQueue:
    """Bounded, timestamp-ordered history of atomic events.

    Single writer per session; readers take an immutable snapshot() per
    analysis cycle.
    """

    def __init__(self, capacity: int = DEFAULT_QUEUE_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._events: list[AtomicEvent] = []

    def __len__(self) -> int:
        return len(self._events)

    @property
    def events(self) -> tuple[AtomicEvent, ...]:
        return tuple(self._events)

    def last_timestamp(self) -> int | None:
        return self._events[-1].timestamp if self._events else None

    def snapshot(self) -> tuple[AtomicEvent, ...]:
        """Immutable view for one analysis cycle."""
        return tuple(self._events)

    def append(self, event: AtomicEvent) -> None:
        last = self.last_timestamp()
        if last is not None and event.timestamp < last:
            raise OutOfOrderTimestamp(
                f"event {event.symbol!r} at t={event.timestamp} arrived after queue tail t={last}"
            )
        self._events.append(event)
        if len(self._events) > self.capacity:
            del self._events[0]


def ingest(queue: EventQueue, event: AtomicEvent, clock: ClockModel) -> None:
    """Append an event and fold its inter-event gap into the rate EWMA.

    Raises OutOfOrderTimestamp when the event predates the queue tail.
    Gaps are floored at 1 ms so simultaneous events cannot blow up the rate.
    """
    last = queue.last_timestamp()
    queue.append(event)
    if last is None:
        return
    gap_ms = max(event.timestamp - last, 1)
    instantaneous = 1000.0 / gap_ms
    if clock.observed_rate == 0.0:
        clock.observed_rate = instantaneous  # warm start on first gap
    else:
        w = clock.smoothing
        clock.observed_rate = (1 - w) * clock.observed_rate + w * instantaneous


def window(
    queue: EventQueue | tuple[AtomicEvent, ...],
    now: int,
    span: float,
    mode: str = "time",
) -> tuple[AtomicEvent, ...]:
    """Recent sub-sequence of the queue.

    mode="time": events with timestamp in (now - span, now].
    mode="commands": the last int(span) events regardless of timestamps.
    """
    events = queue.snapshot() if isinstance(queue, EventQueue) else queue
    if events and now < events[-1].timestamp:
        raise ValueError(f"window now={now} predates queue tail t={events[-1].timestamp}")
    if mode == "commands":
        n = int(span)
        return events[-n:] if n > 0 else ()
    if mode != "time":
        raise ValueError(f"unknown window mode {mode!r}")
    if span <= 0:
        return ()
    lo = now - span
    return tuple(e for e in events if lo < e.timestamp <= now)


def scale_duration(nominal: float, clock: ClockModel) -> float:
    """Stretch or shrink a nominal duration to the user's working rate.

    Fast users (observed above reference) shrink windows, slow users expand
    them; the factor is clamped to [1/clamp, clamp]. With no rate data the
    nominal duration passes through unchanged.
    """
    if nominal <= 0:
        raise ValueError("nominal duration must be positive")
    if clock.observed_rate == 0.0:
        return nominal
    scaled = nominal * (clock.reference_rate / clock.observed_rate)
    return min(max(scaled, nominal / clock.clamp), nominal * clock.clamp)


def classify(event: AtomicEvent, classes: dict[str, EventClass] | list[EventClass]) -> set[str]:
    """Names of every class containing the event's symbol (classes may overlap)."""
    values = classes.values() if isinstance(classes, dict) else classes
    return {c.name for c in values if event.symbol in c.members}


# --- event log I/O ----------------------------------------------------------
#
# Log format (UTF-8, line-delimited, bit-exact replay input):
#   <timestamp_ms> <symbol> [key=value]*
# '#'-prefixed lines are comments (the optional wall-clock anchor lives in a
# header comment); blank lines are ignored.

def parse_log_line(line: str, lineno: int) -> AtomicEvent | None:
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    parts = stripped.split()
    if len(parts) < 2:
        raise LogParseError(f"expected '<timestamp_ms> <symbol> [key=value]*', got {stripped!r}", lineno)
    try:
        ts = int(parts[0])
    except ValueError:
        raise LogParseError(f"bad timestamp {parts[0]!r}", lineno) from None
    if ts < 0:
        raise LogParseError(f"negative timestamp {ts}", lineno)
    attributes: dict[str, str] = {}
    for token in parts[2:]:
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise LogParseError(f"bad attribute token {token!r}", lineno)
        if key in attributes:
            raise LogParseError(f"duplicate attribute key {key!r}", lineno)
        attributes[key] = value
    return AtomicEvent(symbol=parts[1], timestamp=ts, attributes=attributes)


def read_log(path: str) -> list[AtomicEvent]:
    """Parse an event log; raises LogParseError with the offending line number."""
    out: list[AtomicEvent] = []
    last_ts = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            event = parse_log_line(line, lineno)
            if event is None:
                continue
            if event.timestamp < last_ts:
                raise LogParseError(
                    f"out-of-order timestamp {event.timestamp} after {last_ts}", lineno
                )
            last_ts = event.timestamp
            out.append(event)
    return out


def format_log_line(event: AtomicEvent) -> str:
    parts = [str(event.timestamp), event.symbol]
    parts += [f"{k}={v}" for k, v in event.attributes.items()]
    return " ".join(parts)


def write_log(path: str, events: list[AtomicEvent], header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for event in events:
            fh.write(format_log_line(event) + "\n")
