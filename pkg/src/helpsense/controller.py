"""When to analyze, when to speak up: cycle policies and offer decisions.

Cycle scheduling supports pulsed, event-driven, augmented, and deferred
policies. Offers fire when the assistance probability clears the effective
threshold (user-set, or derived from a 2x2 utility table as the indifference
point) and are suppressed until the most likely topic changes. Per-topic
exceedance counts accumulate for end-of-session review recommendations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import DegenerateUtility, FormatError

DEFAULT_THRESHOLD = 0.5
DEFAULT_TIMEOUT_MS = 8000
DEFAULT_TOP_K = 5
DEFAULT_OFFLINE_THRESHOLD = 0.3


@dataclass(frozen=True)
class Pulsed:
    interval_ms: float

    def __post_init__(self) -> None:
        if self.interval_ms <= 0:
            raise ValueError("pulse interval must be positive")


@dataclass(frozen=True)
class EventDriven:
    triggers: frozenset[str]

    def __post_init__(self) -> None:
        if not self.triggers:
            raise ValueError("event-driven policy needs at least one trigger")


@dataclass(frozen=True)
class AugmentedPulsed:
    interval_ms: float
    triggers: frozenset[str]

    def __post_init__(self) -> None:
        if self.interval_ms <= 0:
            raise ValueError("pulse interval must be positive")
        if not self.triggers:
            raise ValueError("augmented policy needs at least one trigger")


@dataclass(frozen=True)
class Deferred:
    interval_ms: float
    idle_threshold_ms: float

    def __post_init__(self) -> None:
        if self.interval_ms <= 0 or self.idle_threshold_ms <= 0:
            raise ValueError("deferred intervals must be positive")


ControlPolicy = Union[Pulsed, EventDriven, AugmentedPulsed, Deferred]


def parse_duration_ms(text: str) -> float:
    """Parse '2s', '750ms', or a bare millisecond count."""
    text = text.strip()
    try:
        if text.endswith("ms"):
            return float(text[:-2])
        if text.endswith("s"):
            return float(text[:-1]) * 1000.0
        return float(text)
    except ValueError:
        raise FormatError(f"bad duration {text!r}") from None


def parse_policy(spec: str) -> ControlPolicy:
    """Parse a policy spec: pulsed:2s | event:n1,n2 | augmented:2s:n1,n2 |
    deferred:2s:1s."""
    parts = spec.strip().split(":")
    kind = parts[0]
    try:
        if kind == "pulsed" and len(parts) == 2:
            return Pulsed(parse_duration_ms(parts[1]))
        if kind == "event" and len(parts) == 2:
            return EventDriven(frozenset(n.strip() for n in parts[1].split(",") if n.strip()))
        if kind == "augmented" and len(parts) == 3:
            return AugmentedPulsed(
                parse_duration_ms(parts[1]),
                frozenset(n.strip() for n in parts[2].split(",") if n.strip()),
            )
        if kind == "deferred" and len(parts) == 3:
            return Deferred(parse_duration_ms(parts[1]), parse_duration_ms(parts[2]))
    except ValueError as exc:
        raise FormatError(f"bad policy {spec!r}: {exc}") from None
    raise FormatError(f"bad policy {spec!r}")


def format_duration(ms: float) -> str:
    if ms == int(ms) and int(ms) % 1000 == 0:
        return f"{int(ms) // 1000}s"
    return f"{ms:g}ms"


def format_policy(policy: ControlPolicy) -> str:
    if isinstance(policy, Pulsed):
        return f"pulsed:{format_duration(policy.interval_ms)}"
    if isinstance(policy, EventDriven):
        return f"event:{','.join(sorted(policy.triggers))}"
    if isinstance(policy, AugmentedPulsed):
        return f"augmented:{format_duration(policy.interval_ms)}:{','.join(sorted(policy.triggers))}"
    if isinstance(policy, Deferred):
        return (
            f"deferred:{format_duration(policy.interval_ms)}:"
            f"{format_duration(policy.idle_threshold_ms)}"
        )
    raise TypeError(f"not a control policy: {policy!r}")


def policy_interval(policy: ControlPolicy) -> float | None:
    if isinstance(policy, (Pulsed, AugmentedPulsed, Deferred)):
        return policy.interval_ms
    return None


def policy_triggers(policy: ControlPolicy) -> frozenset[str]:
    if isinstance(policy, (EventDriven, AugmentedPulsed)):
        return policy.triggers
    return frozenset()


def should_run_cycle(
    policy: ControlPolicy,
    now: float,
    last_run: float,
    batch: Iterable[str],
    last_event_at: float | None = None,
) -> bool:
    """Whether an analysis cycle is due at `now`.

    `batch` holds the names seen since the last run (atomic symbols, class
    names, freshly satisfied filters); `last_event_at` is the most recent
    event time overall, needed for idle detection.
    """
    if now < last_run:
        raise ValueError("now must be >= last_run")
    if isinstance(policy, Pulsed):
        return now - last_run >= policy.interval_ms
    if isinstance(policy, EventDriven):
        return any(name in policy.triggers for name in batch)
    if isinstance(policy, AugmentedPulsed):
        return now - last_run >= policy.interval_ms or any(
            name in policy.triggers for name in batch
        )
    if isinstance(policy, Deferred):
        idle = last_event_at is None or now - last_event_at >= policy.idle_threshold_ms
        return now - last_run >= policy.interval_ms and idle
    raise TypeError(f"not a control policy: {policy!r}")


@dataclass(frozen=True)
class UtilityTable:
    """Utilities of offering vs staying quiet against actual need."""

    offer_need: float
    quiet_need: float
    offer_no_need: float
    quiet_no_need: float


@dataclass
class AssistanceConfig:
    threshold: float = DEFAULT_THRESHOLD
    timeout_ms: float = DEFAULT_TIMEOUT_MS
    top_k: int = DEFAULT_TOP_K
    offline_threshold: float = DEFAULT_OFFLINE_THRESHOLD
    utility: UtilityTable | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0,1]")
        if not 0.0 <= self.offline_threshold <= 1.0:
            raise ValueError("offline threshold must be in [0,1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


def effective_threshold(config: AssistanceConfig) -> float:
    """The probability above which offering beats staying quiet.

    With a utility table this is the indifference point of expected utility;
    otherwise the user-set threshold passes through.
    """
    u = config.utility
    if u is None:
        return config.threshold
    gain_when_needed = u.offer_need - u.quiet_need
    cost_when_not = u.quiet_no_need - u.offer_no_need
    denominator = gain_when_needed + cost_when_not
    if denominator == 0:
        raise DegenerateUtility("utility table has no indifference point")
    return min(max(cost_when_not / denominator, 0.0), 1.0)


@dataclass
class SessionTracker:
    """Per-session running statistics feeding offers and offline review."""

    exceedance: dict[str, int] = field(default_factory=dict)
    reviewed: set[str] = field(default_factory=set)
    last_offered_topics: tuple[str, ...] = ()
    last_offered_argmax: str | None = None

    def mark_reviewed(self, topic: str) -> None:
        self.reviewed.add(topic)


@dataclass(frozen=True)
class AssistanceDecision:
    action: str  # "offer" | "quiet"
    reason: str  # "offered" | "threshold-not-met" | "suppressed"
    p_help: float
    topics: tuple[tuple[str, float], ...] = ()


def decide(
    ranked_topics: list[tuple[str, float]],
    p_help: float,
    config: AssistanceConfig,
    tracker: SessionTracker,
) -> AssistanceDecision:
    """Offer the top topics or stay quiet; updates the tracker on offer.

    Offers require p_help at or above the effective threshold AND a change
    of argmax topic since the last offer (re-offering the same best topic is
    suppressed until the ranking shifts).
    """
    if not ranked_topics:
        raise ValueError("decide needs a non-empty ranked topic list")
    if p_help < effective_threshold(config):
        return AssistanceDecision("quiet", "threshold-not-met", p_help)
    argmax = ranked_topics[0][0]
    if tracker.last_offered_argmax == argmax:
        return AssistanceDecision("quiet", "suppressed", p_help)
    offered = tuple(ranked_topics[: config.top_k])
    tracker.last_offered_argmax = argmax
    tracker.last_offered_topics = tuple(name for name, _ in offered)
    return AssistanceDecision("offer", "offered", p_help, offered)


def record_cycle(
    tracker: SessionTracker,
    topic_probabilities: Iterable[tuple[str, float]],
    offline_threshold: float,
    reviewed: Iterable[str] = (),
) -> SessionTracker:
    """Count topics whose probability cleared the offline-review threshold."""
    for name, p in topic_probabilities:
        if p >= offline_threshold:
            tracker.exceedance[name] = tracker.exceedance.get(name, 0) + 1
    for topic in reviewed:
        tracker.reviewed.add(topic)
    return tracker


def session_summary(tracker: SessionTracker, n: int) -> list[tuple[str, int]]:
    """Up to n unreviewed topics by exceedance count, ties by name."""
    candidates = [
        (name, count) for name, count in tracker.exceedance.items() if name not in tracker.reviewed
    ]
    candidates.sort(key=lambda item: (-item[1], item[0]))
    return candidates[: max(n, 0)]
