"""Persistent user profile: declared expertise plus competency counters.

Indicator rules map modeled events (including help-topic dwell filters) to
competency counters; threshold schedules turn counts into discrete states
that enter the network as evidence alongside the declared expertise level.
Profiles persist as a versioned text file, one per user, written atomically.
"""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass, field
from typing import Iterable

from .bayes.model import Network
from .errors import CorruptProfile, FormatError, SchemaVersionError, UnknownCompetency

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_EXPERTISE_VARIABLE = "expertise"


@dataclass
class Competency:
    count: int = 0
    last_seen: int = 0  # ms timestamp, session-virtual unless the host supplies wall clock
    state: str = ""


@dataclass
class Profile:
    user_id: str
    declared_level: str
    competencies: dict[str, Competency] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def ensure(self, competency: str, initial_state: str) -> None:
        """Materialize a competency counter at zero if absent."""
        if competency not in self.competencies:
            self.competencies[competency] = Competency(count=0, last_seen=0, state=initial_state)


@dataclass(frozen=True)
class IndicatorRule:
    """Counts completions of a trigger filter toward a competency state."""

    trigger: str
    competency: str
    schedule: tuple[tuple[int, str], ...]  # (min count, state), ascending

    def __post_init__(self) -> None:
        if not self.schedule:
            raise ValueError("indicator schedule must not be empty")
        counts = [c for c, _ in self.schedule]
        if counts != sorted(counts) or len(set(counts)) != len(counts):
            raise ValueError("indicator schedule counts must be strictly ascending")
        if counts[0] != 0:
            raise ValueError("indicator schedule must start at count 0")

    def state_for(self, count: int) -> str:
        state = self.schedule[0][1]
        for min_count, s in self.schedule:
            if count >= min_count:
                state = s
        return state


def update(
    profile: Profile,
    triggered: Iterable[tuple[str, int]],
    rules: Iterable[IndicatorRule],
) -> Profile:
    """Fold a batch of (trigger name, timestamp) completions into the profile.

    Each completion increments every rule it triggers; derived states are
    recomputed from the schedules. Batch-associative: two updates equal one
    update with the concatenated batch. Raises UnknownCompetency when a
    triggered rule targets a competency the profile has not materialized.
    """
    rules = list(rules)
    by_trigger: dict[str, list[IndicatorRule]] = {}
    for rule in rules:
        by_trigger.setdefault(rule.trigger, []).append(rule)
    touched: set[str] = set()
    for name, ts in triggered:
        for rule in by_trigger.get(name, ()):
            comp = profile.competencies.get(rule.competency)
            if comp is None:
                raise UnknownCompetency(
                    f"rule for trigger {name!r} targets unknown competency {rule.competency!r}"
                )
            comp.count += 1
            comp.last_seen = max(comp.last_seen, ts)
            touched.add(rule.competency)
    for rule in rules:
        if rule.competency in touched:
            profile.competencies[rule.competency].state = rule.state_for(
                profile.competencies[rule.competency].count
            )
    return profile


def as_evidence(
    profile: Profile,
    network: Network,
    expertise_variable: str = DEFAULT_EXPERTISE_VARIABLE,
) -> dict[str, str]:
    """Evidence assertions for profile-kind variables.

    The declared level asserts on the expertise variable; each competency
    asserts its derived state on the same-named variable. Anything that does
    not map onto the network (or whose state label is absent) is skipped
    with a warning rather than asserted wrongly.
    """
    evidence: dict[str, str] = {}

    def assert_state(var_name: str, state: str, origin: str) -> None:
        var = network.variables.get(var_name)
        if var is None:
            logger.warning("profile %s: no network variable %r, skipping", origin, var_name)
            return
        if state not in var.states:
            logger.warning(
                "profile %s: variable %r has no state %r, skipping", origin, var_name, state
            )
            return
        evidence[var_name] = state

    assert_state(expertise_variable, profile.declared_level, "declared level")
    for name, comp in profile.competencies.items():
        if comp.state:
            assert_state(name, comp.state, f"competency {name!r}")
    return evidence


# --- persistence -------------------------------------------------------------
#
# Layout (identifiers must be whitespace-free):
#   schema_version 1
#   user <id>
#   declared_level <state>
#   competency <name> count=<n> last_seen=<ms> state=<state>
#   end
# The trailing 'end' line distinguishes a complete file from a truncated one.


def store(profile: Profile, path: str) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    lines = [
        f"schema_version {profile.schema_version}",
        f"user {profile.user_id}",
        f"declared_level {profile.declared_level}",
    ]
    for name, comp in profile.competencies.items():
        lines.append(
            f"competency {name} count={comp.count} last_seen={comp.last_seen} state={comp.state}"
        )
    lines.append("end")
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".profile-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def load(path: str, rules: Iterable[IndicatorRule] | None = None) -> Profile:
    """Read a stored profile; load(store(p)) == p.

    With rules given, derived states are recomputed from the schedules
    (counts are what persists across sessions). Raises SchemaVersionError
    for files from a newer schema and CorruptProfile for anything
    truncated or malformed.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    content = [ln for ln in lines if ln.strip()]
    if not content or not content[0].startswith("schema_version "):
        raise CorruptProfile(f"{path}: missing schema_version header")
    try:
        version = int(content[0].split()[1])
    except (IndexError, ValueError):
        raise CorruptProfile(f"{path}: bad schema_version line") from None
    if version > SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: schema_version {version} is newer than {SCHEMA_VERSION}")
    if content[-1] != "end":
        raise CorruptProfile(f"{path}: truncated (missing 'end' line)")

    user_id: str | None = None
    declared: str | None = None
    competencies: dict[str, Competency] = {}
    for line in content[1:-1]:
        parts = line.split()
        if parts[0] == "user" and len(parts) == 2:
            user_id = parts[1]
        elif parts[0] == "declared_level" and len(parts) == 2:
            declared = parts[1]
        elif parts[0] == "competency" and len(parts) == 5:
            try:
                fields = dict(p.split("=", 1) for p in parts[2:])
                competencies[parts[1]] = Competency(
                    count=int(fields["count"]),
                    last_seen=int(fields["last_seen"]),
                    state=fields["state"],
                )
            except (KeyError, ValueError):
                raise CorruptProfile(f"{path}: bad competency line {line!r}") from None
        else:
            raise CorruptProfile(f"{path}: unrecognized line {line!r}")
    if user_id is None or declared is None:
        raise CorruptProfile(f"{path}: missing user or declared_level")
    profile = Profile(
        user_id=user_id,
        declared_level=declared,
        competencies=competencies,
        schema_version=version,
    )
    if rules is not None:
        rules = list(rules)
        for rule in rules:
            profile.ensure(rule.competency, rule.state_for(0))
        for rule in rules:
            comp = profile.competencies[rule.competency]
            comp.state = rule.state_for(comp.count)
    return profile


# --- indicator rules file ------------------------------------------------------
#
#   indicator <trigger> competency <name> thresholds 0:<state> [<count>:<state> ...]


def load_rules_text(text: str) -> list[IndicatorRule]:
    rules: list[IndicatorRule] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        hash_pos = line.find("#")
        if hash_pos >= 0:
            line = line[:hash_pos]
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 6 or parts[0] != "indicator" or parts[2] != "competency" or parts[4] != "thresholds":
            raise FormatError(
                "expected 'indicator <trigger> competency <name> thresholds 0:<state> ...'", lineno
            )
        schedule = []
        for token in parts[5:]:
            count_text, sep, state = token.partition(":")
            if not sep or not state:
                raise FormatError(f"bad threshold {token!r}", lineno)
            try:
                schedule.append((int(count_text), state))
            except ValueError:
                raise FormatError(f"bad threshold count {count_text!r}", lineno) from None
        try:
            rules.append(IndicatorRule(trigger=parts[1], competency=parts[3], schedule=tuple(schedule)))
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
    return rules


def load_rules(path: str) -> list[IndicatorRule]:
    with open(path, encoding="utf-8") as fh:
        return load_rules_text(fh.read())
