"""Free-text query analysis: term spotting and posterior fusion.

A TermModel scores query words against goals with naive Bayes over term
presence (absence is never used as evidence). Word-based and action-based
goal distributions combine through weighted multiplication; loading smooths
every likelihood away from 0 and 1 so a single term can never zero out the
fused posterior.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable

from .errors import DegenerateFusion, FormatError

PRIOR_TOLERANCE = 1e-9
SMOOTHING_ALPHA = 0.1

_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class FusionWeights:
    actions: float = 1.0
    words: float = 1.0

    def __post_init__(self) -> None:
        if self.actions < 0 or self.words < 0:
            raise ValueError("fusion weights must be >= 0")
        if self.actions == 0 and self.words == 0:
            raise ValueError("at least one fusion weight must be positive")


@dataclass(frozen=True)
class TermModel:
    """Goal priors and per-term relevance likelihoods.

    The goal list must match the network's need variable states; likelihoods
    are strictly inside (0,1) after load-time smoothing.
    """

    goals: tuple[str, ...]
    priors: dict[str, float]
    likelihoods: dict[str, dict[str, float]]  # term -> goal -> p(term seen | goal)

    def __post_init__(self) -> None:
        total = sum(self.priors.get(g, 0.0) for g in self.goals)
        if abs(total - 1.0) > PRIOR_TOLERANCE:
            raise ValueError(f"goal priors sum to {total!r}, not 1")
        for term, by_goal in self.likelihoods.items():
            for goal, p in by_goal.items():
                if not 0.0 < p < 1.0:
                    raise ValueError(f"likelihood p({term!r}|{goal!r}) = {p!r} outside (0,1)")

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self.likelihoods)


def smooth(p: float, alpha: float = SMOOTHING_ALPHA) -> float:
    """Pull a raw likelihood strictly inside (0,1)."""
    return (p + alpha) / (1.0 + 2.0 * alpha)


def tokenize(text: str, vocabulary: frozenset[str] | set[str]) -> set[str]:
    """Lowercased in-vocabulary words of the query, deduplicated."""
    return {w for w in _WORD_RE.findall(text.lower()) if w in vocabulary}


def infer_from_terms(terms: Iterable[str], model: TermModel) -> dict[str, float]:
    """Naive-Bayes posterior over goals given the spotted terms.

    Computed in log space and normalized; an empty term set returns the
    prior unchanged.
    """
    terms = set(terms)
    unknown = terms - model.vocabulary
    if unknown:
        raise ValueError(f"terms outside vocabulary: {sorted(unknown)}")
    if not terms:
        return {g: model.priors[g] for g in model.goals}
    scores = {}
    for goal in model.goals:
        log_p = math.log(model.priors[goal]) if model.priors[goal] > 0 else -math.inf
        for term in terms:
            log_p += math.log(model.likelihoods[term][goal])
        scores[goal] = log_p
    peak = max(scores.values())
    if peak == -math.inf:
        raise DegenerateFusion("every goal has zero prior mass")
    raw = {g: math.exp(s - peak) for g, s in scores.items()}
    total = sum(raw.values())
    return {g: raw[g] / total for g in model.goals}


def fuse(
    p_actions: dict[str, float],
    p_words: dict[str, float],
    weights: FusionWeights = FusionWeights(),
) -> dict[str, float]:
    """Weighted multiplicative fusion of two goal distributions.

    p(g) is proportional to p_actions(g)^w_a * p_words(g)^w_w; a zero weight
    makes the corresponding factor drop out entirely (0^0 = 1). Raises
    DegenerateFusion when nothing has mass left.
    """
    if set(p_actions) != set(p_words):
        raise ValueError("fused distributions must share goal support")
    raw = {}
    for goal in p_actions:
        raw[goal] = (p_actions[goal] ** weights.actions) * (p_words[goal] ** weights.words)
    total = sum(raw.values())
    if total <= 0.0:
        raise DegenerateFusion("weighted product has zero total mass")
    return {g: raw[g] / total for g in p_actions}


# --- terms file --------------------------------------------------------------
#
# UTF-8 lines:
#   goal <name> prior <p>
#   term <word> <goal>:<likelihood> [<goal>:<likelihood> ...]
# '#' starts a comment. Likelihoods are smoothed on load; goals missing from
# a term line contribute a smoothed zero.


def load_terms_text(text: str) -> TermModel:
    goals: list[str] = []
    priors: dict[str, float] = {}
    raw_terms: dict[str, dict[str, float]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        hash_pos = line.find("#")
        if hash_pos >= 0:
            line = line[:hash_pos]
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "goal":
            if len(parts) != 4 or parts[2] != "prior":
                raise FormatError(f"expected 'goal <name> prior <p>', got {line!r}", lineno)
            name = parts[1]
            if name in priors:
                raise FormatError(f"goal {name!r} declared twice", lineno)
            try:
                priors[name] = float(parts[3])
            except ValueError:
                raise FormatError(f"bad prior {parts[3]!r}", lineno) from None
            goals.append(name)
        elif parts[0] == "term":
            if len(parts) < 3:
                raise FormatError(f"expected 'term <word> <goal>:<p> ...', got {line!r}", lineno)
            word = parts[1].lower()
            entries = raw_terms.setdefault(word, {})
            for token in parts[2:]:
                goal, sep, p_text = token.partition(":")
                if not sep:
                    raise FormatError(f"bad term entry {token!r}", lineno)
                try:
                    entries[goal] = float(p_text)
                except ValueError:
                    raise FormatError(f"bad likelihood {p_text!r}", lineno) from None
        else:
            raise FormatError(f"expected 'goal' or 'term', got {parts[0]!r}", lineno)

    for word, entries in raw_terms.items():
        for goal in entries:
            if goal not in priors:
                raise FormatError(f"term {word!r} references unknown goal {goal!r}")

    likelihoods = {
        word: {g: smooth(entries.get(g, 0.0)) for g in goals}
        for word, entries in raw_terms.items()
    }
    try:
        return TermModel(goals=tuple(goals), priors=priors, likelihoods=likelihoods)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_terms(path: str) -> TermModel:
    with open(path, encoding="utf-8") as fh:
        return load_terms_text(fh.read())


def format_terms(priors: dict[str, float], raw_terms: dict[str, dict[str, float]]) -> str:
    """Render a terms document from raw (pre-smoothing) likelihoods."""
    out = [f"goal {name} prior {p!r}" for name, p in priors.items()]
    for word, entries in raw_terms.items():
        body = " ".join(f"{g}:{p!r}" for g, p in entries.items())
        out.append(f"term {word} {body}")
    return "\n".join(out) + "\n"
