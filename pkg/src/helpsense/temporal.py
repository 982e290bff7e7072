"""Age-dependent evidence: decay functions and instant-model construction.

Observations lose diagnostic force as they age. Within an evidential horizon
the assessed probabilities hold unchanged; past it they decay toward the
probability assessed for "not seen at all" along a step, linear, or
exponential curve (the exponential parameter is a likelihood half-life).
Decay for distinct observation variables never interacts, and a noisy-OR
observation decays each cause's activation independently before
re-expansion.

The instant model is a copy of the base network in which each aged finding's
CPT has been rewritten for its age, with evidence asserted true; variables
whose observation never fired within the horizon keep their stale
probabilities and get evidence false.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .bayes.model import CptNode, Network, NoisyOrNode, Posterior, expand_noisy_or
from .bayes.infer import infer
from .errors import MissingAssistanceVariable, UnitMismatch, UnknownVariable

SHAPES = ("step", "linear", "exponential")
UNITS = ("seconds", "actions")


@dataclass(frozen=True)
class DecaySpec:
    """How a conditional probability relaxes toward its stale value.

    horizon: age (in `units`) during which the immediate value holds.
    parameter: half-life for exponential, completion span for linear.
    """

    shape: str
    horizon: float = 0.0
    parameter: float | None = None
    units: str = "seconds"

    def __post_init__(self) -> None:
        if self.shape not in SHAPES:
            raise ValueError(f"unknown decay shape {self.shape!r}")
        if self.units not in UNITS:
            raise ValueError(f"unknown decay units {self.units!r}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.shape in ("linear", "exponential"):
            if self.parameter is None or self.parameter <= 0:
                raise ValueError(f"{self.shape} decay needs a positive parameter")


@dataclass(frozen=True)
class TemporalObservationSpec:
    """Aging parameters for one binary observation variable.

    For CPT observations the tuples run over parent configurations in row
    order; for noisy-OR observations they run over parents (each cause's
    activation decays on its own, then the node is re-expanded).
    """

    variable: str
    units: str
    immediate: tuple[float, ...]
    stale: tuple[float, ...]
    decay: tuple[DecaySpec, ...]
    noisy_or: bool = False
    leak: float = 0.0

    def __post_init__(self) -> None:
        if self.units not in UNITS:
            raise ValueError(f"unknown age units {self.units!r}")
        if not (len(self.immediate) == len(self.stale) == len(self.decay)):
            raise ValueError(f"spec for {self.variable!r} has mismatched row counts")
        for p in self.immediate + self.stale:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"spec for {self.variable!r} has probabilities outside [0,1]")


@dataclass(frozen=True)
class TemporalFinding:
    """An observation variable's status at the present moment.

    observed True carries the age since the most recent satisfaction (in the
    spec's units); False and None (absent) both mean "not seen within the
    horizon" and assert negative evidence against the stale probabilities.
    """

    variable: str
    observed: bool | None
    age: float = 0.0
    units: str = "seconds"

    def __post_init__(self) -> None:
        if self.age < 0:
            raise ValueError("finding age must be >= 0")


def decayed_probability(p_immediate: float, p_stale: float, age: float, spec: DecaySpec) -> float:
    """Conditional probability after `age`, per the decay spec.

    Holds p_immediate through the horizon, then closes the gap to p_stale:
    exponentially with the given half-life, linearly over the given span, or
    immediately for step decay. Always within the endpoint interval.
    """
    if age <= spec.horizon:
        return p_immediate
    a = age - spec.horizon
    if spec.shape == "step":
        value = p_stale
    elif spec.shape == "linear":
        assert spec.parameter is not None
        if a >= spec.parameter:
            value = p_stale
        else:
            value = p_immediate + (p_stale - p_immediate) * (a / spec.parameter)
    else:
        assert spec.parameter is not None
        value = p_stale + (p_immediate - p_stale) * 2.0 ** (-a / spec.parameter)
    lo, hi = min(p_immediate, p_stale), max(p_immediate, p_stale)
    return min(max(value, lo), hi)


def _aged_node(base: Network, spec: TemporalObservationSpec, age: float) -> CptNode | NoisyOrNode:
    if spec.noisy_or:
        node = base.nodes[spec.variable]
        assert isinstance(node, NoisyOrNode), f"{spec.variable!r} spec says noisy-OR but node is a CPT"
        activation = tuple(
            decayed_probability(spec.immediate[i], spec.stale[i], age, spec.decay[i])
            for i in range(len(spec.immediate))
        )
        return NoisyOrNode(node.variable, node.parents, activation, spec.leak)
    node = base.nodes[spec.variable]
    assert isinstance(node, CptNode), f"{spec.variable!r} spec says CPT but node is noisy-OR"
    rows = []
    for j in range(len(spec.immediate)):
        p = decayed_probability(spec.immediate[j], spec.stale[j], age, spec.decay[j])
        if p == node.rows[j][0]:
            rows.append(node.rows[j])  # within the horizon: keep the assessed row bit-exact
        else:
            rows.append((p, 1.0 - p))
    return CptNode(node.variable, node.parents, tuple(rows))


def _stale_node(base: Network, spec: TemporalObservationSpec) -> CptNode | NoisyOrNode:
    if spec.noisy_or:
        node = base.nodes[spec.variable]
        return NoisyOrNode(node.variable, node.parents, spec.stale, spec.leak)
    node = base.nodes[spec.variable]
    return CptNode(node.variable, node.parents, tuple((p, 1.0 - p) for p in spec.stale))


def build_instant_model(
    base: Network,
    specs: Iterable[TemporalObservationSpec] | dict[str, TemporalObservationSpec],
    findings: Iterable[TemporalFinding],
) -> tuple[Network, dict[str, str]]:
    """Rewrite observation CPTs for the findings' ages and collect evidence.

    Returns the instant network and the evidence assertions to run against
    it. Variables without a finding are left untouched and unasserted.
    """
    by_var = specs if isinstance(specs, dict) else {s.variable: s for s in specs}
    for name in by_var:
        if name not in base.variables:
            raise UnknownVariable(f"temporal spec names unknown variable {name!r}")

    net = base
    evidence: dict[str, str] = {}
    for finding in findings:
        spec = by_var.get(finding.variable)
        if spec is None:
            raise UnknownVariable(f"finding references unspecified variable {finding.variable!r}")
        if finding.units != spec.units:
            raise UnitMismatch(
                f"finding for {finding.variable!r} ages in {finding.units}, spec in {spec.units}"
            )
        var = base.variable(finding.variable)
        if finding.observed:
            net = net.with_node(_aged_node(base, spec, finding.age))
            evidence[var.name] = var.states[0]
        else:
            net = net.with_node(_stale_node(base, spec))
            evidence[var.name] = var.states[1]
    return net, evidence


def infer_needs(
    network: Network,
    evidence: dict[str, str],
    profile_evidence: dict[str, str] | None = None,
) -> tuple[Posterior, float]:
    """Posterior over every goal/need variable plus the assistance probability.

    Observation evidence takes precedence over profile evidence on conflict.
    Raises MissingAssistanceVariable when the network designates none.
    """
    if network.assistance is None or network.assistance not in network.variables:
        raise MissingAssistanceVariable("network designates no binary assistance variable")
    combined = dict(profile_evidence or {})
    combined.update(evidence)
    query = [v.name for v in network.by_kind("goal", "need")]
    if network.assistance not in query:
        query.append(network.assistance)
    posterior = infer(network, combined, query)
    assist_var = network.variable(network.assistance)
    p_help = posterior[network.assistance][assist_var.states[0]]
    return posterior, p_help


__all__ = [
    "DecaySpec",
    "TemporalFinding",
    "TemporalObservationSpec",
    "build_instant_model",
    "decayed_probability",
    "expand_noisy_or",
    "infer_needs",
]
