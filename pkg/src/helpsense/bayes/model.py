"""Network structure: variables, CPT nodes, noisy-OR nodes, validation.

Conventions fixed here and relied on everywhere else:
  - CPT rows are indexed by parent-state configuration in lexicographic order
    of parent state indices, first declared parent most significant.
  - Binary variables list their positive state first (index 0); noisy-OR
    causes are "active" in state 0 and evidence from a satisfied observation
    asserts state 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from ..errors import UnknownVariable

ROW_SUM_TOLERANCE = 1e-9

KINDS = ("goal", "need", "profile", "observation", "other")


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...]
    kind: str = "other"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"variable {self.name!r} has unknown kind {self.kind!r}")

    @property
    def card(self) -> int:
        return len(self.states)

    def state_index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownVariable(f"variable {self.name!r} has no state {state!r}") from None


@dataclass(frozen=True)
class CptNode:
    variable: str
    parents: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class NoisyOrNode:
    variable: str
    parents: tuple[str, ...]
    activation: tuple[float, ...]  # per-parent chance an active cause fires the effect
    leak: float = 0.0


@dataclass(frozen=True)
class Network:
    """Immutable-after-validation network; nodes keyed by variable name."""

    variables: dict[str, Variable] = field(default_factory=dict)
    nodes: dict[str, CptNode | NoisyOrNode] = field(default_factory=dict)
    assistance: str | None = None  # designated binary assistance variable

    def variable(self, name: str) -> Variable:
        try:
            return self.variables[name]
        except KeyError:
            raise UnknownVariable(f"no variable named {name!r}") from None

    def card(self, name: str) -> int:
        return self.variable(name).card

    def by_kind(self, *kinds: str) -> list[Variable]:
        return [v for v in self.variables.values() if v.kind in kinds]

    def with_node(self, node: CptNode | NoisyOrNode) -> "Network":
        """Copy of the network with one node replaced (instant-model building)."""
        nodes = dict(self.nodes)
        nodes[node.variable] = node
        return replace(self, nodes=nodes)


Posterior = dict[str, dict[str, float]]


@dataclass(frozen=True)
class ValidationIssue:
    code: str  # "cycle" | "unknown-parent" | "normalization" | "arity" | ...
    node: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.node}: {self.message}"


def parent_configs(network: Network, parents: tuple[str, ...]):
    """Parent-state index tuples in row order (lexicographic, first parent
    most significant)."""
    return itertools.product(*(range(network.card(p)) for p in parents))


def config_labels(network: Network, parents: tuple[str, ...], config: tuple[int, ...]) -> tuple[str, ...]:
    return tuple(network.variable(p).states[i] for p, i in zip(parents, config))


def validate(network: Network) -> list[ValidationIssue]:
    """Structural and numeric checks; returns an issue list, never raises."""
    issues: list[ValidationIssue] = []

    for var in network.variables.values():
        if var.card < 2:
            issues.append(ValidationIssue("arity", var.name, "needs at least 2 states"))
        if len(set(var.states)) != var.card:
            issues.append(ValidationIssue("arity", var.name, "duplicate state labels"))

    for name, node in network.nodes.items():
        if name != node.variable:
            issues.append(ValidationIssue("reference", name, "node key differs from its variable"))
        if node.variable not in network.variables:
            issues.append(ValidationIssue("unknown-variable", name, "no such variable"))
            continue
        missing = [p for p in node.parents if p not in network.variables]
        if missing:
            issues.append(
                ValidationIssue("unknown-parent", name, f"unknown parents: {', '.join(missing)}")
            )
            continue
        if isinstance(node, NoisyOrNode):
            if len(node.activation) != len(node.parents):
                issues.append(
                    ValidationIssue("arity", name, "one activation probability per parent required")
                )
            if network.card(node.variable) != 2:
                issues.append(ValidationIssue("arity", name, "noisy-OR variable must be binary"))
            for p in node.parents:
                if network.card(p) != 2:
                    issues.append(ValidationIssue("arity", name, f"noisy-OR parent {p!r} must be binary"))
            if not all(0.0 <= a <= 1.0 for a in node.activation):
                issues.append(ValidationIssue("normalization", name, "activations must be in [0,1]"))
            if not 0.0 <= node.leak < 1.0:
                issues.append(ValidationIssue("normalization", name, "leak must be in [0,1)"))
        else:
            expected_rows = 1
            for p in node.parents:
                expected_rows *= network.card(p)
            if len(node.rows) != expected_rows:
                issues.append(
                    ValidationIssue(
                        "arity", name, f"expected {expected_rows} rows, found {len(node.rows)}"
                    )
                )
            else:
                width = network.card(node.variable)
                for idx, row in enumerate(node.rows):
                    if len(row) != width:
                        issues.append(
                            ValidationIssue("arity", name, f"row {idx} has {len(row)} entries, expected {width}")
                        )
                        continue
                    if any(p < 0 or p > 1 for p in row):
                        issues.append(
                            ValidationIssue("normalization", name, f"row {idx} has entries outside [0,1]")
                        )
                    total = sum(row)
                    if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                        issues.append(
                            ValidationIssue("normalization", name, f"row {idx} sums to {total!r}, not 1")
                        )

    for name in network.variables:
        if name not in network.nodes:
            issues.append(ValidationIssue("missing-node", name, "variable has no CPT or noisy-OR node"))

    issues.extend(_cycle_issues(network))

    if network.assistance is not None:
        if network.assistance not in network.variables:
            issues.append(
                ValidationIssue("reference", network.assistance, "assistance variable does not exist")
            )
        elif network.card(network.assistance) != 2:
            issues.append(
                ValidationIssue("arity", network.assistance, "assistance variable must be binary")
            )

    return issues


def _cycle_issues(network: Network) -> list[ValidationIssue]:
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(name: str, stack: list[str]) -> list[str] | None:
        mark = state.get(name)
        if mark == 1:
            return None
        if mark == 0:
            return stack[stack.index(name):] + [name]
        state[name] = 0
        stack.append(name)
        node = network.nodes.get(name)
        if node is not None:
            for parent in node.parents:
                if parent in network.variables:
                    cycle = visit(parent, stack)
                    if cycle:
                        return cycle
        stack.pop()
        state[name] = 1
        return None

    for name in network.variables:
        cycle = visit(name, [])
        if cycle:
            return [ValidationIssue("cycle", cycle[0], "dependency cycle: " + " -> ".join(cycle))]
    return []


def expand_noisy_or(node: NoisyOrNode) -> CptNode:
    """Tabulate a noisy-OR node: an active cause i fails to fire the effect
    with probability 1 - activation[i]; the leak fires it regardless.

    Parents are binary (validated), so rows enumerate all active/inactive
    combinations lexicographically.
    """
    rows = []
    for config in itertools.product((0, 1), repeat=len(node.parents)):
        miss = 1.0 - node.leak
        for i, state_idx in enumerate(config):
            if state_idx == 0:  # positive state first = active cause
                miss *= 1.0 - node.activation[i]
        p_true = 1.0 - miss
        rows.append((p_true, 1.0 - p_true))
    return CptNode(variable=node.variable, parents=node.parents, rows=tuple(rows))


def most_probable(posterior: Posterior, variable: str, k: int) -> list[tuple[str, float]]:
    """Top-k states by probability, descending; ties keep state order."""
    if variable not in posterior:
        raise UnknownVariable(f"posterior has no variable {variable!r}")
    dist = posterior[variable]
    ranked = sorted(enumerate(dist.items()), key=lambda item: (-item[1][1], item[0]))
    return [(state, p) for _, (state, p) in ranked[: max(k, 0)]]
