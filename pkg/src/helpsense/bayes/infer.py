"""Exact posterior marginals by variable elimination.

Factors are dense numpy arrays over small discrete scopes; evidence is
applied by zeroing non-asserted states so the final normalization constant
equals the evidence probability (zero means inconsistent evidence). The
elimination order comes from a min-fill heuristic; correctness never depends
on the order chosen.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import InconsistentEvidence, UnknownVariable
from .model import CptNode, Network, NoisyOrNode, Posterior, expand_noisy_or


@dataclass(frozen=True)
class Factor:
    variables: tuple[str, ...]
    table: np.ndarray  # shape = per-variable cardinalities, in scope order


def _factor_from_node(network: Network, node: CptNode) -> Factor:
    scope = node.parents + (node.variable,)
    shape = tuple(network.card(v) for v in scope)
    table = np.asarray(node.rows, dtype=np.float64).reshape(shape)
    return Factor(scope, table)


def _multiply(a: Factor, b: Factor) -> Factor:
    scope = a.variables + tuple(v for v in b.variables if v not in a.variables)
    a_expanded = a.table.reshape(a.table.shape + (1,) * (len(scope) - len(a.variables)))
    b_axes = [scope.index(v) for v in b.variables]
    b_expanded = np.moveaxis(
        b.table.reshape(b.table.shape + (1,) * (len(scope) - len(b.variables))),
        range(len(b.variables)),
        b_axes,
    )
    return Factor(scope, a_expanded * b_expanded)


def _sum_out(factor: Factor, variable: str) -> Factor:
    axis = factor.variables.index(variable)
    scope = factor.variables[:axis] + factor.variables[axis + 1:]
    return Factor(scope, factor.table.sum(axis=axis))


def _apply_evidence(factor: Factor, evidence_idx: dict[str, int], network: Network) -> Factor:
    table = factor.table
    for axis, var in enumerate(factor.variables):
        if var in evidence_idx:
            mask = np.zeros(network.card(var))
            mask[evidence_idx[var]] = 1.0
            shape = [1] * table.ndim
            shape[axis] = network.card(var)
            table = table * mask.reshape(shape)
    return Factor(factor.variables, table)


def _min_fill_order(factors: list[Factor], eliminate: set[str]) -> list[str]:
    adjacency: dict[str, set[str]] = {}
    for f in factors:
        for v in f.variables:
            adjacency.setdefault(v, set())
            adjacency[v].update(u for u in f.variables if u != v)
    order: list[str] = []
    remaining = set(eliminate)
    while remaining:
        best_var, best_fill = None, None
        for v in sorted(remaining):  # name ties stay deterministic
            neighbors = {u for u in adjacency.get(v, set()) if u != v}
            fill = 0
            ns = sorted(neighbors)
            for i in range(len(ns)):
                for j in range(i + 1, len(ns)):
                    if ns[j] not in adjacency.get(ns[i], set()):
                        fill += 1
            if best_fill is None or fill < best_fill:
                best_var, best_fill = v, fill
        assert best_var is not None
        order.append(best_var)
        remaining.discard(best_var)
        neighbors = {u for u in adjacency.pop(best_var, set()) if u != best_var}
        for u in neighbors:
            adjacency[u].discard(best_var)
            adjacency[u].update(n for n in neighbors if n != u)
    return order


def infer(network: Network, evidence: dict[str, str], query: Iterable[str]) -> Posterior:
    """Exact marginals for the query variables given evidence.

    Raises UnknownVariable for unknown names or states, InconsistentEvidence
    when the asserted evidence has zero probability.
    """
    query_vars = list(dict.fromkeys(query))
    for q in query_vars:
        network.variable(q)
    evidence_idx = {
        var: network.variable(var).state_index(state) for var, state in evidence.items()
    }

    factors: list[Factor] = []
    for node in network.nodes.values():
        cpt = expand_noisy_or(node) if isinstance(node, NoisyOrNode) else node
        factors.append(_apply_evidence(_factor_from_node(network, cpt), evidence_idx, network))

    all_vars = {v for f in factors for v in f.variables}
    to_eliminate = all_vars - set(query_vars)
    for victim in _min_fill_order(factors, to_eliminate):
        involved = [f for f in factors if victim in f.variables]
        if not involved:
            continue
        product = involved[0]
        for f in involved[1:]:
            product = _multiply(product, f)
        factors = [f for f in factors if victim not in f.variables]
        factors.append(_sum_out(product, victim))

    if not factors:
        raise UnknownVariable("nothing to infer: empty network")
    joint = factors[0]
    for f in factors[1:]:
        joint = _multiply(joint, f)
    total = float(joint.table.sum())
    if total <= 0.0:
        raise InconsistentEvidence("evidence has zero probability under the model")

    posterior: Posterior = {}
    for q in query_vars:
        keep = joint
        for v in joint.variables:
            if v != q:
                keep = _sum_out(keep, v)
        dist = np.clip(keep.table / total, 0.0, 1.0)  # shave float dust off [0,1]
        states = network.variable(q).states
        posterior[q] = {s: float(dist[i]) for i, s in enumerate(states)}
    return posterior
