import itertools
import random

import pytest

from helpsense.bayes import (
    CptNode,
    Network,
    NoisyOrNode,
    Variable,
    expand_noisy_or,
    infer,
    most_probable,
    validate,
)
from helpsense.errors import InconsistentEvidence, UnknownVariable
from oracles import enumerate_posterior, random_network


def chain_network():
    return Network(
        variables={
            "G": Variable("G", ("t", "f"), "goal"),
            "E": Variable("E", ("t", "f"), "observation"),
        },
        nodes={
            "G": CptNode("G", (), ((0.3, 0.7),)),
            "E": CptNode("E", ("G",), ((0.8, 0.2), (0.1, 0.9))),
        },
    )


class TestValidate:
    def test_proper_chain_is_ok(self):
        assert validate(chain_network()) == []

    def test_self_parent_is_cycle(self):
        net = Network(
            variables={"A": Variable("A", ("x", "y"))},
            nodes={"A": CptNode("A", ("A",), ((0.5, 0.5), (0.5, 0.5)))},
        )
        assert any(issue.code == "cycle" for issue in validate(net))

    def test_bad_row_sum_names_node_and_row(self):
        net = chain_network()
        net.nodes["E"] = CptNode("E", ("G",), ((0.8, 0.1), (0.1, 0.9)))
        issues = validate(net)
        assert any(i.code == "normalization" and i.node == "E" and "row 0" in i.message for i in issues)

    def test_missing_node_reported(self):
        net = Network(variables={"A": Variable("A", ("x", "y"))}, nodes={})
        assert any(i.code == "missing-node" for i in validate(net))

    def test_noisy_or_arity(self):
        net = Network(
            variables={
                "A": Variable("A", ("t", "f")),
                "B": Variable("B", ("t", "f")),
            },
            nodes={
                "A": CptNode("A", (), ((0.5, 0.5),)),
                "B": NoisyOrNode("B", ("A",), (0.5, 0.9)),
            },
        )
        assert any(i.code == "arity" and i.node == "B" for i in validate(net))


class TestExpandNoisyOr:
    def test_two_parents_product(self):
        node = NoisyOrNode("E", ("A", "B"), (0.5, 0.5), leak=0.0)
        rows = expand_noisy_or(node).rows
        assert rows[0][0] == pytest.approx(0.75)  # both causes active
        assert rows[3][0] == 0.0  # no active cause, no leak

    def test_leak_fires_without_causes(self):
        node = NoisyOrNode("E", ("A",), (0.4,), leak=0.15)
        rows = expand_noisy_or(node).rows
        assert rows[1][0] == pytest.approx(0.15)

    def test_exhaustive_configurations_match_formula(self):
        rng = random.Random(5)
        for n_parents in range(0, 7):
            activation = tuple(rng.random() for _ in range(n_parents))
            leak = rng.random() * 0.5
            node = NoisyOrNode("E", tuple(f"p{i}" for i in range(n_parents)), activation, leak)
            rows = expand_noisy_or(node).rows
            for idx, config in enumerate(itertools.product((0, 1), repeat=n_parents)):
                expected = 1.0 - (1.0 - leak) * _prod(
                    1.0 - activation[i] for i in range(n_parents) if config[i] == 0
                )
                assert abs(rows[idx][0] - expected) <= 1e-15
                assert abs(rows[idx][0] + rows[idx][1] - 1.0) <= 1e-15


def _prod(values):
    out = 1.0
    for v in values:
        out *= v
    return out


class TestInfer:
    def test_bayes_rule_chain(self):
        post = infer(chain_network(), {"E": "t"}, ["G"])
        assert post["G"]["t"] == pytest.approx(0.24 / 0.31, abs=1e-12)

    def test_no_evidence_returns_priors(self):
        post = infer(chain_network(), {}, ["G", "E"])
        assert post["G"]["t"] == pytest.approx(0.3, abs=1e-12)
        assert post["E"]["t"] == pytest.approx(0.3 * 0.8 + 0.7 * 0.1, abs=1e-12)

    def test_deterministic_cpt_pins_posterior(self):
        net = chain_network()
        net.nodes["E"] = CptNode("E", ("G",), ((0.8, 0.2), (0.0, 1.0)))
        post = infer(net, {"E": "t"}, ["G"])
        assert post["G"]["t"] == pytest.approx(1.0, abs=1e-12)

    def test_zero_probability_evidence_raises(self):
        net = chain_network()
        net.nodes["E"] = CptNode("E", ("G",), ((0.0, 1.0), (0.0, 1.0)))
        with pytest.raises(InconsistentEvidence):
            infer(net, {"E": "t"}, ["G"])

    def test_unknown_names_raise(self):
        with pytest.raises(UnknownVariable):
            infer(chain_network(), {"nope": "t"}, ["G"])
        with pytest.raises(UnknownVariable):
            infer(chain_network(), {"E": "maybe"}, ["G"])
        with pytest.raises(UnknownVariable):
            infer(chain_network(), {}, ["nope"])

    def test_matches_enumeration_on_random_networks(self):
        rng = random.Random(17)
        for _ in range(60):
            net, evidence = random_network(rng)
            query = list(net.variables)
            got = infer(net, evidence, query)
            expected = enumerate_posterior(net, evidence, query)
            for var in query:
                for state, p in got[var].items():
                    assert abs(p - expected[var][state]) < 1e-9

    def test_posterior_invariant_under_noisy_or_expansion(self):
        rng = random.Random(29)
        done = 0
        for _ in range(80):
            net, evidence = random_network(rng)
            noisy = [n for n in net.nodes.values() if isinstance(n, NoisyOrNode)]
            if not noisy:
                continue
            done += 1
            expanded = net
            for node in noisy:
                expanded = expanded.with_node(expand_noisy_or(node))
            query = list(net.variables)
            a = infer(net, evidence, query)
            b = infer(expanded, evidence, query)
            for var in query:
                for state in a[var]:
                    assert abs(a[var][state] - b[var][state]) <= 1e-12
        assert done > 5

    def test_posterior_invariant_under_node_reordering(self):
        rng = random.Random(41)
        net, evidence = random_network(rng, max_nodes=6)
        names = list(net.variables)
        rng.shuffle(names)
        reordered = Network(
            variables={n: net.variables[n] for n in names},
            nodes={n: net.nodes[n] for n in names},
            assistance=net.assistance,
        )
        query = list(net.variables)
        a = infer(net, evidence, query)
        b = infer(reordered, evidence, query)
        for var in query:
            for state in a[var]:
                assert abs(a[var][state] - b[var][state]) <= 1e-12

    def test_posterior_rows_normalized(self):
        rng = random.Random(53)
        for _ in range(20):
            net, evidence = random_network(rng)
            post = infer(net, evidence, list(net.variables))
            for dist in post.values():
                assert abs(sum(dist.values()) - 1.0) <= 1e-9
                assert all(0.0 <= p <= 1.0 for p in dist.values())


class TestMostProbable:
    POST = {"needs": {"a": 0.5, "b": 0.3, "c": 0.2}}

    def test_top_k(self):
        assert most_probable(self.POST, "needs", 2) == [("a", 0.5), ("b", 0.3)]

    def test_k_beyond_state_count(self):
        assert len(most_probable(self.POST, "needs", 10)) == 3

    def test_tie_breaks_by_state_index(self):
        assert most_probable({"v": {"a": 0.5, "b": 0.5}}, "v", 1) == [("a", 0.5)]
        assert most_probable({"v": {"b": 0.5, "a": 0.5}}, "v", 1) == [("b", 0.5)]

    def test_unknown_variable(self):
        with pytest.raises(UnknownVariable):
            most_probable(self.POST, "other", 1)
