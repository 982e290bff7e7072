import random

import pytest

from helpsense.bayes import CptNode, Network, NoisyOrNode, Variable, infer
from helpsense.bayes.textio import load_network
from helpsense.errors import MissingAssistanceVariable, UnitMismatch, UnknownVariable
from helpsense.temporal import (
    DecaySpec,
    TemporalFinding,
    TemporalObservationSpec,
    build_instant_model,
    decayed_probability,
    infer_needs,
)
from conftest import EXAMPLE_BUNDLE
from oracles import enumerate_posterior


class TestDecayedProbability:
    def test_half_life_midpoint(self):
        spec = DecaySpec("exponential", horizon=0, parameter=10, units="actions")
        assert decayed_probability(0.9, 0.1, 10, spec) == pytest.approx(0.5, abs=1e-12)

    def test_endpoints(self):
        spec = DecaySpec("exponential", horizon=0, parameter=10, units="actions")
        assert decayed_probability(0.9, 0.1, 0, spec) == 0.9
        assert decayed_probability(0.9, 0.1, 1e9, spec) == pytest.approx(0.1, abs=1e-9)

    def test_linear_interpolation(self):
        spec = DecaySpec("linear", horizon=5, parameter=10, units="actions")
        assert decayed_probability(0.8, 0.2, 10, spec) == pytest.approx(0.5, abs=1e-12)
        assert decayed_probability(0.8, 0.2, 15, spec) == pytest.approx(0.2, abs=1e-12)
        assert decayed_probability(0.8, 0.2, 40, spec) == pytest.approx(0.2, abs=1e-12)

    def test_step_drops_after_horizon(self):
        spec = DecaySpec("step", horizon=4, units="seconds")
        assert decayed_probability(0.7, 0.2, 4, spec) == 0.7
        assert decayed_probability(0.7, 0.2, 4.0001, spec) == 0.2

    def test_horizon_preserves_immediate(self):
        spec = DecaySpec("exponential", horizon=6, parameter=3, units="seconds")
        for age in (0, 3, 6):
            assert decayed_probability(0.9, 0.1, age, spec) == 0.9

    def test_randomized_monotone_and_clamped(self):
        rng = random.Random(13)
        for _ in range(200):
            p_imm, p_stale = rng.random(), rng.random()
            shape = rng.choice(("step", "linear", "exponential"))
            spec = DecaySpec(
                shape,
                horizon=rng.random() * 10,
                parameter=None if shape == "step" else rng.random() * 20 + 0.1,
                units="actions",
            )
            ages = sorted(rng.random() * 80 for _ in range(12))
            values = [decayed_probability(p_imm, p_stale, a, spec) for a in ages]
            lo, hi = min(p_imm, p_stale), max(p_imm, p_stale)
            assert all(lo <= v <= hi for v in values)
            gaps = [values[i] - values[i + 1] for i in range(len(values) - 1)]
            if p_imm >= p_stale:
                assert all(g >= -1e-12 for g in gaps)  # monotone toward stale
            else:
                assert all(g <= 1e-12 for g in gaps)

    def test_equal_endpoints_constant(self):
        spec = DecaySpec("exponential", horizon=1, parameter=2, units="seconds")
        for age in (0, 1, 5, 50):
            assert decayed_probability(0.4, 0.4, age, spec) == 0.4


def observation_net():
    net = Network(
        variables={
            "G": Variable("G", ("t", "f"), "goal"),
            "H": Variable("H", ("yes", "no"), "need"),
            "E": Variable("E", ("present", "absent"), "observation"),
        },
        nodes={
            "G": CptNode("G", (), ((0.4, 0.6),)),
            "H": CptNode("H", ("G",), ((0.7, 0.3), (0.2, 0.8))),
            "E": CptNode("E", ("H",), ((0.8, 0.2), (0.1, 0.9))),
        },
        assistance="H",
    )
    spec = TemporalObservationSpec(
        variable="E",
        units="actions",
        immediate=(0.8, 0.1),
        stale=(0.3, 0.05),
        decay=(
            DecaySpec("exponential", horizon=2, parameter=4, units="actions"),
            DecaySpec("exponential", horizon=2, parameter=4, units="actions"),
        ),
    )
    return net, {"E": spec}


class TestBuildInstantModel:
    def test_age_zero_keeps_base_rows(self):
        net, specs = observation_net()
        instant, evidence = build_instant_model(
            net, specs, [TemporalFinding("E", True, age=0, units="actions")]
        )
        assert instant.nodes["E"].rows == net.nodes["E"].rows
        assert evidence == {"E": "present"}

    def test_age_zero_posterior_equals_plain_evidence(self):
        net, specs = observation_net()
        instant, evidence = build_instant_model(
            net, specs, [TemporalFinding("E", True, age=0, units="actions")]
        )
        aged = infer(instant, evidence, ["G", "H"])
        plain = infer(net, {"E": "present"}, ["G", "H"])
        for var in ("G", "H"):
            for state in aged[var]:
                assert abs(aged[var][state] - plain[var][state]) <= 1e-12

    def test_infinite_age_equals_stale_substitution_oracle(self):
        net, specs = observation_net()
        instant, evidence = build_instant_model(
            net, specs, [TemporalFinding("E", True, age=1e9, units="actions")]
        )
        got = infer(instant, evidence, ["G", "H"])
        # oracle: hand-substitute the stale rows and enumerate
        stale_net = net.with_node(CptNode("E", ("H",), ((0.3, 0.7), (0.05, 0.95))))
        expected = enumerate_posterior(stale_net, {"E": "present"}, ["G", "H"])
        for var in ("G", "H"):
            for state in got[var]:
                assert abs(got[var][state] - expected[var][state]) <= 1e-12

    def test_absent_asserts_false_against_stale_rows(self):
        net, specs = observation_net()
        instant, evidence = build_instant_model(net, specs, [TemporalFinding("E", None, units="actions")])
        assert evidence == {"E": "absent"}
        assert instant.nodes["E"].rows[0][0] == pytest.approx(0.3)

    def test_two_findings_match_enumeration(self):
        net, specs = observation_net()
        net = Network(
            variables={**net.variables, "E2": Variable("E2", ("present", "absent"), "observation")},
            nodes={**net.nodes, "E2": CptNode("E2", ("G",), ((0.6, 0.4), (0.2, 0.8)))},
            assistance="H",
        )
        specs = dict(specs)
        specs["E2"] = TemporalObservationSpec(
            variable="E2",
            units="actions",
            immediate=(0.6, 0.2),
            stale=(0.25, 0.1),
            decay=(
                DecaySpec("linear", horizon=0, parameter=6, units="actions"),
                DecaySpec("linear", horizon=0, parameter=6, units="actions"),
            ),
        )
        findings = [
            TemporalFinding("E", True, age=3, units="actions"),
            TemporalFinding("E2", True, age=2, units="actions"),
        ]
        instant, evidence = build_instant_model(net, specs, findings)
        got = infer(instant, evidence, ["G", "H"])
        expected = enumerate_posterior(instant, evidence, ["G", "H"])
        for var in ("G", "H"):
            for state in got[var]:
                assert abs(got[var][state] - expected[var][state]) <= 1e-12

    def test_noisy_or_decays_each_cause_independently(self):
        net = Network(
            variables={
                "A": Variable("A", ("t", "f"), "need"),
                "B": Variable("B", ("t", "f")),
                "E": Variable("E", ("present", "absent"), "observation"),
            },
            nodes={
                "A": CptNode("A", (), ((0.5, 0.5),)),
                "B": CptNode("B", (), ((0.5, 0.5),)),
                "E": NoisyOrNode("E", ("A", "B"), (0.8, 0.6), leak=0.1),
            },
            assistance="A",
        )
        half = DecaySpec("exponential", horizon=0, parameter=5, units="actions")
        spec = TemporalObservationSpec(
            variable="E",
            units="actions",
            immediate=(0.8, 0.6),
            stale=(0.2, 0.1),
            decay=(half, half),
            noisy_or=True,
            leak=0.1,
        )
        instant, evidence = build_instant_model(
            net, {"E": spec}, [TemporalFinding("E", True, age=5, units="actions")]
        )
        node = instant.nodes["E"]
        assert isinstance(node, NoisyOrNode)
        assert node.activation[0] == pytest.approx(0.5, abs=1e-12)  # midpoint of 0.8 -> 0.2
        assert node.activation[1] == pytest.approx(0.35, abs=1e-12)  # midpoint of 0.6 -> 0.1
        assert node.leak == 0.1
        assert evidence == {"E": "present"}

    def test_unit_mismatch_and_unknown_variable(self):
        net, specs = observation_net()
        with pytest.raises(UnitMismatch):
            build_instant_model(net, specs, [TemporalFinding("E", True, age=1, units="seconds")])
        with pytest.raises(UnknownVariable):
            build_instant_model(net, specs, [TemporalFinding("X", True, age=1, units="actions")])


class TestInferNeeds:
    def test_no_findings_returns_priors(self):
        net, _ = observation_net()
        posterior, p_help = infer_needs(net, {}, {})
        expected = enumerate_posterior(net, {}, ["G", "H"])
        assert abs(p_help - expected["H"]["yes"]) <= 1e-12
        assert abs(posterior["G"]["t"] - expected["G"]["t"]) <= 1e-12

    def test_missing_assistance_variable(self):
        net, _ = observation_net()
        bare = Network(variables=net.variables, nodes=net.nodes, assistance=None)
        with pytest.raises(MissingAssistanceVariable):
            infer_needs(bare, {}, {})

    def test_observation_evidence_beats_profile_on_conflict(self):
        net, _ = observation_net()
        posterior, _ = infer_needs(net, {"E": "present"}, {"E": "absent"})
        expected = infer(net, {"E": "present"}, ["G", "H"])
        assert posterior["G"]["t"] == pytest.approx(expected["G"]["t"], abs=1e-12)


@pytest.fixture(scope="module")
def model():
    return load_network(f"{EXAMPLE_BUNDLE}/model.net")


class TestExampleModelDirections:
    """Direction-only properties of the shipped example CPTs, checked against
    the enumeration oracle."""

    def test_fresh_findings_raise_p_help(self, model):
        net, specs = model
        without = enumerate_posterior(net, {}, ["needs_assistance"])["needs_assistance"]["yes"]
        instant, evidence = build_instant_model(
            net,
            specs,
            [
                TemporalFinding("pause_after_activity", True, age=0, units="actions"),
                TemporalFinding("menu_surfing", True, age=0, units="actions"),
            ],
        )
        with_findings = enumerate_posterior(instant, evidence, ["needs_assistance"])[
            "needs_assistance"
        ]["yes"]
        assert with_findings > without

    def test_expert_needs_less_help_than_novice(self, model):
        net, specs = model
        instant, evidence = build_instant_model(
            net, specs, [TemporalFinding("menu_surfing", True, age=0, units="actions")]
        )
        p = {}
        for level in ("novice", "expert"):
            ev = dict(evidence)
            ev["expertise"] = level
            p[level] = enumerate_posterior(instant, ev, ["needs_assistance"])["needs_assistance"]["yes"]
        assert p["expert"] <= p["novice"]
