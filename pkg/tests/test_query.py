import math
import random

import pytest

from helpsense.errors import DegenerateFusion, FormatError
from helpsense.query import (
    FusionWeights,
    TermModel,
    fuse,
    infer_from_terms,
    load_terms_text,
    smooth,
    tokenize,
)


def two_goal_model(p_g1=0.9, p_g2=0.1):
    return TermModel(
        goals=("g1", "g2"),
        priors={"g1": 0.5, "g2": 0.5},
        likelihoods={
            "print": {"g1": p_g1, "g2": p_g2},
            "flat": {"g1": 0.4, "g2": 0.4},
            "chart": {"g1": 0.05, "g2": 0.7},
        },
    )


class TestTokenize:
    VOCAB = frozenset({"print", "chart"})

    def test_membership_filter(self):
        assert tokenize("How do I print?", self.VOCAB) == {"print"}

    def test_empty(self):
        assert tokenize("", self.VOCAB) == set()

    def test_case_fold_and_dedup(self):
        assert tokenize("PRINT print", self.VOCAB) == {"print"}

    def test_split_on_non_alphanumerics(self):
        assert tokenize("print;chart-stuff", self.VOCAB) == {"print", "chart"}


class TestInferFromTerms:
    def test_empty_terms_return_prior(self):
        model = two_goal_model()
        assert infer_from_terms([], model) == {"g1": 0.5, "g2": 0.5}

    def test_single_term_hand_normalization(self):
        model = two_goal_model()
        got = infer_from_terms({"print"}, model)
        assert got["g1"] == pytest.approx(0.9 / (0.9 + 0.1), abs=1e-12)
        assert got["g2"] == pytest.approx(0.1 / (0.9 + 0.1), abs=1e-12)

    def test_uninformative_term_keeps_prior(self):
        model = two_goal_model()
        got = infer_from_terms({"flat"}, model)
        assert got["g1"] == pytest.approx(0.5, abs=1e-12)

    def test_order_independence(self):
        model = two_goal_model()
        a = infer_from_terms(["print", "chart"], model)
        b = infer_from_terms(["chart", "print"], model)
        assert a == b

    def test_log_space_survives_many_terms(self):
        goals = ("g1", "g2")
        likelihoods = {f"w{i}": {"g1": 0.001, "g2": 0.002} for i in range(300)}
        model = TermModel(goals=goals, priors={"g1": 0.5, "g2": 0.5}, likelihoods=likelihoods)
        got = infer_from_terms(set(likelihoods), model)
        assert math.isfinite(got["g1"]) and abs(sum(got.values()) - 1.0) <= 1e-9
        assert got["g2"] > got["g1"]


class TestFuse:
    def test_weighted_multiplication_hand_case(self):
        got = fuse({"a": 0.5, "b": 0.5}, {"a": 0.8, "b": 0.2})
        assert got["a"] == pytest.approx(0.4 / 0.5, abs=1e-12)
        assert got["b"] == pytest.approx(0.1 / 0.5, abs=1e-12)

    def test_zero_word_weight_is_identity(self):
        p_actions = {"a": 0.3, "b": 0.7}
        got = fuse(p_actions, {"a": 0.0, "b": 1.0}, FusionWeights(actions=1, words=0))
        assert got["a"] == pytest.approx(0.3, abs=1e-12)

    def test_uniform_words_cancel(self):
        p_actions = {"a": 0.25, "b": 0.75}
        got = fuse(p_actions, {"a": 0.5, "b": 0.5})
        assert got["a"] == pytest.approx(0.25, abs=1e-12)

    def test_degenerate_product_raises(self):
        with pytest.raises(DegenerateFusion):
            fuse({"a": 1.0, "b": 0.0}, {"a": 0.0, "b": 1.0})

    def test_unit_weights_reproduce_each_side(self):
        p_a = {"a": 0.2, "b": 0.8}
        p_w = {"a": 0.6, "b": 0.4}
        only_actions = fuse(p_a, p_w, FusionWeights(1, 0))
        only_words = fuse(p_a, p_w, FusionWeights(0, 1))
        for k in p_a:
            assert only_actions[k] == pytest.approx(p_a[k], abs=1e-12)
            assert only_words[k] == pytest.approx(p_w[k], abs=1e-12)

    def test_properties_randomized(self):
        rng = random.Random(19)
        for _ in range(200):
            n = rng.randint(2, 6)
            keys = [f"g{i}" for i in range(n)]

            def rand_dist():
                raw = [rng.random() + 1e-6 for _ in keys]
                total = sum(raw)
                return {k: v / total for k, v in zip(keys, raw)}

            p_a, p_w = rand_dist(), rand_dist()
            w = FusionWeights(rng.random() * 3 + 0.01, rng.random() * 3 + 0.01)
            fused = fuse(p_a, p_w, w)
            assert abs(sum(fused.values()) - 1.0) <= 1e-9
            # symmetric under swapping the (distribution, weight) pairs
            swapped = fuse(p_w, p_a, FusionWeights(w.words, w.actions))
            for k in keys:
                assert fused[k] == pytest.approx(swapped[k], abs=1e-12)
            # positive weight scaling preserves the argmax
            c = rng.random() * 4 + 0.1
            scaled = fuse(p_a, p_w, FusionWeights(w.actions * c, w.words * c))
            argmax = max(fused, key=fused.get)
            assert max(scaled, key=scaled.get) == argmax


class TestTermsFile:
    def test_load_and_smooth(self):
        model = load_terms_text(
            "goal g1 prior 0.5\n"
            "goal g2 prior 0.5\n"
            "term print g1:0.9\n"
        )
        assert model.goals == ("g1", "g2")
        assert model.likelihoods["print"]["g1"] == pytest.approx(smooth(0.9))
        assert model.likelihoods["print"]["g2"] == pytest.approx(smooth(0.0))
        assert 0.0 < model.likelihoods["print"]["g2"] < 1.0

    def test_priors_must_sum_to_one(self):
        with pytest.raises(FormatError):
            load_terms_text("goal g1 prior 0.5\ngoal g2 prior 0.2\nterm w g1:0.5\n")

    def test_unknown_goal_rejected(self):
        with pytest.raises(FormatError):
            load_terms_text("goal g1 prior 1.0\nterm w mystery:0.5\n")

    def test_bad_lines_carry_numbers(self):
        with pytest.raises(FormatError) as err:
            load_terms_text("goal g1 prior 1.0\nterm broken\n")
        assert err.value.line == 2

    def test_smoothing_keeps_single_term_fusable(self):
        model = load_terms_text(
            "goal g1 prior 0.5\ngoal g2 prior 0.5\nterm print g1:1.0\n"
        )
        words = infer_from_terms({"print"}, model)
        fused = fuse({"g1": 0.0 + 1e-12, "g2": 1.0}, words)
        assert abs(sum(fused.values()) - 1.0) <= 1e-9
