import random

import pytest

from helpsense.controller import (
    AssistanceConfig,
    AugmentedPulsed,
    Deferred,
    EventDriven,
    Pulsed,
    SessionTracker,
    UtilityTable,
    decide,
    effective_threshold,
    format_policy,
    parse_policy,
    record_cycle,
    session_summary,
    should_run_cycle,
)
from helpsense.errors import DegenerateUtility, FormatError


class TestShouldRunCycle:
    def test_pulsed_waits_for_interval(self):
        assert not should_run_cycle(Pulsed(2000), now=3000, last_run=2000, batch=())
        assert should_run_cycle(Pulsed(2000), now=4000, last_run=2000, batch=())

    def test_event_driven_fires_on_trigger(self):
        policy = EventDriven(frozenset({"menu_surfing"}))
        assert should_run_cycle(policy, 10, 0, ["scroll", "menu_surfing"])
        assert not should_run_cycle(policy, 10, 0, ["scroll"])

    def test_augmented_either_path(self):
        policy = AugmentedPulsed(2000, frozenset({"undo"}))
        assert should_run_cycle(policy, 2000, 0, [])
        assert should_run_cycle(policy, 100, 0, ["undo"])
        assert not should_run_cycle(policy, 100, 0, ["scroll"])

    def test_deferred_requires_idle(self):
        policy = Deferred(2000, 1000)
        # 3s elapsed but the last event was 0.5s ago: not idle
        assert not should_run_cycle(policy, 3000, 0, [], last_event_at=2500)
        assert should_run_cycle(policy, 3000, 0, [], last_event_at=2000)
        assert should_run_cycle(policy, 3000, 0, [], last_event_at=None)


class TestEffectiveThreshold:
    def test_symmetric_utilities_cross_at_half(self):
        config = AssistanceConfig(utility=UtilityTable(1, 0, 0, 1))
        assert effective_threshold(config) == pytest.approx(0.5, abs=1e-12)

    def test_interruption_twice_as_costly(self):
        config = AssistanceConfig(utility=UtilityTable(1, 0, -1, 1))
        # benefit when needed = 1, cost when not = 2 -> p* = 2/3
        assert effective_threshold(config) == pytest.approx(2 / 3, abs=1e-12)

    def test_passthrough_without_table(self):
        assert effective_threshold(AssistanceConfig(threshold=0.6)) == 0.6

    def test_degenerate_table(self):
        with pytest.raises(DegenerateUtility):
            effective_threshold(AssistanceConfig(utility=UtilityTable(0, 0, 0, 0)))

    def test_indifference_identity(self):
        rng = random.Random(71)
        for _ in range(200):
            u = UtilityTable(*(rng.uniform(-5, 5) for _ in range(4)))
            config = AssistanceConfig(utility=u)
            try:
                p_star = effective_threshold(config)
            except DegenerateUtility:
                continue
            if p_star in (0.0, 1.0):
                continue  # clamped: indifference point lies outside [0,1]
            eu_offer = p_star * u.offer_need + (1 - p_star) * u.offer_no_need
            eu_quiet = p_star * u.quiet_need + (1 - p_star) * u.quiet_no_need
            assert abs(eu_offer - eu_quiet) <= 1e-12


class TestDecide:
    def topics(self):
        return [("chart", 0.5), ("print", 0.3), ("format", 0.2)]

    def test_offer_when_threshold_met(self):
        tracker = SessionTracker()
        decision = decide(self.topics(), 0.7, AssistanceConfig(threshold=0.6, top_k=2), tracker)
        assert decision.action == "offer" and decision.reason == "offered"
        assert decision.topics == (("chart", 0.5), ("print", 0.3))
        assert tracker.last_offered_argmax == "chart"

    def test_identical_posterior_suppressed(self):
        tracker = SessionTracker()
        config = AssistanceConfig(threshold=0.6)
        first = decide(self.topics(), 0.7, config, tracker)
        second = decide(self.topics(), 0.9, config, tracker)
        assert first.action == "offer"
        assert second.action == "quiet" and second.reason == "suppressed"

    def test_argmax_change_reopens_offers(self):
        tracker = SessionTracker()
        config = AssistanceConfig(threshold=0.6)
        decide(self.topics(), 0.7, config, tracker)
        moved = [("print", 0.6), ("chart", 0.4)]
        decision = decide(moved, 0.7, config, tracker)
        assert decision.action == "offer"

    def test_below_threshold_quiet(self):
        decision = decide(self.topics(), 0.5, AssistanceConfig(threshold=0.6), SessionTracker())
        assert decision.action == "quiet" and decision.reason == "threshold-not-met"

    def test_never_offers_below_effective_threshold(self):
        rng = random.Random(83)
        for _ in range(300):
            tracker = SessionTracker()
            if rng.random() < 0.5:
                tracker.last_offered_argmax = rng.choice(["chart", "print", None])
            config = AssistanceConfig(threshold=rng.random())
            p_help = rng.random()
            decision = decide(self.topics(), p_help, config, tracker)
            if decision.action == "offer":
                assert p_help >= effective_threshold(config)

    def test_at_most_one_offer_without_argmax_change(self):
        tracker = SessionTracker()
        config = AssistanceConfig(threshold=0.1)
        offers = sum(
            decide(self.topics(), 0.9, config, tracker).action == "offer" for _ in range(5)
        )
        assert offers == 1


class TestTrackerAndSummary:
    def test_record_exceedances(self):
        tracker = SessionTracker()
        record_cycle(tracker, [("chart", 0.4), ("print", 0.2)], offline_threshold=0.3)
        assert tracker.exceedance == {"chart": 1}

    def test_all_below_threshold_unchanged(self):
        tracker = SessionTracker()
        record_cycle(tracker, [("chart", 0.1)], offline_threshold=0.3)
        assert tracker.exceedance == {}

    def test_two_above_both_counted(self):
        tracker = SessionTracker()
        record_cycle(tracker, [("chart", 0.5), ("print", 0.4)], offline_threshold=0.3)
        assert tracker.exceedance == {"chart": 1, "print": 1}

    def test_summary_excludes_reviewed(self):
        tracker = SessionTracker(exceedance={"chart": 5, "print": 2}, reviewed={"print"})
        assert session_summary(tracker, 3) == [("chart", 5)]

    def test_summary_empty_cases(self):
        assert session_summary(SessionTracker(), 3) == []
        tracker = SessionTracker(exceedance={"a": 1}, reviewed={"a"})
        assert session_summary(tracker, 3) == []

    def test_summary_order_and_cap(self):
        tracker = SessionTracker(exceedance={"b": 3, "a": 3, "c": 9, "d": 1})
        got = session_summary(tracker, 3)
        assert got == [("c", 9), ("a", 3), ("b", 3)]
        assert all(name not in tracker.reviewed for name, _ in got)


class TestPolicyParsing:
    def test_round_trip(self):
        for spec in ("pulsed:2s", "event:a,b", "augmented:1500ms:undo", "deferred:2s:1s"):
            assert format_policy(parse_policy(spec)) == spec

    def test_bad_specs(self):
        for spec in ("pulsed", "pulsed:zero", "event:", "deferred:2s", "mystery:1s"):
            with pytest.raises(FormatError):
                parse_policy(spec)
