import random

import pytest
from hypothesis import given, strategies as st

from helpsense.errors import LogParseError, OutOfOrderTimestamp
from helpsense.events import (
    AtomicEvent,
    ClockModel,
    EventClass,
    EventQueue,
    classify,
    format_log_line,
    ingest,
    parse_log_line,
    read_log,
    scale_duration,
    window,
    write_log,
)


def ev(symbol, ts, **attrs):
    return AtomicEvent(symbol, ts, dict(attrs))


class TestIngest:
    def test_append_to_empty(self):
        q, clock = EventQueue(), ClockModel()
        ingest(q, ev("menu_open", 0), clock)
        assert len(q) == 1
        assert q.events[0].symbol == "menu_open"

    def test_out_of_order_rejected(self):
        q, clock = EventQueue(), ClockModel()
        ingest(q, ev("a", 5000), clock)
        with pytest.raises(OutOfOrderTimestamp):
            ingest(q, ev("b", 4000), clock)

    def test_fifo_eviction_at_capacity(self):
        q, clock = EventQueue(capacity=2), ClockModel()
        for sym, t in (("a", 0), ("b", 1), ("c", 2)):
            ingest(q, ev(sym, t), clock)
        assert [e.symbol for e in q.events] == ["b", "c"]

    def test_equal_timestamps_accepted(self):
        q, clock = EventQueue(), ClockModel()
        ingest(q, ev("a", 10), clock)
        ingest(q, ev("b", 10), clock)
        assert len(q) == 2

    def test_ewma_rate_tracks_gaps(self):
        q, clock = EventQueue(), ClockModel(smoothing=0.5)
        ingest(q, ev("a", 0), clock)
        assert clock.observed_rate == 0.0
        ingest(q, ev("a", 1000), clock)  # warm start: 1 cmd/s
        assert clock.observed_rate == pytest.approx(1.0)
        ingest(q, ev("a", 1500), clock)  # gap 500ms -> 2 cmd/s, EWMA 0.5
        assert clock.observed_rate == pytest.approx(1.5)

    @given(st.lists(st.integers(min_value=0, max_value=50), min_size=0, max_size=60))
    def test_timestamps_non_decreasing_after_any_ingest(self, gaps):
        q, clock = EventQueue(capacity=16), ClockModel()
        ts = 0
        for gap in gaps:
            ts += gap
            ingest(q, ev("x", ts), clock)
        stamps = [e.timestamp for e in q.events]
        assert stamps == sorted(stamps)
        assert len(q) <= 16


class TestWindow:
    def test_duration_window_matches_filter_oracle(self):
        events = tuple(ev("x", t * 1000) for t in (0, 3, 6, 9))
        got = window(events, now=9000, span=10000)
        expected = tuple(e for e in events if 9000 - 10000 < e.timestamp <= 9000)
        assert got == expected
        assert len(got) == 4

    def test_zero_span_is_empty(self):
        events = tuple(ev("x", t) for t in (0, 5, 9))
        assert window(events, now=9, span=0) == ()

    def test_command_mode_suffix(self):
        events = (ev("a", 0), ev("b", 1), ev("c", 2))
        assert window(events, now=2, span=2, mode="commands") == events[-2:]

    def test_partition_and_monotonicity(self):
        rng = random.Random(7)
        events = []
        ts = 0
        for _ in range(30):
            ts += rng.randint(0, 500)
            events.append(ev(rng.choice("abc"), ts))
        events = tuple(events)
        now = ts + 100
        for span in (0, 50, 400, 2000, 10_000):
            inside = window(events, now, span)
            complement = tuple(e for e in events if e not in inside)
            assert len(inside) + len(complement) == len(events)
        sizes = [len(window(events, now, s)) for s in (0, 100, 500, 2500, 10_000)]
        assert sizes == sorted(sizes)


class TestScaleDuration:
    def test_fast_user_shrinks_window(self):
        clock = ClockModel(reference_rate=1.0, observed_rate=2.0, clamp=4)
        assert scale_duration(10_000, clock) == pytest.approx(5_000)

    def test_reference_rate_is_identity(self):
        clock = ClockModel(reference_rate=0.5, observed_rate=0.5)
        assert scale_duration(10_000, clock) == pytest.approx(10_000)

    def test_clamp_floor(self):
        clock = ClockModel(reference_rate=1.0, observed_rate=100.0, clamp=4)
        assert scale_duration(10_000, clock) == pytest.approx(2_500)

    def test_no_data_passthrough(self):
        assert scale_duration(10_000, ClockModel(observed_rate=0.0)) == 10_000

    def test_monotone_decreasing_in_observed_rate(self):
        clock = ClockModel(reference_rate=1.0, clamp=8)
        values = []
        for rate in (0.25, 0.5, 1.0, 2.0, 4.0):
            clock.observed_rate = rate
            values.append(scale_duration(6_000, clock))
        assert values == sorted(values, reverse=True)
        clock.observed_rate = 1.0
        assert scale_duration(6_000, clock) == pytest.approx(6_000)


class TestClassify:
    FILE_SAVED = EventClass("file_saved", frozenset({"toolbar_save", "key_ctrl_s", "menu_file_save"}))

    def test_member_maps_to_class(self):
        assert classify(ev("toolbar_save", 0), [self.FILE_SAVED]) == {"file_saved"}

    def test_unrelated_symbol_maps_nowhere(self):
        assert classify(ev("scroll", 0), [self.FILE_SAVED]) == set()

    def test_overlapping_classes_both_match(self):
        save_like = EventClass("save_like", frozenset({"toolbar_save", "autosave"}))
        got = classify(ev("toolbar_save", 0), [self.FILE_SAVED, save_like])
        assert got == {"file_saved", "save_like"}

    def test_exact_membership_against_brute_force(self):
        rng = random.Random(3)
        classes = [
            EventClass(f"k{i}", frozenset(rng.sample("abcdefgh", rng.randint(1, 4))))
            for i in range(6)
        ]
        for sym in "abcdefghij":
            expected = {c.name for c in classes if sym in c.members}
            assert classify(ev(sym, 0), classes) == expected


class TestEventLog:
    def test_round_trip(self, tmp_path):
        events = [ev("menu_open", 0), ev("cell_edit", 120, sheet="s1"), ev("scroll", 120)]
        path = tmp_path / "log.txt"
        write_log(str(path), events, header="session-start: test")
        assert read_log(str(path)) == events

    def test_comments_and_blanks_ignored(self):
        assert parse_log_line("# comment", 1) is None
        assert parse_log_line("   ", 2) is None

    def test_bad_lines_carry_line_numbers(self, tmp_path):
        path = tmp_path / "log.txt"
        path.write_text("0 ok\nnot_a_timestamp foo\n", encoding="utf-8")
        with pytest.raises(LogParseError) as err:
            read_log(str(path))
        assert err.value.line == 2

    def test_out_of_order_log_rejected(self, tmp_path):
        path = tmp_path / "log.txt"
        path.write_text("5 a\n3 b\n", encoding="utf-8")
        with pytest.raises(LogParseError) as err:
            read_log(str(path))
        assert err.value.line == 2

    def test_duplicate_attribute_rejected(self):
        with pytest.raises(LogParseError):
            parse_log_line("0 sym k=1 k=2", 1)

    def test_format_line_round_trips(self):
        event = ev("dialog_open", 42, kind="format", id="7")
        assert parse_log_line(format_log_line(event), 1) == event
