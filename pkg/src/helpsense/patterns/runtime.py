"""Compilation and evaluation of pattern programs.

Compilation resolves every target against declared atomic symbols, event
classes, and other filter definitions, then fixes a topological evaluation
order over the definition reference graph.

Evaluation is a pure function of (program, queue snapshot, now, clock).
Positions order occurrences globally: a real event at queue index i has
position (i, 0); a satisfied definition contributes one virtual occurrence at
its most recent match time, positioned after every real event at or before
that time. Sequence elements must advance in both position and timestamp, so
simultaneous events resolve deterministically by queue order.

Semantics notes, fixed here once for the engine and its test oracle:
  - rate/oneof/all/dwell anchor their window at `now`; seq/tightseq may match
    anywhere in the retained history (their age feeds evidence decay).
  - a dwell element's quiet gap starts exactly at the previous matched
    element; a trailing dwell completes at prev + gap and is checked against
    `now`; only real events break quiet gaps or tightness.
  - a modeled-event target contributes its most recent match only, so
    rate thresholds above 1 can never be met by composed events.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from ..errors import CyclicDefinition, DuplicateName, UnknownSymbol
from ..events import AtomicEvent, ClockModel, EventClass, scale_duration
from .syntax import (
    All,
    And,
    AtomicDecl,
    Dwell,
    DwellElement,
    FilterDefinition,
    ModeledEvent,
    Not,
    Oneof,
    Or,
    PatternExpr,
    Rate,
    Seq,
    Span,
    TightSeq,
)

Position = tuple[int, int]
Occurrence = tuple[float, Position]  # (timestamp, position)


def targets_of(expr: PatternExpr) -> list[str]:
    """Every target name the expression references, in syntax order."""
    if isinstance(expr, Rate):
        return [expr.target]
    if isinstance(expr, (Oneof, All)):
        return list(expr.targets)
    if isinstance(expr, (Seq, TightSeq)):
        return [el for el in expr.elements if isinstance(el, str)]
    if isinstance(expr, Dwell):
        return []
    if isinstance(expr, (And, Or)):
        return targets_of(expr.left) + targets_of(expr.right)
    if isinstance(expr, Not):
        return targets_of(expr.operand)
    raise TypeError(f"not a pattern expression: {expr!r}")


@dataclass(frozen=True)
class CompiledProgram:
    filters: tuple[FilterDefinition, ...]  # topological evaluation order
    classes: dict[str, EventClass]
    atomics: frozenset[str]
    statements: tuple  # source order, for printing

    def filter_names(self) -> list[str]:
        return [f.name for f in self.filters]

    def output_names(self) -> list[str]:
        """Non-internal filters, i.e. the observation-mapped outputs."""
        return [f.name for f in self.filters if not f.internal]


def compile_program(statements: list, extra_atomics: tuple[str, ...] = ()) -> CompiledProgram:
    """Resolve references and fix a topological evaluation order.

    Class members implicitly declare atomic symbols. Raises UnknownSymbol for
    unresolved targets, CyclicDefinition for reference cycles, DuplicateName
    for name collisions across atomics, classes, and definitions.
    """
    atomics: set[str] = set(extra_atomics)
    classes: dict[str, EventClass] = {}
    defs: list[FilterDefinition] = []
    for st in statements:
        if isinstance(st, AtomicDecl):
            atomics.update(st.symbols)
        elif isinstance(st, EventClass):
            if st.name in classes or any(d.name == st.name for d in defs):
                raise DuplicateName(f"name {st.name!r} defined twice")
            classes[st.name] = st
            atomics.update(st.members)
        elif isinstance(st, FilterDefinition):
            if st.name in classes or any(d.name == st.name for d in defs):
                raise DuplicateName(f"name {st.name!r} defined twice")
            defs.append(st)
        else:
            raise TypeError(f"not a pattern statement: {st!r}")

    def_names = {d.name for d in defs}
    for name in list(classes) + list(def_names):
        if name in atomics:
            raise DuplicateName(f"name {name!r} collides with an atomic symbol")

    known = atomics | classes.keys() | def_names
    references: dict[str, list[str]] = {}
    for d in defs:
        refs = []
        for target in targets_of(d.expr):
            if target not in known:
                raise UnknownSymbol(f"filter {d.name!r} references unknown target {target!r}")
            if target in def_names:
                refs.append(target)
        references[d.name] = refs

    # Kahn's algorithm, stable by source order.
    indegree = {d.name: 0 for d in defs}
    dependents: dict[str, list[str]] = {d.name: [] for d in defs}
    for d in defs:
        for ref in references[d.name]:
            indegree[d.name] += 1
            dependents[ref].append(d.name)
    order: list[FilterDefinition] = []
    by_name = {d.name: d for d in defs}
    ready = [d.name for d in defs if indegree[d.name] == 0]
    while ready:
        name = ready.pop(0)
        order.append(by_name[name])
        for dep in dependents[name]:
            indegree[dep] -= 1
            if indegree[dep] == 0:
                ready.append(dep)
    if len(order) != len(defs):
        cyclic = sorted(n for n in indegree if indegree[n] > 0)
        raise CyclicDefinition(f"cyclic filter definitions: {', '.join(cyclic)}")

    return CompiledProgram(
        filters=tuple(order),
        classes=dict(classes),
        atomics=frozenset(atomics),
        statements=tuple(statements),
    )


# --- evaluation ---------------------------------------------------------------


class _EvalContext:
    def __init__(
        self,
        program: CompiledProgram,
        events: tuple[AtomicEvent, ...],
        now: float,
        clock: ClockModel,
    ):
        self.program = program
        self.events = events
        self.real_ts = [e.timestamp for e in events]
        self.now = now
        self.clock = clock
        self.scaled = False  # set per filter
        self.virtual: dict[str, Occurrence] = {}
        self._def_names = frozenset(f.name for f in program.filters)
        self._occ_cache: dict[str, list[Occurrence]] = {}

    def effective(self, span: Span) -> float:
        """Span length after scaled time; command spans never scale."""
        if span.mode == "time" and self.scaled:
            return scale_duration(span.amount, self.clock)
        return span.amount

    def occurrences(self, target: str) -> list[Occurrence]:
        if target in self._def_names:
            return [self.virtual[target]] if target in self.virtual else []
        cached = self._occ_cache.get(target)
        if cached is None:
            if target in self.program.classes:
                members = self.program.classes[target].members
                cached = [
                    (float(e.timestamp), (i, 0))
                    for i, e in enumerate(self.events)
                    if e.symbol in members
                ]
            else:
                cached = [
                    (float(e.timestamp), (i, 0))
                    for i, e in enumerate(self.events)
                    if e.symbol == target
                ]
            self._occ_cache[target] = cached
        return cached

    def in_window(self, occ: Occurrence, span: Span) -> bool:
        ts, pos = occ
        if span.mode == "commands":
            cutoff = len(self.events) - int(span.amount)
            return pos[0] >= cutoff
        eff = self.effective(span)
        return self.now - eff < ts <= self.now

    def quiet_after(self, pos: Position, ts: float, gap: float) -> bool:
        """True iff no real event lies after `pos` and before ts + gap."""
        first_real = pos[0] + 1
        if first_real >= len(self.real_ts):
            return True
        return self.real_ts[first_real] >= ts + gap


def _grouped_elements(expr: Seq | TightSeq, ctx: _EvalContext):
    """Fold dwell elements into quiet-gap requirements between event anchors.

    Returns ([(target, gap_before_ms)], trailing_gap_ms); consecutive dwells
    accumulate. The parser guarantees a dwell never leads the sequence.
    """
    groups: list[tuple[str, float]] = []
    pending = 0.0
    for el in expr.elements:
        if isinstance(el, DwellElement):
            pending += ctx.effective(el.span)
        else:
            groups.append((el, pending))
            pending = 0.0
    return groups, pending


def _tight_ok(anchors: list[Occurrence], end_time: float, ctx: _EvalContext) -> bool:
    t_first = anchors[0][0]
    matched_real = {pos[0] for _, pos in anchors if pos[1] == 0}
    for i, ts in enumerate(ctx.real_ts):
        if t_first < ts < end_time and i not in matched_real:
            return False
    return True


def _seq_match(expr: Seq | TightSeq, ctx: _EvalContext) -> float | None:
    """Most recent match end time, or None.

    Searches latest-first with backtracking: the end anchor is tried in
    descending order, earlier anchors likewise, and the first assignment
    satisfying position/timestamp ordering, dwell gaps, the span bound, and
    (for tight sequences) the no-other-events check wins.
    """
    groups, trailing = _grouped_elements(expr, ctx)
    tight = isinstance(expr, TightSeq)
    candidates = [ctx.occurrences(target) for target, _ in groups]
    if any(not c for c in candidates):
        return None
    span_eff = ctx.effective(expr.span) if expr.span.mode == "time" else int(expr.span.amount)

    def complete_ok(anchors: list[Occurrence], end_time: float) -> bool:
        t_first, p_first = anchors[0]
        if expr.span.mode == "time":
            if end_time - t_first > span_eff:
                return False
        else:
            if anchors[-1][1][0] - p_first[0] > span_eff - 1:
                return False
        if tight and not _tight_ok(anchors, end_time, ctx):
            return False
        return True

    def extend(i: int, suffix: list[Occurrence], end_time: float) -> list[Occurrence] | None:
        if i < 0:
            return suffix if complete_ok(suffix, end_time) else None
        t_next, p_next = suffix[0]
        gap = groups[i + 1][1]
        for t, p in reversed(candidates[i]):
            if p >= p_next or t > t_next:
                continue
            if gap > 0:
                if t_next < t + gap or not ctx.quiet_after(p, t, gap):
                    continue
            if expr.span.mode == "time" and end_time - t > span_eff:
                continue
            found = extend(i - 1, [(t, p)] + suffix, end_time)
            if found is not None:
                return found
        return None

    last_candidates = sorted(candidates[-1], key=lambda occ: (occ[0], occ[1]), reverse=True)
    for t_last, p_last in last_candidates:
        if t_last > ctx.now:
            continue
        if trailing > 0:
            if t_last + trailing > ctx.now or not ctx.quiet_after(p_last, t_last, trailing):
                continue
        end_time = t_last + trailing
        if extend(len(groups) - 2, [(t_last, p_last)], end_time) is not None:
            return end_time
    return None


def _eval_expr(expr: PatternExpr, ctx: _EvalContext) -> float | None:
    """Satisfaction time of the most recent match at ctx.now, or None."""
    if isinstance(expr, Rate):
        count = sum(1 for occ in ctx.occurrences(expr.target) if ctx.in_window(occ, expr.span))
        n = expr.threshold
        ok = (
            count >= n if expr.comparator == ">=" else count == n if expr.comparator == "=" else count <= n
        )
        return ctx.now if ok else None
    if isinstance(expr, Oneof):
        best: float | None = None
        for target in expr.targets:
            for occ in ctx.occurrences(target):
                if ctx.in_window(occ, expr.span) and (best is None or occ[0] > best):
                    best = occ[0]
        return best
    if isinstance(expr, All):
        latest: list[float] = []
        for target in expr.targets:
            hits = [occ[0] for occ in ctx.occurrences(target) if ctx.in_window(occ, expr.span)]
            if not hits:
                return None
            latest.append(max(hits))
        return max(latest)
    if isinstance(expr, (Seq, TightSeq)):
        return _seq_match(expr, ctx)
    if isinstance(expr, Dwell):
        eff = ctx.effective(expr.span)
        for ts in ctx.real_ts:
            if ctx.now - eff < ts <= ctx.now:
                return None
        return ctx.now
    if isinstance(expr, And):
        left = _eval_expr(expr.left, ctx)
        if left is None:
            return None
        right = _eval_expr(expr.right, ctx)
        if right is None:
            return None
        return max(left, right)
    if isinstance(expr, Or):
        left = _eval_expr(expr.left, ctx)
        right = _eval_expr(expr.right, ctx)
        if left is None:
            return right
        if right is None:
            return left
        return max(left, right)
    if isinstance(expr, Not):
        return ctx.now if _eval_expr(expr.operand, ctx) is None else None
    raise TypeError(f"not a pattern expression: {expr!r}")


def evaluate(
    program: CompiledProgram,
    snapshot: tuple[AtomicEvent, ...],
    now: float,
    clock: ClockModel,
) -> dict[str, ModeledEvent]:
    """Evaluate every filter against a queue snapshot at time `now`.

    Returns the satisfied filters keyed by name (internal ones included);
    each ModeledEvent carries its most recent match time and age.
    """
    if snapshot and now < snapshot[-1].timestamp:
        raise ValueError(f"evaluation time {now} predates snapshot tail {snapshot[-1].timestamp}")
    ctx = _EvalContext(program, snapshot, now, clock)
    results: dict[str, ModeledEvent] = {}
    for topo_index, filt in enumerate(program.filters):
        ctx.scaled = filt.scaled
        satisfied_at = _eval_expr(filt.expr, ctx)
        if satisfied_at is None:
            continue
        results[filt.name] = ModeledEvent(filt.name, satisfied_at, now - satisfied_at)
        slot = bisect_right(ctx.real_ts, satisfied_at) - 1
        ctx.virtual[filt.name] = (satisfied_at, (slot, 1 + topo_index))
    return results
