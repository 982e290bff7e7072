"""Pipeline assembly: bundles, analysis cycles, deterministic replay.

A model bundle directory holds five files: `model.net` (network + temporal
annotations), `patterns.lel` (filter program), `terms.txt` (query model),
`indicators.txt` (competency rules), and `config.txt` (knobs). Loading
validates everything and aggregates every failure into one report.

A cycle evaluates the filter program on a queue snapshot, converts satisfied
filters into aged findings, builds the instant model, infers needs and the
assistance probability, optionally fuses a free-text query, and runs the
offer decision. Replay drives cycles from log timestamps (virtual time,
never wall clock) and writes one line per cycle with probabilities printed
to 12 significant digits, so identical inputs give byte-identical traces.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace

from . import controller, profile as profile_mod, query as query_mod, temporal
from .bayes.model import Network, Posterior, most_probable, validate
from .bayes.textio import load_network
from .controller import (
    AssistanceConfig,
    AssistanceDecision,
    ControlPolicy,
    SessionTracker,
    parse_duration_ms,
    parse_policy,
    policy_interval,
    policy_triggers,
    should_run_cycle,
)
from .errors import BundleError, EngineError, FormatError
from .events import (
    AtomicEvent,
    ClockModel,
    EventQueue,
    classify,
    ingest,
    read_log,
)
from .patterns import CompiledProgram, ModeledEvent, compile_program, evaluate, parse
from .profile import IndicatorRule, Profile, as_evidence, update as update_profile
from .query import FusionWeights, TermModel, fuse, infer_from_terms, load_terms, tokenize
from .temporal import TemporalFinding, TemporalObservationSpec, build_instant_model, infer_needs

NETWORK_FILE = "model.net"
PATTERNS_FILE = "patterns.lel"
TERMS_FILE = "terms.txt"
RULES_FILE = "indicators.txt"
CONFIG_FILE = "config.txt"
REQUIRED_FILES = (NETWORK_FILE, PATTERNS_FILE, TERMS_FILE, RULES_FILE, CONFIG_FILE)


def _fmt(x: float) -> str:
    """Canonical probability/number rendering: 12 significant digits."""
    return format(float(x), ".12g")


# --- configuration -------------------------------------------------------------


@dataclass
class EngineConfig:
    policy: ControlPolicy = field(default_factory=lambda: controller.Pulsed(2000.0))
    assistance: AssistanceConfig = field(default_factory=AssistanceConfig)
    fusion: FusionWeights = field(default_factory=FusionWeights)
    expertise_variable: str = profile_mod.DEFAULT_EXPERTISE_VARIABLE
    reference_rate: float = 0.5
    ewma_weight: float = 0.1
    clamp: float = 4.0
    queue_capacity: int = 512
    words_only: bool = False
    default_declared_level: str = ""


def load_config_text(text: str) -> EngineConfig:
    cfg = EngineConfig()
    assistance_kwargs: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        hash_pos = line.find("#")
        if hash_pos >= 0:
            line = line[:hash_pos]
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        if not value:
            raise FormatError(f"config entry {key!r} needs a value", lineno)
        try:
            if key == "policy":
                cfg.policy = parse_policy(value)
            elif key == "threshold":
                assistance_kwargs["threshold"] = float(value)
            elif key == "timeout":
                assistance_kwargs["timeout_ms"] = parse_duration_ms(value)
            elif key == "top_k":
                assistance_kwargs["top_k"] = int(value)
            elif key == "offline_threshold":
                assistance_kwargs["offline_threshold"] = float(value)
            elif key == "fusion":
                parts = dict(tok.split("=", 1) for tok in value.split())
                cfg.fusion = FusionWeights(
                    actions=float(parts.get("actions", 1.0)), words=float(parts.get("words", 1.0))
                )
            elif key == "utility":
                parts = dict(tok.split("=", 1) for tok in value.split())
                assistance_kwargs["utility"] = controller.UtilityTable(
                    offer_need=float(parts["offer_need"]),
                    quiet_need=float(parts["quiet_need"]),
                    offer_no_need=float(parts["offer_no_need"]),
                    quiet_no_need=float(parts["quiet_no_need"]),
                )
            elif key == "expertise_variable":
                cfg.expertise_variable = value
            elif key == "reference_rate":
                cfg.reference_rate = float(value)
            elif key == "ewma_weight":
                cfg.ewma_weight = float(value)
            elif key == "clamp":
                cfg.clamp = float(value)
            elif key == "queue_capacity":
                cfg.queue_capacity = int(value)
            elif key == "words_only":
                if value not in ("true", "false"):
                    raise FormatError(f"words_only must be true or false, got {value!r}", lineno)
                cfg.words_only = value == "true"
            elif key == "default_declared_level":
                cfg.default_declared_level = value
            else:
                raise FormatError(f"unknown config key {key!r}", lineno)
        except FormatError:
            raise
        except (ValueError, KeyError) as exc:
            raise FormatError(f"bad config value in {line!r}: {exc}", lineno) from None
    cfg.assistance = AssistanceConfig(**assistance_kwargs)
    return cfg


def load_config(path: str) -> EngineConfig:
    with open(path, encoding="utf-8") as fh:
        return load_config_text(fh.read())


# --- bundle ---------------------------------------------------------------------


@dataclass
class ModelBundle:
    directory: str
    network: Network
    temporal_specs: dict[str, TemporalObservationSpec]
    program: CompiledProgram
    term_model: TermModel
    rules: list[IndicatorRule]
    config: EngineConfig
    goal_variable: str


def load_bundle(directory: str) -> ModelBundle:
    """Load and cross-validate a bundle; raises BundleError naming every
    problem found."""
    problems: list[str] = []
    for name in REQUIRED_FILES:
        if not os.path.isfile(os.path.join(directory, name)):
            problems.append(f"missing file: {name}")
    if problems:
        raise BundleError(problems)

    network = None
    specs: dict[str, TemporalObservationSpec] = {}
    program = None
    term_model = None
    rules: list[IndicatorRule] = []
    config = EngineConfig()
    try:
        network, specs = load_network(os.path.join(directory, NETWORK_FILE))
    except EngineError as exc:
        problems.append(f"{NETWORK_FILE}: {exc}")
    try:
        program = compile_program(parse(_read(os.path.join(directory, PATTERNS_FILE))))
    except EngineError as exc:
        problems.append(f"{PATTERNS_FILE}: {exc}")
    try:
        term_model = load_terms(os.path.join(directory, TERMS_FILE))
    except EngineError as exc:
        problems.append(f"{TERMS_FILE}: {exc}")
    try:
        rules = profile_mod.load_rules(os.path.join(directory, RULES_FILE))
    except EngineError as exc:
        problems.append(f"{RULES_FILE}: {exc}")
    try:
        config = load_config(os.path.join(directory, CONFIG_FILE))
    except EngineError as exc:
        problems.append(f"{CONFIG_FILE}: {exc}")

    goal_variable = ""
    if network is not None:
        for issue in validate(network):
            problems.append(f"{NETWORK_FILE}: {issue}")
        goals = network.by_kind("goal")
        if len(goals) != 1:
            problems.append(
                f"{NETWORK_FILE}: expected exactly one goal-kind variable, found {len(goals)}"
            )
        else:
            goal_variable = goals[0].name
        if network.assistance is None:
            problems.append(f"{NETWORK_FILE}: no assistance variable designated")
        for name in specs:
            if network.variables[name].kind != "observation":
                problems.append(f"{NETWORK_FILE}: temporal node {name!r} is not observation-kind")

    if network is not None and program is not None:
        for name in program.output_names():
            var = network.variables.get(name)
            if var is None:
                problems.append(
                    f"{PATTERNS_FILE}: filter {name!r} maps to no observation variable "
                    "(declare one or mark the filter internal)"
                )
            elif var.kind != "observation":
                problems.append(f"{PATTERNS_FILE}: filter {name!r} maps to non-observation {var.kind!r}")
            elif var.card != 2:
                problems.append(f"{NETWORK_FILE}: observation {name!r} must be binary")
        known = program.atomics | set(program.classes) | set(program.filter_names())
        for trigger in policy_triggers(config.policy):
            if trigger not in known:
                problems.append(f"{CONFIG_FILE}: policy trigger {trigger!r} is not a known name")

    if network is not None and term_model is not None and goal_variable:
        goal_states = set(network.variables[goal_variable].states)
        if set(term_model.goals) != goal_states:
            problems.append(
                f"{TERMS_FILE}: goals {sorted(term_model.goals)} do not match "
                f"{goal_variable!r} states {sorted(goal_states)}"
            )

    if program is not None:
        filters = set(program.filter_names())
        for rule in rules:
            if rule.trigger not in filters:
                problems.append(f"{RULES_FILE}: trigger {rule.trigger!r} is not a defined filter")
    if network is not None:
        for rule in rules:
            var = network.variables.get(rule.competency)
            if var is not None:
                for _, state in rule.schedule:
                    if state not in var.states:
                        problems.append(
                            f"{RULES_FILE}: schedule state {state!r} not a state of {rule.competency!r}"
                        )
    schedules: dict[str, tuple] = {}
    for rule in rules:
        seen = schedules.setdefault(rule.competency, rule.schedule)
        if seen != rule.schedule:
            problems.append(
                f"{RULES_FILE}: rules for competency {rule.competency!r} declare different schedules"
            )

    if problems:
        raise BundleError(problems)
    assert network is not None and program is not None and term_model is not None
    return ModelBundle(
        directory=directory,
        network=network,
        temporal_specs=specs,
        program=program,
        term_model=term_model,
        rules=rules,
        config=config,
        goal_variable=goal_variable,
    )


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


# --- session state ----------------------------------------------------------------


@dataclass
class PendingOffer:
    topics: tuple[str, ...]
    argmax: str
    at: float
    status: str = "pending"  # pending | acknowledged | dismissed | timeout


@dataclass
class SessionState:
    queue: EventQueue
    clock: ClockModel
    profile: Profile
    tracker: SessionTracker
    config: AssistanceConfig
    last_counted: dict[str, float] = field(default_factory=dict)
    pending_offer: PendingOffer | None = None
    cycle_count: int = 0


def new_session(
    bundle: ModelBundle,
    declared_level: str | None = None,
    threshold: float | None = None,
    user_profile: Profile | None = None,
) -> SessionState:
    cfg = bundle.config
    level = declared_level or cfg.default_declared_level
    if not level:
        expertise = bundle.network.variables.get(cfg.expertise_variable)
        level = expertise.states[0] if expertise else ""
    prof = user_profile or Profile(user_id="session", declared_level=level)
    if declared_level is not None:
        prof.declared_level = declared_level
    for rule in bundle.rules:
        prof.ensure(rule.competency, rule.state_for(0))
    assistance = replace(cfg.assistance)
    if threshold is not None:
        assistance.threshold = threshold
    return SessionState(
        queue=EventQueue(cfg.queue_capacity),
        clock=ClockModel(
            reference_rate=cfg.reference_rate, smoothing=cfg.ewma_weight, clamp=cfg.clamp
        ),
        profile=prof,
        tracker=SessionTracker(),
        config=assistance,
    )


# --- the analysis cycle ----------------------------------------------------------


@dataclass
class CycleResult:
    t: float
    modeled: list[ModeledEvent]  # non-internal, sorted by name
    posterior: Posterior  # goal/need variables, action-based
    needs: dict[str, float]  # final topic distribution (fused when a query is present)
    needs_actions: dict[str, float]
    p_help: float
    fused: bool
    decision: AssistanceDecision

    def to_wire(self) -> dict:
        """Stable field order, numbers as 12-significant-digit strings; this
        exact object is both the trace record and the service stream item."""
        return {
            "t": _fmt(self.t),
            "modeled": [
                {"name": m.name, "satisfied_at": _fmt(m.satisfied_at), "age_ms": _fmt(m.age)}
                for m in self.modeled
            ],
            "p_help": _fmt(self.p_help),
            "needs": {k: _fmt(v) for k, v in self.needs.items()},
            "needs_actions": {k: _fmt(v) for k, v in self.needs_actions.items()},
            "fused": self.fused,
            "decision": {
                "action": self.decision.action,
                "reason": self.decision.reason,
                "topics": [[name, _fmt(p)] for name, p in self.decision.topics],
            },
        }


def trace_line(result: CycleResult) -> str:
    return json.dumps(result.to_wire(), separators=(",", ":"))


def run_cycle(
    bundle: ModelBundle,
    session: SessionState,
    now: float,
    query_text: str | None = None,
) -> CycleResult:
    """One full analysis cycle at virtual time `now`.

    Deterministic given (bundle, event history, now, query). With an empty
    event history no findings are generated at all: there is no stream to
    analyze yet, so the posterior stays at the model's priors given profile
    evidence alone.
    """
    snapshot = session.queue.snapshot()
    satisfied = (
        evaluate_patterns(bundle, snapshot, now, session.clock) if snapshot else {}
    )

    internal = {f.name for f in bundle.program.filters if f.internal}
    evidence: dict[str, str] = {}
    findings: list[TemporalFinding] = []
    if snapshot:
        for name in bundle.program.output_names():
            spec = bundle.temporal_specs.get(name)
            event = satisfied.get(name)
            if spec is not None:
                if event is not None:
                    findings.append(
                        TemporalFinding(
                            variable=name,
                            observed=True,
                            age=_age_in_units(event, spec.units, snapshot, now),
                            units=spec.units,
                        )
                    )
                else:
                    findings.append(TemporalFinding(variable=name, observed=None, units=spec.units))
            else:
                var = bundle.network.variables[name]
                evidence[name] = var.states[0] if event is not None else var.states[1]

    _apply_indicators(bundle, session, satisfied)

    instant, temporal_evidence = build_instant_model(bundle.network, bundle.temporal_specs, findings)
    evidence.update(temporal_evidence)
    profile_evidence = as_evidence(session.profile, instant, bundle.config.expertise_variable)
    posterior, p_help = infer_needs(instant, evidence, profile_evidence)

    needs_actions = posterior[bundle.goal_variable]
    needs = needs_actions
    fused = False
    if query_text:
        terms = tokenize(query_text, bundle.term_model.vocabulary)
        p_words = infer_from_terms(terms, bundle.term_model)
        if bundle.config.words_only:
            needs = {g: p_words[g] for g in needs_actions}
        else:
            needs = fuse(needs_actions, p_words, bundle.config.fusion)
        fused = True

    offer = session.pending_offer
    if offer is not None and offer.status == "pending" and now - offer.at >= session.config.timeout_ms:
        offer.status = "timeout"  # unattended past timeout counts as dismissed

    ranked = most_probable({bundle.goal_variable: needs}, bundle.goal_variable, len(needs))
    decision = controller.decide(ranked, p_help, session.config, session.tracker)
    if decision.action == "offer":
        session.pending_offer = PendingOffer(
            topics=tuple(name for name, _ in decision.topics),
            argmax=decision.topics[0][0],
            at=now,
        )
    controller.record_cycle(session.tracker, ranked, session.config.offline_threshold)

    session.cycle_count += 1
    visible = sorted((m for name, m in satisfied.items() if name not in internal), key=lambda m: m.name)
    return CycleResult(
        t=now,
        modeled=visible,
        posterior=posterior,
        needs=needs,
        needs_actions=needs_actions,
        p_help=p_help,
        fused=fused,
        decision=decision,
    )


def evaluate_patterns(
    bundle: ModelBundle, snapshot: tuple[AtomicEvent, ...], now: float, clock: ClockModel
) -> dict[str, ModeledEvent]:
    return evaluate(bundle.program, snapshot, now, clock)


def _age_in_units(
    event: ModeledEvent, units: str, snapshot: tuple[AtomicEvent, ...], now: float
) -> float:
    if units == "seconds":
        return (now - event.satisfied_at) / 1000.0
    # actions: events ingested strictly after the match completed
    return float(sum(1 for e in snapshot if e.timestamp > event.satisfied_at))


def _apply_indicators(
    bundle: ModelBundle, session: SessionState, satisfied: dict[str, ModeledEvent]
) -> None:
    """Count each distinct filter satisfaction once toward its indicators."""
    if not bundle.rules:
        return
    triggered: list[tuple[str, int]] = []
    for rule in bundle.rules:
        event = satisfied.get(rule.trigger)
        if event is None:
            continue
        previous = session.last_counted.get(rule.trigger)
        if previous is not None and previous == event.satisfied_at:
            continue
        session.last_counted[rule.trigger] = event.satisfied_at
        triggered.append((rule.trigger, int(event.satisfied_at)))
    if triggered:
        update_profile(session.profile, triggered, bundle.rules)


# --- time driver (shared by replay and the service) --------------------------------


class SessionDriver:
    """Advances virtual time, schedules policy cycles, feeds events/queries.

    Pulse boundaries sit at fixed multiples of the interval regardless of
    event- or query-forced cycles, so a pulsed policy fires exactly
    floor(elapsed/interval) times. A boundary at time T runs after every
    event with timestamp <= T. At most one policy cycle runs per distinct
    instant; query cycles are always forced.
    """

    def __init__(self, bundle: ModelBundle, session: SessionState, policy: ControlPolicy | None = None):
        self.bundle = bundle
        self.session = session
        self.policy = policy if policy is not None else bundle.config.policy
        self.results: list[CycleResult] = []
        self.interval = policy_interval(self.policy)
        self.next_boundary = self.interval if self.interval is not None else None
        self.last_policy_run = 0.0
        self.last_cycle_at: float | None = None
        self.now = 0.0
        triggers = policy_triggers(self.policy)
        self.modeled_triggers = triggers & set(self.bundle.program.filter_names())
        self.on_result = None  # service hook

    def _emit(self, result: CycleResult) -> None:
        self.results.append(result)
        if self.on_result is not None:
            self.on_result(result)

    def _run_policy_cycle(self, at: float) -> None:
        if self.last_cycle_at == at:
            return  # one policy cycle per instant
        self._emit(run_cycle(self.bundle, self.session, at))
        self.last_cycle_at = at
        self.last_policy_run = at

    def _attempt_boundary(self, boundary: float) -> None:
        last_event = self.session.queue.last_timestamp()
        if should_run_cycle(self.policy, boundary, self.last_policy_run, (), last_event):
            self._run_policy_cycle(boundary)

    def advance_to(self, t: float, inclusive: bool = True) -> None:
        """Run due pulse boundaries up to t (exclusive when feeding an event
        at t, so the boundary waits for simultaneous events)."""
        if self.next_boundary is None:
            self.now = max(self.now, t)
            return
        while self.next_boundary < t or (inclusive and self.next_boundary == t):
            boundary = self.next_boundary
            self._attempt_boundary(boundary)
            self.next_boundary = boundary + self.interval
        self.now = max(self.now, t)

    def feed_event(self, event: AtomicEvent) -> None:
        self.advance_to(event.timestamp, inclusive=False)
        ingest(self.session.queue, event, self.session.clock)
        self.now = max(self.now, float(event.timestamp))
        triggers = policy_triggers(self.policy)
        if not triggers:
            return
        batch = {event.symbol} | classify(event, self.bundle.program.classes)
        if self.modeled_triggers:
            fresh = evaluate_patterns(
                self.bundle, self.session.queue.snapshot(), event.timestamp, self.session.clock
            )
            batch |= {
                name
                for name in self.modeled_triggers
                if name in fresh and fresh[name].satisfied_at == float(event.timestamp)
            }
        if should_run_cycle(self.policy, event.timestamp, self.last_policy_run, batch, event.timestamp):
            self._run_policy_cycle(float(event.timestamp))

    def feed_query(self, text: str, at: float) -> CycleResult:
        """Force an analysis cycle at `at` with the query folded in."""
        self.advance_to(at, inclusive=False)
        result = run_cycle(self.bundle, self.session, at, query_text=text)
        self.now = max(self.now, at)
        self._emit(result)
        return result

    def finish(self, t: float) -> None:
        self.advance_to(t, inclusive=True)


# --- replay -------------------------------------------------------------------------


def replay(
    bundle: ModelBundle,
    log_path: str,
    policy: ControlPolicy | None = None,
    out_path: str | None = None,
    threshold: float | None = None,
    queries: list[tuple[float, str]] | None = None,
    declared_level: str | None = None,
) -> list[CycleResult]:
    """Deterministic replay of an event log; virtual time comes from the log.

    Queries are (time, text) pairs, each forcing a cycle at its time. The
    trace file, when requested, is byte-identical across runs of the same
    inputs.
    """
    events = read_log(log_path)
    session = new_session(bundle, declared_level=declared_level, threshold=threshold)
    driver = SessionDriver(bundle, session, policy)
    pending_queries = sorted(queries or [], key=lambda q: q[0])

    qi = 0
    for event in events:
        while qi < len(pending_queries) and pending_queries[qi][0] < event.timestamp:
            at, text = pending_queries[qi]
            driver.feed_query(text, at)
            qi += 1
        driver.feed_event(event)
        while qi < len(pending_queries) and pending_queries[qi][0] == event.timestamp:
            at, text = pending_queries[qi]
            driver.feed_query(text, at)
            qi += 1
    for at, text in pending_queries[qi:]:
        driver.feed_query(text, at)

    end = 0.0
    if events:
        end = max(end, float(events[-1].timestamp))
    if pending_queries:
        end = max(end, pending_queries[-1][0])
    driver.finish(end)

    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            for result in driver.results:
                fh.write(trace_line(result) + "\n")
    return driver.results


def trace_checksum(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()
