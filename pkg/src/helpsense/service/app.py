"""FastAPI session service.

One bundle per server; each session owns independent state behind its own
lock (a session processes one request at a time, many sessions run in
parallel). Sessions run on virtual time: event timestamps and explicit ticks
advance the clock, so a scripted session reproduces a replay exactly.

Endpoints (docs/protocol.md has the full reference):
    POST   /sessions                  create
    GET    /sessions/{id}             state snapshot
    DELETE /sessions/{id}             close
    POST   /sessions/{id}/events      submit an event (may yield cycles)
    POST   /sessions/{id}/tick        advance virtual time to now_ms
    POST   /sessions/{id}/query       force a cycle with a free-text query
    POST   /sessions/{id}/threshold   set the assistance threshold
    POST   /sessions/{id}/offers/ack  acknowledge the pending offer's topic
    POST   /sessions/{id}/offers/dismiss
    GET    /sessions/{id}/results     poll cycle results after a sequence number
    GET    /sessions/{id}/stream      server-push stream (SSE) of cycle results
    GET    /sessions/{id}/summary     unreviewed topics for offline review
    GET    /bundle                    loaded bundle description
"""

from __future__ import annotations

import json
import queue
import threading
import uuid

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from ..controller import effective_threshold, format_policy, session_summary
from ..engine import CycleResult, ModelBundle, SessionDriver, load_bundle, new_session, _fmt
from ..errors import EngineError
from . import schemas


class _LiveSession:
    def __init__(self, session_id: str, bundle: ModelBundle):
        self.id = session_id
        self.state = new_session(bundle)
        self.driver = SessionDriver(bundle, self.state)
        self.driver.on_result = self._on_result
        self.lock = threading.Lock()
        self.buffer: list[tuple[int, dict]] = []
        self.seq = 0
        self.subscribers: list[queue.SimpleQueue] = []
        self.closed = False

    def _on_result(self, result: CycleResult) -> None:
        wire = result.to_wire()
        self.seq += 1
        self.buffer.append((self.seq, wire))
        for q in list(self.subscribers):
            q.put(wire)

    def subscribe(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        self.subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        if q in self.subscribers:
            self.subscribers.remove(q)

    def close(self) -> None:
        self.closed = True
        for q in list(self.subscribers):
            q.put(None)

    def offer_status(self) -> schemas.OfferStatus:
        offer = self.state.pending_offer
        if offer is None:
            return schemas.OfferStatus(status="none")
        return schemas.OfferStatus(
            status=offer.status, topics=list(offer.topics), at_ms=_fmt(offer.at)
        )


def create_app(bundle: ModelBundle | str, console_dir: str | None = None) -> FastAPI:
    if isinstance(bundle, str):
        bundle = load_bundle(bundle)
    app = FastAPI(title="helpsense session service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, _LiveSession] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> _LiveSession:
        live = sessions.get(session_id)
        if live is None or live.closed:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return live

    def results_since(live: _LiveSession, after: int) -> schemas.CycleResultsResponse:
        items = [wire for seq, wire in live.buffer if seq > after]
        return schemas.CycleResultsResponse(results=items, next_after=live.seq)

    @app.get("/bundle", response_model=schemas.BundleInfo)
    def bundle_info() -> schemas.BundleInfo:
        network = bundle.network
        expertise = network.variables.get(bundle.config.expertise_variable)
        return schemas.BundleInfo(
            goal_variable=bundle.goal_variable,
            goal_states=list(network.variables[bundle.goal_variable].states),
            assistance_variable=network.assistance or "",
            expertise_variable=bundle.config.expertise_variable,
            expertise_states=list(expertise.states) if expertise else [],
            patterns=bundle.program.output_names(),
            atomic_symbols=sorted(bundle.program.atomics),
            policy=format_policy(bundle.config.policy),
            threshold=bundle.config.assistance.threshold,
            timeout_ms=bundle.config.assistance.timeout_ms,
            top_k=bundle.config.assistance.top_k,
        )

    @app.post("/sessions", response_model=schemas.SessionInfo, status_code=201)
    def create_session(request: schemas.CreateSessionRequest) -> schemas.SessionInfo:
        session_id = uuid.uuid4().hex[:12]
        live = _LiveSession(session_id, bundle)
        if request.declared_level is not None:
            expertise = bundle.network.variables.get(bundle.config.expertise_variable)
            if expertise is not None and request.declared_level not in expertise.states:
                raise HTTPException(
                    status_code=422,
                    detail=f"declared_level must be one of {list(expertise.states)}",
                )
            live.state.profile.declared_level = request.declared_level
        if request.threshold is not None:
            live.state.config.threshold = request.threshold
        with registry_lock:
            sessions[session_id] = live
        return session_info(live)

    def session_info(live: _LiveSession) -> schemas.SessionInfo:
        return schemas.SessionInfo(
            session_id=live.id,
            now_ms=_fmt(live.driver.now),
            threshold=live.state.config.threshold,
            effective_threshold=effective_threshold(live.state.config),
            timeout_ms=live.state.config.timeout_ms,
            top_k=live.state.config.top_k,
            cycle_count=live.state.cycle_count,
            declared_level=live.state.profile.declared_level,
            offer=live.offer_status(),
        )

    @app.get("/sessions/{session_id}", response_model=schemas.SessionInfo)
    def get_state(session_id: str) -> schemas.SessionInfo:
        live = get_session(session_id)
        with live.lock:
            return session_info(live)

    @app.delete("/sessions/{session_id}", response_model=schemas.ClosedResponse)
    def close_session(session_id: str) -> schemas.ClosedResponse:
        live = get_session(session_id)
        with live.lock:
            live.close()
        with registry_lock:
            sessions.pop(session_id, None)
        return schemas.ClosedResponse(session_id=session_id, closed=True)

    @app.post("/sessions/{session_id}/events", response_model=schemas.CycleResultsResponse)
    def submit_event(session_id: str, request: schemas.EventRequest) -> schemas.CycleResultsResponse:
        from ..events import AtomicEvent

        live = get_session(session_id)
        if request.symbol not in bundle.program.atomics:
            raise HTTPException(
                status_code=422,
                detail=f"unknown event symbol {request.symbol!r}; the bundle declares "
                f"{len(bundle.program.atomics)} atomic symbols",
            )
        with live.lock:
            before = live.seq
            try:
                live.driver.feed_event(
                    AtomicEvent(
                        symbol=request.symbol,
                        timestamp=request.timestamp_ms,
                        attributes=dict(request.attributes),
                    )
                )
            except EngineError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            return results_since(live, before)

    @app.post("/sessions/{session_id}/tick", response_model=schemas.CycleResultsResponse)
    def tick(session_id: str, request: schemas.TickRequest) -> schemas.CycleResultsResponse:
        live = get_session(session_id)
        with live.lock:
            before = live.seq
            live.driver.finish(request.now_ms)
            return results_since(live, before)

    @app.post("/sessions/{session_id}/query", response_model=schemas.CycleResultOut)
    def submit_query(session_id: str, request: schemas.QueryRequest) -> dict:
        live = get_session(session_id)
        with live.lock:
            at = request.at_ms if request.at_ms is not None else live.driver.now
            if at < live.driver.now:
                raise HTTPException(
                    status_code=400,
                    detail=f"query time {at} predates session time {live.driver.now}",
                )
            try:
                result = live.driver.feed_query(request.text, at)
            except EngineError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            return result.to_wire()

    @app.post("/sessions/{session_id}/threshold", response_model=schemas.ThresholdResponse)
    def set_threshold(session_id: str, request: schemas.ThresholdRequest) -> schemas.ThresholdResponse:
        live = get_session(session_id)
        with live.lock:
            live.state.config.threshold = request.value
            return schemas.ThresholdResponse(
                threshold=live.state.config.threshold,
                effective_threshold=effective_threshold(live.state.config),
            )

    @app.post("/sessions/{session_id}/offers/ack", response_model=schemas.OfferStatus)
    def acknowledge_offer(session_id: str, request: schemas.AckRequest) -> schemas.OfferStatus:
        live = get_session(session_id)
        with live.lock:
            offer = live.state.pending_offer
            if offer is None or offer.status != "pending":
                raise HTTPException(status_code=409, detail="no pending offer")
            if request.topic not in offer.topics:
                raise HTTPException(
                    status_code=400, detail=f"topic {request.topic!r} is not in the offer"
                )
            offer.status = "acknowledged"
            live.state.tracker.mark_reviewed(request.topic)
            return live.offer_status()

    @app.post("/sessions/{session_id}/offers/dismiss", response_model=schemas.OfferStatus)
    def dismiss_offer(session_id: str) -> schemas.OfferStatus:
        live = get_session(session_id)
        with live.lock:
            offer = live.state.pending_offer
            if offer is None or offer.status != "pending":
                raise HTTPException(status_code=409, detail="no pending offer")
            offer.status = "dismissed"
            return live.offer_status()

    @app.get("/sessions/{session_id}/results", response_model=schemas.CycleResultsResponse)
    def poll_results(session_id: str, after: int = 0) -> schemas.CycleResultsResponse:
        live = get_session(session_id)
        with live.lock:
            return results_since(live, after)

    @app.get("/sessions/{session_id}/stream")
    def stream_results(session_id: str) -> StreamingResponse:
        live = get_session(session_id)
        subscriber = live.subscribe()
        with live.lock:
            backlog = [wire for _, wire in live.buffer]

        def generate():
            try:
                for wire in backlog:
                    yield f"data: {json.dumps(wire, separators=(',', ':'))}\n\n"
                while True:
                    item = subscriber.get()
                    if item is None:
                        break
                    yield f"data: {json.dumps(item, separators=(',', ':'))}\n\n"
            finally:
                live.unsubscribe(subscriber)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/summary", response_model=schemas.SummaryResponse)
    def summary(session_id: str, n: int = 5) -> schemas.SummaryResponse:
        live = get_session(session_id)
        with live.lock:
            entries = session_summary(live.state.tracker, n)
        return schemas.SummaryResponse(
            topics=[schemas.SummaryEntry(name=name, count=count) for name, count in entries]
        )

    if console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    return app
