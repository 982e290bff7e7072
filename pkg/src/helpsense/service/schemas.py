"""Request/response models for the session service.

Cycle results put every probability and timestamp on the wire as a string
with 12 significant digits; these are exactly the bytes the replay trace
records, so clients can compare stream and trace field for field. The full
schema reference lives in docs/protocol.md.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    declared_level: str | None = None
    threshold: float | None = Field(default=None, ge=0.0, le=1.0)


class EventRequest(BaseModel):
    symbol: str = Field(min_length=1)
    timestamp_ms: int = Field(ge=0)
    attributes: dict[str, str] = Field(default_factory=dict)


class TickRequest(BaseModel):
    now_ms: float = Field(ge=0)


class QueryRequest(BaseModel):
    text: str
    at_ms: float | None = Field(default=None, ge=0)


class ThresholdRequest(BaseModel):
    value: float = Field(ge=0.0, le=1.0)


class AckRequest(BaseModel):
    topic: str


class ModeledEventOut(BaseModel):
    name: str
    satisfied_at: str
    age_ms: str


class DecisionOut(BaseModel):
    action: str
    reason: str
    topics: list[list[str]]  # [name, probability] pairs


class CycleResultOut(BaseModel):
    t: str
    modeled: list[ModeledEventOut]
    p_help: str
    needs: dict[str, str]
    needs_actions: dict[str, str]
    fused: bool
    decision: DecisionOut


class CycleResultsResponse(BaseModel):
    results: list[CycleResultOut]
    next_after: int


class OfferStatus(BaseModel):
    status: str  # none | pending | acknowledged | dismissed | timeout
    topics: list[str] = Field(default_factory=list)
    at_ms: str | None = None


class SessionInfo(BaseModel):
    session_id: str
    now_ms: str
    threshold: float
    effective_threshold: float
    timeout_ms: float
    top_k: int
    cycle_count: int
    declared_level: str
    offer: OfferStatus


class BundleInfo(BaseModel):
    goal_variable: str
    goal_states: list[str]
    assistance_variable: str
    expertise_variable: str
    expertise_states: list[str]
    patterns: list[str]
    atomic_symbols: list[str]
    policy: str
    threshold: float
    timeout_ms: float
    top_k: int


class SummaryEntry(BaseModel):
    name: str
    count: int


class SummaryResponse(BaseModel):
    topics: list[SummaryEntry]


class ThresholdResponse(BaseModel):
    threshold: float
    effective_threshold: float


class ClosedResponse(BaseModel):
    session_id: str
    closed: bool
