"""Request/response schemas of the session service.

Every response carries `schema_version`; requests may send it and are
rejected on a mismatch so the wire format stays pinned for golden tests.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class EventIn(BaseModel):
    sender: str
    receiver: str
    message: str
    args: list[Any] = Field(default_factory=list)


class RecipientIn(BaseModel):
    id: str | None = None
    audience: Literal["end_user", "engineer", "machine"] = "end_user"
    format: Literal["textual", "structured"] = "textual"
    verbosity_depth: int = 2


class CreateSessionRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    scene: str


class CreateSessionResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    session_id: str
    scene: str
    step_count: int


class ScenesResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    scenes: list[str]


class PostEventRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    event: EventIn | str


class StepRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    until_quiescent: bool = False


class NeedOut(BaseModel):
    label: str
    rule: str | None = None
    explained: bool
    text: str | None = None
    note: str | None = None


class StepResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    results: list[dict[str, Any]]
    new_entries: list[dict[str, Any]]
    notifications: list[NeedOut]


class QueryRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    kind: Literal["why", "whycond", "when", "ask"]
    target: str | int | None = None  # why
    condition: str | None = None  # whycond
    pattern: str | None = None  # when
    question: str | None = None  # ask
    horizon: int = 4
    recipient: RecipientIn = Field(default_factory=RecipientIn)
    follow_up: bool = False


class FollowUpOut(BaseModel):
    label: str
    kind: str
    payload: str
    horizon: int | None = None


class QueryResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    kind: str
    text: str | None
    structured: dict[str, Any] | None
    follow_ups: list[FollowUpOut]
    ir: dict[str, Any]


class HistoryResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    entries: list[dict[str, Any]]


class ReloadRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    spec_text: str | None = None
    trees: dict[str, str] = Field(default_factory=dict)


class ReloadResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    accepted: bool
    errors: list[str]
    resolved: list[int]
    kept_instances: list[int]
    interrupted_instances: list[int]


class StateResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    scene: str
    step_count: int
    world: dict[str, Any]
    last_system_event: dict[str, Any] | None
    instances: list[dict[str, Any]]
    alphabet: list[dict[str, Any]]
    questions: list[str]
    pending_ledger: int
    pending_requested: list[str]
