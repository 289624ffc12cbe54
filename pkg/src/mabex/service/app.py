"""HTTP surface of the explanation engine.

Endpoints: create-session, post-event, step, query, history, reload-models,
state and an SSE subscribe stream. Configuration comes from environment
variables: MABEX_SCENE_DIR (extra scene files), MABEX_SESSION_TTL (idle
seconds), MABEX_HOST / MABEX_PORT (used by `mabex serve`).
"""

from __future__ import annotations

import json
import os
import queue
from typing import Iterator

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, StreamingResponse

from ..engine.playout import EngineError, ExecutedEvent
from ..loop.build import ConditionNotHolding, TargetNotFound
from ..loop.session import QueryError, parse_event_text
from ..loop.wire import (
    event_to_dict,
    history_entry_to_dict,
    rendered_to_dict,
    step_result_to_dict,
)
from ..engine.export import entry_line
from ..engine.objects import Event, WorldError
from ..sml.parser import ParseError
from ..v2x.scenes import UnknownScene
from .models import (
    SCHEMA_VERSION,
    CreateSessionRequest,
    CreateSessionResponse,
    HistoryResponse,
    NeedOut,
    PostEventRequest,
    QueryRequest,
    QueryResponse,
    ReloadRequest,
    ReloadResponse,
    ScenesResponse,
    StateResponse,
    StepRequest,
    StepResponse,
)
from .sessions import DEFAULT_TTL_SECONDS, SessionHandle, SessionManager


def create_app(scene_dir: str | None = None, ttl_seconds: float | None = None) -> FastAPI:
    if scene_dir is None:
        scene_dir = os.environ.get("MABEX_SCENE_DIR")
    if ttl_seconds is None:
        ttl_seconds = float(os.environ.get("MABEX_SESSION_TTL", DEFAULT_TTL_SECONDS))

    app = FastAPI(title="mabex session service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    manager = SessionManager(ttl_seconds=ttl_seconds, scene_dir=scene_dir)
    app.state.manager = manager

    def get_handle(session_id: str) -> SessionHandle:
        try:
            return manager.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session '{session_id}'")

    def check_schema(version: int) -> None:
        if version != SCHEMA_VERSION:
            raise HTTPException(
                status_code=400,
                detail=f"unsupported schema_version {version}, expected {SCHEMA_VERSION}",
            )

    @app.get("/scenes", response_model=ScenesResponse)
    def list_scenes() -> ScenesResponse:
        return ScenesResponse(scenes=manager.scene_names())

    @app.post("/sessions", response_model=CreateSessionResponse, status_code=201)
    def create_session(request: CreateSessionRequest) -> CreateSessionResponse:
        check_schema(request.schema_version)
        try:
            handle = manager.create(request.scene)
        except UnknownScene as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return CreateSessionResponse(
            session_id=handle.session_id,
            scene=handle.scene,
            step_count=len(handle.session.engine.history()),
        )

    @app.get("/sessions/{session_id}/state", response_model=StateResponse)
    def session_state(session_id: str) -> StateResponse:
        handle = get_handle(session_id)
        with handle.lock:
            return _state_response(handle)

    @app.post("/sessions/{session_id}/events", response_model=StepResponse)
    def post_event(session_id: str, request: PostEventRequest) -> StepResponse:
        check_schema(request.schema_version)
        handle = get_handle(session_id)
        with handle.lock:
            session = handle.session
            before_entries = len(session.engine.history())
            before_notes = len(session.notifications)
            try:
                if isinstance(request.event, str):
                    event = parse_event_text(request.event)
                else:
                    event = Event(
                        sender=request.event.sender,
                        receiver=request.event.receiver,
                        message=request.event.message,
                        args=tuple(request.event.args),
                    )
                result = session.inject(event)
            except (QueryError, ParseError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            except (WorldError, EngineError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            return _step_response(handle, [result], before_entries, before_notes)

    @app.post("/sessions/{session_id}/step", response_model=StepResponse)
    def step(session_id: str, request: StepRequest) -> StepResponse:
        check_schema(request.schema_version)
        handle = get_handle(session_id)
        with handle.lock:
            session = handle.session
            before_entries = len(session.engine.history())
            before_notes = len(session.notifications)
            results = []
            while True:
                result = session.step()
                results.append(result)
                if not request.until_quiescent or not isinstance(result, ExecutedEvent):
                    break
            return _step_response(handle, results, before_entries, before_notes)

    @app.post("/sessions/{session_id}/query", response_model=QueryResponse)
    def query(session_id: str, request: QueryRequest) -> QueryResponse:
        check_schema(request.schema_version)
        handle = get_handle(session_id)
        with handle.lock:
            session = handle.session
            recipient = request.recipient.model_dump()
            if request.follow_up and recipient.get("id"):
                session.bump_verbosity(recipient["id"])
            try:
                if request.kind == "why":
                    if request.target is None:
                        raise HTTPException(status_code=400, detail="why needs a target")
                    rendered = session.why(request.target, recipient)
                elif request.kind == "whycond":
                    if not request.condition:
                        raise HTTPException(status_code=400, detail="whycond needs a condition")
                    rendered = session.whycond(request.condition, recipient)
                elif request.kind == "when":
                    if not request.pattern:
                        raise HTTPException(status_code=400, detail="when needs a pattern")
                    rendered = session.when(request.pattern, request.horizon, recipient)
                else:
                    if not request.question:
                        raise HTTPException(status_code=400, detail="ask needs a question")
                    rendered = session.ask(request.question, recipient)
            except ConditionNotHolding as exc:
                raise HTTPException(status_code=409, detail=f"condition does not hold: {exc}")
            except TargetNotFound as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            except QueryError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            payload = rendered_to_dict(rendered)
            return QueryResponse(kind=request.kind, **payload)

    @app.get("/sessions/{session_id}/history")
    def history(session_id: str, since: int = 0, format: str = "json"):
        handle = get_handle(session_id)
        with handle.lock:
            entries = handle.session.engine.history()[max(0, since):]
            if format == "lines":
                text = "".join(entry_line(e) + "\n" for e in entries)
                return PlainTextResponse(text)
            return HistoryResponse(entries=[history_entry_to_dict(e) for e in entries])

    @app.post("/sessions/{session_id}/reload-models", response_model=ReloadResponse)
    def reload_models(session_id: str, request: ReloadRequest) -> ReloadResponse:
        check_schema(request.schema_version)
        handle = get_handle(session_id)
        with handle.lock:
            report = handle.session.reload_models(
                spec_text=request.spec_text, tree_texts=request.trees or None
            )
            return ReloadResponse(
                accepted=report.accepted,
                errors=report.errors,
                resolved=report.resolved,
                kept_instances=report.kept_instances,
                interrupted_instances=report.interrupted_instances,
            )

    @app.get("/sessions/{session_id}/subscribe")
    def subscribe(session_id: str) -> StreamingResponse:
        handle = get_handle(session_id)
        q = manager.attach_queue(handle)

        def stream() -> Iterator[str]:
            yield "retry: 2000\n\n"
            try:
                while True:
                    try:
                        kind, payload = q.get(timeout=0.25)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"event: {kind}\ndata: {json.dumps(payload, sort_keys=True)}\n\n"
            finally:
                manager.detach_queue(handle, q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def _step_response(
    handle: SessionHandle, results, before_entries: int, before_notes: int
) -> StepResponse:
    session = handle.session
    new_entries = [
        history_entry_to_dict(e) for e in session.engine.history()[before_entries:]
    ]
    notifications = [
        NeedOut(
            label=n.need.behavior_label,
            rule=n.need.origin_rule,
            explained=n.explained,
            text=n.rendered if isinstance(n.rendered, str) else None,
            note=n.note,
        )
        for n in session.notifications[before_notes:]
    ]
    return StepResponse(
        results=[step_result_to_dict(r) for r in results],
        new_entries=new_entries,
        notifications=notifications,
    )


def _state_response(handle: SessionHandle) -> StateResponse:
    session = handle.session
    engine = session.engine
    history = engine.history()
    last_system = None
    for entry in reversed(history):
        if entry.event.origin == "system":
            last_system = event_to_dict(entry.event)
            break
    instances = [
        {
            "iid": inst.iid,
            "scenario": engine.spec.scenarios[inst.scenario_index].name,
            "status": inst.status,
            "cut": list(inst.cut),
        }
        for inst in engine.instances
    ]
    alphabet = [
        {"name": macro.name, "events": [e.text() for e in macro.events]}
        for macro in session.env_macros
    ]
    return StateResponse(
        scene=session.scene_name,
        step_count=len(history),
        world=engine.world.canonical(),
        last_system_event=last_system,
        instances=instances,
        alphabet=alphabet,
        questions=list(session.query_map.keys()),
        pending_ledger=len(session.pending_ledger()),
        pending_requested=[
            f"{scenario}#{iid}: {text}"
            for iid, scenario, text in engine.pending_requested()
        ],
    )


app = create_app()
