"""HTTP session service.

Thin transport over the engine: one route per logical operation, engine rule
violations mapped to 409 with the engine's machine code, per-session locks
so concurrent requests for one session serialize while distinct sessions run
in parallel. Every phase-changing operation persists the session; trajectory
batches mark it dirty and an idle flush (or shutdown) writes it out.
"""

from __future__ import annotations

import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import metrics
from .engine import (
    AwaitResult,
    ChestOpen,
    Complete,
    Crafting,
    Navigating,
    RuleViolation,
    Session,
    start_session,
)
from .levels import builtin_levels
from .model import LevelSpec, TrajectorySample
from .store import Store

DEFAULT_IDLE_FLUSH_SECONDS = 30 * 60


class CreateSessionBody(BaseModel):
    level_id: str
    participant_id: str
    session_id: str | None = None
    started_at: str | None = None


class SampleBody(BaseModel):
    t_ms: int
    x: float
    y: float


class SamplesBody(BaseModel):
    samples: list[SampleBody]


class ActionBody(BaseModel):
    action: str
    checkpoint: int | None = None
    item: str | None = None
    cell: int | None = Field(default=None, ge=0)


@dataclass
class _Entry:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    dirty: bool = False
    last_touch: float = field(default_factory=time.monotonic)


class SessionRegistry:
    """In-memory session table backed by the store."""

    def __init__(
        self,
        store: Store,
        levels: list[LevelSpec] | None = None,
        idle_flush_seconds: float = DEFAULT_IDLE_FLUSH_SECONDS,
    ):
        self.store = store
        if levels is None:
            levels = store.list_levels() or builtin_levels()
        self.levels = {lv.level_id: lv for lv in levels}
        self.idle_flush_seconds = idle_flush_seconds
        self._entries: dict[str, _Entry] = {}
        self._table_lock = threading.Lock()
        for lv in levels:
            store.save_level(lv)

    def levels_sorted(self) -> list[LevelSpec]:
        return sorted(self.levels.values(), key=lambda lv: (lv.difficulty_rank, lv.level_id))

    def create(self, body: CreateSessionBody) -> Session:
        level = self.levels.get(body.level_id)
        if level is None:
            raise HTTPException(404, detail={"code": "not_found", "message": f"no level {body.level_id!r}"})
        session_id = body.session_id or uuid.uuid4().hex
        started_at = body.started_at or (
            datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")
        )
        with self._table_lock:
            if session_id in self._entries:
                raise HTTPException(
                    409,
                    detail={"code": "session_exists", "message": f"session {session_id!r} already exists"},
                )
            session = start_session(level, body.participant_id, session_id, started_at)
            self._entries[session_id] = _Entry(session=session)
        self.store.save_session(session)
        return session

    def entry(self, session_id: str) -> _Entry:
        with self._table_lock:
            entry = self._entries.get(session_id)
        if entry is None:
            raise HTTPException(
                404, detail={"code": "not_found", "message": f"no session {session_id!r}"}
            )
        return entry

    def flush_idle(self, now: float | None = None) -> int:
        """Persist sessions whose sample batches have sat unwritten past the
        idle window. Returns the number flushed."""
        if now is None:
            now = time.monotonic()
        flushed = 0
        with self._table_lock:
            entries = list(self._entries.values())
        for entry in entries:
            with entry.lock:
                if entry.dirty and now - entry.last_touch >= self.idle_flush_seconds:
                    self.store.save_session(entry.session)
                    entry.dirty = False
                    flushed += 1
        return flushed

    def flush_all(self) -> None:
        with self._table_lock:
            entries = list(self._entries.values())
        for entry in entries:
            with entry.lock:
                if entry.dirty:
                    self.store.save_session(entry.session)
                    entry.dirty = False


def phase_view(session: Session) -> dict[str, Any]:
    """Public view of the current phase. Never exposes craft outcome before
    the result is revealed."""
    phase = session.phase
    doc: dict[str, Any] = {"kind": phase.kind}
    if isinstance(phase, Navigating):
        doc["next_checkpoint"] = phase.next_checkpoint
    elif isinstance(phase, ChestOpen):
        doc["checkpoint"] = phase.checkpoint
        doc["slots"] = session.chest_view()["slots"]
        doc["taken"] = phase.taken
    elif isinstance(phase, Crafting):
        doc["cells"] = list(phase.cells)
        doc["available"] = session.available_inventory()
    elif isinstance(phase, AwaitResult):
        doc["result_item"] = phase.result_item
    elif isinstance(phase, Complete):
        doc["craft_success"] = phase.craft_success
    return doc


def state_view(session: Session) -> dict[str, Any]:
    last = session.trajectory[-1] if session.trajectory else None
    return {
        "session_id": session.session_id,
        "participant_id": session.participant_id,
        "level_id": session.level.level_id,
        "phase": phase_view(session),
        "inventory": list(session.inventory),
        "checkpoint_count": session.checkpoint_count,
        "position": None if last is None else {"t_ms": last.t_ms, "x": last.x, "y": last.y},
    }


def create_app(
    store: Store,
    levels: list[LevelSpec] | None = None,
    cors_origins: list[str] | None = None,
    idle_flush_seconds: float = DEFAULT_IDLE_FLUSH_SECONDS,
    flush_poll_seconds: float = 60.0,
) -> FastAPI:
    registry = SessionRegistry(store, levels, idle_flush_seconds)
    stop_flusher = threading.Event()

    def flusher() -> None:
        while not stop_flusher.wait(flush_poll_seconds):
            registry.flush_idle()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        thread = threading.Thread(target=flusher, name="session-flusher", daemon=True)
        thread.start()
        try:
            yield
        finally:
            stop_flusher.set()
            registry.flush_all()

    app = FastAPI(title="wayfinder", lifespan=lifespan)
    app.state.registry = registry
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RuleViolation)
    async def rule_violation_handler(request, exc: RuleViolation):
        return JSONResponse(status_code=409, content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(HTTPException)
    async def http_exception_handler(request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.get("/api/levels")
    def list_levels():
        return [
            {"level_id": lv.level_id, "name": lv.name, "difficulty_rank": lv.difficulty_rank}
            for lv in registry.levels_sorted()
        ]

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = registry.create(body)
        return {"session_id": session.session_id, "briefing": session.briefing_view()}

    @app.post("/api/sessions/{session_id}/ack-briefing")
    def ack_briefing(session_id: str):
        entry = registry.entry(session_id)
        with entry.lock:
            entry.session.acknowledge_briefing()
            registry.store.save_session(entry.session)
            entry.dirty = False
            entry.last_touch = time.monotonic()
            return state_view(entry.session)

    @app.post("/api/sessions/{session_id}/samples", status_code=204)
    def post_samples(session_id: str, body: SamplesBody):
        entry = registry.entry(session_id)
        samples = [TrajectorySample(t_ms=s.t_ms, x=s.x, y=s.y) for s in body.samples]
        with entry.lock:
            entry.session.record_samples(samples)
            entry.dirty = True
            entry.last_touch = time.monotonic()
        return Response(status_code=204)

    @app.post("/api/sessions/{session_id}/actions")
    def post_action(session_id: str, body: ActionBody):
        entry = registry.entry(session_id)
        with entry.lock:
            _apply_action(entry.session, body)
            registry.store.save_session(entry.session)
            entry.dirty = False
            entry.last_touch = time.monotonic()
            return state_view(entry.session)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        entry = registry.entry(session_id)
        with entry.lock:
            return state_view(entry.session)

    @app.get("/api/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        entry = registry.entry(session_id)
        with entry.lock:
            if not isinstance(entry.session.phase, Complete):
                raise HTTPException(
                    409,
                    detail={
                        "code": "session_incomplete",
                        "message": f"session is in phase {entry.session.phase.kind}",
                    },
                )
            report = metrics.session_metrics(entry.session)
        doc = report.to_doc()
        registry.store.save_report(f"{session_id}.metrics", doc)
        return doc

    return app


def _require(body: ActionBody, field_name: str) -> Any:
    value = getattr(body, field_name)
    if value is None:
        raise HTTPException(
            422,
            detail={
                "code": "missing_argument",
                "message": f"action {body.action!r} requires {field_name!r}",
            },
        )
    return value


def _apply_action(session: Session, body: ActionBody) -> None:
    action = body.action
    if action == "open_chest":
        session.open_chest(int(_require(body, "checkpoint")))
    elif action == "select_item":
        session.select_item(str(_require(body, "item")))
    elif action == "close_chest":
        session.close_chest()
    elif action == "place_craft":
        session.place_in_craft(str(_require(body, "item")), int(_require(body, "cell")))
    elif action == "remove_craft":
        session.remove_from_craft(int(_require(body, "cell")))
    elif action == "take_result":
        session.take_result()
    else:
        raise HTTPException(
            422, detail={"code": "unknown_action", "message": f"unknown action {action!r}"}
        )
