"""Session registry: one serialized writer per session, idle expiry, fan-out.

Requests to one session take its lock, so they apply in arrival order; every
state change is pushed to the session's subscriber queues for the SSE
stream.
"""

from __future__ import annotations

import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..loop.session import ExplanationSession
from ..v2x.scenes import BUILTIN_SCENES, UnknownScene, load_scene

DEFAULT_TTL_SECONDS = 30 * 60


@dataclass
class SessionHandle:
    session_id: str
    scene: str
    session: ExplanationSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)
    subscribers: list[queue.SimpleQueue] = field(default_factory=list)


class SessionManager:
    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS, scene_dir: str | None = None):
        self.ttl_seconds = ttl_seconds
        self.scene_dir = Path(scene_dir) if scene_dir else None
        self._sessions: dict[str, SessionHandle] = {}
        self._registry_lock = threading.Lock()

    def scene_names(self) -> list[str]:
        names = list(BUILTIN_SCENES)
        if self.scene_dir is not None and self.scene_dir.is_dir():
            names.extend(sorted(p.stem for p in self.scene_dir.glob("*.json")))
        return names

    def create(self, scene: str) -> SessionHandle:
        session = load_scene(self._resolve_scene(scene))
        handle = SessionHandle(
            session_id=uuid.uuid4().hex,
            scene=session.scene_name or scene,
            session=session,
        )
        session.subscribe(lambda kind, payload: self._fan_out(handle, kind, payload))
        with self._registry_lock:
            self._purge_locked()
            self._sessions[handle.session_id] = handle
        return handle

    def _resolve_scene(self, scene: str) -> str:
        if scene in BUILTIN_SCENES:
            return scene
        if self.scene_dir is not None:
            candidate = self.scene_dir / f"{scene}.json"
            if candidate.exists():
                return str(candidate)
        if Path(scene).exists():
            return scene
        raise UnknownScene(f"unknown scene: {scene!r}")

    def get(self, session_id: str) -> SessionHandle:
        with self._registry_lock:
            self._purge_locked()
            handle = self._sessions.get(session_id)
            if handle is None:
                raise KeyError(session_id)
            handle.last_access = time.monotonic()
            return handle

    def _purge_locked(self) -> None:
        if self.ttl_seconds <= 0:
            return
        deadline = time.monotonic() - self.ttl_seconds
        expired = [sid for sid, h in self._sessions.items() if h.last_access < deadline]
        for sid in expired:
            del self._sessions[sid]

    def attach_queue(self, handle: SessionHandle) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        handle.subscribers.append(q)
        return q

    def detach_queue(self, handle: SessionHandle, q: queue.SimpleQueue) -> None:
        if q in handle.subscribers:
            handle.subscribers.remove(q)

    def _fan_out(self, handle: SessionHandle, kind: str, payload: dict) -> None:
        for q in list(handle.subscribers):
            q.put((kind, payload))
