"""In-memory session store: one clustering model per session.

Each session carries its own lock: model writes are serialized per the
engine's single-writer contract, while independent sessions run in
parallel threads freely.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from ..engine import BloomStreamModel


@dataclass
class Session:
    session_id: str
    model: BloomStreamModel
    seed: int
    lock: threading.Lock = field(default_factory=threading.Lock)
    windows_served: int = 0


class SessionStore:
    def __init__(self) -> None:
        self._sessions: dict = {}
        self._lock = threading.Lock()

    def create(self, model: BloomStreamModel, seed: int) -> Session:
        session = Session(uuid.uuid4().hex, model, seed)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            return self._sessions.get(session_id)

    def drop(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None

    def ids(self) -> list:
        with self._lock:
            return sorted(self._sessions)
