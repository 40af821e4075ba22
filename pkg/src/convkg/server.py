"""HTTP session service under /v1: sessions, ask, rewards, entity sheets,
documentary excerpts, health.

Per-session asks are serialized (a second in-flight ask gets 409); distinct
sessions run concurrently over the shared immutable engine.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .context import DialogueState, RewardError
from .engine import Engine
from .kb import KBNotFound

DEFAULT_SESSION_TTL = 1800.0


class SessionRequest(BaseModel):
    speaker_id: str | None = None


class AskRequest(BaseModel):
    text: str


class RewardRequest(BaseModel):
    turn: int
    reward: str  # CORRECT | INCORRECT


@dataclass
class SessionRecord:
    state: DialogueState
    created_at: float
    last_active: float
    speaker_id: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, ttl: float):
        self.ttl = ttl
        self._sessions: dict[str, SessionRecord] = {}
        self._guard = threading.Lock()

    def add(self, record: SessionRecord) -> None:
        with self._guard:
            self._sessions[record.state.session_id] = record

    def get(self, session_id: str) -> SessionRecord:
        now = time.monotonic()
        with self._guard:
            record = self._sessions.get(session_id)
            if record is not None and now - record.last_active > self.ttl:
                del self._sessions[session_id]
                record = None
            if record is None:
                raise HTTPException(status_code=404, detail="unknown or expired session")
            record.last_active = now
            return record


def _sheet_payload(sheet) -> dict:
    return {
        "id": sheet.id,
        "label": sheet.label,
        "description": sheet.description,
        "types": [{"id": type_id, "label": label} for type_id, label in sheet.types],
        "image": sheet.image_ref,
    }


def create_app(engine: Engine, session_ttl: float = DEFAULT_SESSION_TTL, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="convkg", version="1.0")
    sessions = SessionStore(ttl=session_ttl)

    @app.post("/v1/session", status_code=201)
    def create_session(body: SessionRequest | None = None) -> dict:
        speaker_id = body.speaker_id if body else None
        try:
            state = engine.new_state(speaker_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown speaker: {speaker_id}")
        now = time.monotonic()
        sessions.add(SessionRecord(state=state, created_at=now, last_active=now, speaker_id=speaker_id))
        return {"session_id": state.session_id}

    @app.post("/v1/session/{session_id}/ask")
    def session_ask(session_id: str, body: AskRequest) -> dict:
        record = sessions.get(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=422, detail="text must be non-empty")
        if not record.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="a previous ask on this session is still running")
        try:
            answer = engine.ask(record.state, body.text)
            turn = record.state.turns[-1]
            question_entities = {
                m.top_candidate() for m in turn.resolved_frame.name_mentions() if m.candidates
            }
            answer_entities = {v.text for v in answer.values if v.is_entity}
            terms = [
                t.lemma for t in turn.resolved_frame.raw_tokens if t.pos not in ("PUNCT",) and t.lemma
            ]
            excerpts = [
                {
                    "doc_id": paragraph.doc_id,
                    "title": paragraph.source_title,
                    "text": paragraph.text,
                    "score": score,
                }
                for paragraph, score in engine.excerpts(question_entities, answer_entities, terms, k=3)
            ]
            sheets = []
            for entity_id in sorted(question_entities | answer_entities):
                try:
                    sheets.append(_sheet_payload(engine.sheet(entity_id)))
                except KBNotFound:
                    continue
            payload = {
                "turn": turn.index,
                "values": [str(v) for v in answer.values],
                "value_labels": answer.value_labels,
                "short_text": answer.short_text,
                "long_text": answer.long_text,
                "confidence": answer.confidence,
                "source": answer.source,
                "provenance_triples": [
                    [t.subject, t.predicate, str(t.object)] for t in sorted(answer.provenance)
                ],
                "query_debug": answer.query_debug,
                "excerpts": excerpts,
                "entity_sheets": sheets,
                "clarification": answer.clarification,
            }
            return payload
        finally:
            record.lock.release()

    @app.post("/v1/session/{session_id}/reward")
    def session_reward(session_id: str, body: RewardRequest) -> dict:
        record = sessions.get(session_id)
        try:
            engine.reward(record.state, body.turn, body.reward)
        except RewardError as exc:
            status = {"NOT_FOUND": 404, "REWARD_ALREADY_SET": 409, "BAD_REWARD": 422}[exc.code]
            raise HTTPException(status_code=status, detail=str(exc))
        return {"ok": True}

    @app.get("/v1/entity/{entity_id}")
    def entity(entity_id: str, lang: str | None = None) -> dict:
        try:
            return _sheet_payload(engine.sheet(entity_id, lang))
        except KBNotFound:
            raise HTTPException(status_code=404, detail=f"unknown entity: {entity_id}")

    @app.get("/v1/docs")
    def docs_endpoint(entities: str = "", k: int = 3) -> dict:
        wanted = {e.strip() for e in entities.split(",") if e.strip()}
        if k < 1:
            raise HTTPException(status_code=422, detail="k must be >= 1")
        results = engine.excerpts(wanted, set(), [], k=k)
        return {
            "excerpts": [
                {
                    "doc_id": paragraph.doc_id,
                    "title": paragraph.source_title,
                    "text": paragraph.text,
                    "score": score,
                }
                for paragraph, score in results
            ]
        }

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "kb_stats": engine.kb.stats()}

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
