"""HTTP facade exposing tribe-bot sessions to remote agents.

Endpoints (JSON bodies):

    POST /sessions                     {"seed"?, "t_max"?, "target_completions"?, "agent"?}
                                       -> 201 {"session_id", "opening", "language", "config"}
    POST /sessions/{id}/messages       {"text"}
                                       -> 200 {"reply", "valid", "event", "immediate_recovery",
                                               "completed", "completions", "agent_turns", "ended"}
    GET  /sessions/{id}/transcript     -> 200 {"header", "records", "footer"}
    GET  /sessions/{id}/metrics        -> 200 SessionMetrics fields

Errors: 404 unknown session, 409 message to an ended session, 400 malformed body.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .env import EnvConfig, SessionEndedError
from .harness import Session
from .language import LanguageSpec
from .metrics import DEFAULT_RECOVERY_MODE
from .rng import SEED_MAX
from .transcript import write_transcript


class CreateSession(BaseModel):
    seed: int | None = Field(default=None, ge=0, le=SEED_MAX)
    t_max: int | None = Field(default=None, ge=1)
    target_completions: int | None = Field(default=None, ge=1)
    agent: str = "remote"


class AgentMessage(BaseModel):
    text: str


class _Slot:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()


def create_app(
    spec: LanguageSpec,
    defaults: EnvConfig = EnvConfig(),
    *,
    transcript_dir: str | Path | None = None,
    recovery_mode: str = DEFAULT_RECOVERY_MODE,
) -> FastAPI:
    app = FastAPI(title="langacq tribe service")
    sessions: dict[str, _Slot] = {}
    registry_lock = threading.Lock()
    out_dir = Path(transcript_dir) if transcript_dir else None

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        errors = [{"loc": list(e.get("loc", ())), "msg": e.get("msg", ""), "type": e.get("type", "")} for e in exc.errors()]
        return JSONResponse(status_code=400, content={"detail": "malformed body", "errors": errors})

    def _slot(session_id: str) -> _Slot:
        with registry_lock:
            slot = sessions.get(session_id)
        if slot is None:
            raise HTTPException(404, f"unknown session {session_id}")
        return slot

    @app.post("/sessions", status_code=201)
    def create(body: CreateSession | None = None):
        body = body or CreateSession()
        cfg = replace(
            defaults,
            **{k: v for k, v in body.model_dump().items() if k in ("seed", "t_max", "target_completions") and v is not None},
        )
        session = Session(spec, cfg, body.agent, recovery_mode=recovery_mode)
        sid = uuid.uuid4().hex
        with registry_lock:
            sessions[sid] = _Slot(session)
        return {
            "session_id": sid,
            "opening": session.opening,
            "language": spec.name,
            "config": session.transcript.config,
        }

    @app.post("/sessions/{session_id}/messages")
    def message(session_id: str, body: AgentMessage):
        slot = _slot(session_id)
        with slot.lock:
            s = slot.session
            if s.ended:
                raise HTTPException(409, "session has ended")
            try:
                out = s.send(body.text)
            except SessionEndedError:
                raise HTTPException(409, "session has ended") from None
            if s.ended and out_dir is not None:
                write_transcript(s.transcript, out_dir / f"{session_id}.jsonl")
            return {
                "reply": out.reply,
                "valid": out.valid,
                "event": out.event.value,
                "immediate_recovery": out.immediate_recovery,
                "completed": out.completed,
                "completions": s.state.completions,
                "agent_turns": s.state.agent_turns,
                "ended": s.ended,
            }

    @app.get("/sessions/{session_id}/transcript")
    def transcript(session_id: str):
        slot = _slot(session_id)
        with slot.lock:
            return slot.session.transcript.to_json()

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        slot = _slot(session_id)
        with slot.lock:
            t = slot.session.transcript
            return (t.metrics or t.score()).to_dict()

    return app
