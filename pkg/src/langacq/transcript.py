"""Session transcripts and their line-delimited JSON encoding.

Layout, one JSON object per line::

    {"record": "header", "language": ..., "agent": ..., "config": {...}, "recovery_mode": ..., "feedback": {...}}
    {"index": 1, "role": "environment", "text": ..., "valid": null, "event": "opening", "elapsed_ms": 0}
    {"index": 2, "role": "agent", "text": ..., "valid": false, "event": null, "elapsed_ms": 812}
    ...
    {"record": "footer", "status": "session_end" | "aborted", "abort_reason": null, "metrics": {...}}

Environment records that closed a conversation also carry ``"completed": true``.
Unknown keys on any line survive a read/write round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable

from .language import FeedbackTokens
from .metrics import DEFAULT_RECOVERY_MODE, SessionMetrics, TranscriptFormatError, score_session

_TURN_KEYS = ("index", "role", "text", "valid", "event", "elapsed_ms")
_HEADER_KEYS = ("record", "language", "agent", "config", "recovery_mode", "feedback")
_FOOTER_KEYS = ("record", "status", "abort_reason", "metrics")
ROLES = ("environment", "agent")


@dataclass
class TurnRecord:
    index: int
    role: str
    text: str
    valid: bool | None = None
    event: str | None = None
    elapsed_ms: int = 0
    completed: bool = False
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        d = {k: getattr(self, k) for k in _TURN_KEYS}
        if self.completed:
            d["completed"] = True
        d.update(self.extra)
        return d


@dataclass
class Transcript:
    language: str
    agent: str
    config: dict[str, Any] = field(default_factory=dict)
    recovery_mode: str = DEFAULT_RECOVERY_MODE
    feedback: dict[str, str] = field(default_factory=lambda: {"positive": "koro", "confusion": "moko lira bani"})
    records: list[TurnRecord] = field(default_factory=list)
    metrics: SessionMetrics | None = None
    status: str | None = None
    abort_reason: str | None = None
    header_extra: dict[str, Any] = field(default_factory=dict)
    footer_extra: dict[str, Any] = field(default_factory=dict)

    @property
    def feedback_tokens(self) -> FeedbackTokens:
        return FeedbackTokens(**self.feedback)

    @property
    def agent_records(self) -> list[TurnRecord]:
        return [r for r in self.records if r.role == "agent"]

    @property
    def aborted(self) -> bool:
        return self.status == "aborted"

    def append(self, role: str, text: str, elapsed_ms: int, **kw: Any) -> TurnRecord:
        rec = TurnRecord(len(self.records) + 1, role, text, elapsed_ms=elapsed_ms, **kw)
        self.records.append(rec)
        return rec

    def score(self, recovery_mode: str | None = None) -> SessionMetrics:
        return score_session(self, recovery_mode)

    def lines(self) -> list[dict[str, Any]]:
        header = {
            "record": "header",
            "language": self.language,
            "agent": self.agent,
            "config": self.config,
            "recovery_mode": self.recovery_mode,
            "feedback": self.feedback,
            **self.header_extra,
        }
        footer = {
            "record": "footer",
            "status": self.status,
            "abort_reason": self.abort_reason,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            **self.footer_extra,
        }
        return [header, *(r.to_dict() for r in self.records), footer]

    def to_json(self) -> dict[str, Any]:
        """Single-object form used by the network service."""
        header, *turns, footer = self.lines()
        return {"header": header, "records": turns, "footer": footer}


def write_transcript(t: Transcript, sink: IO[str] | str | Path) -> None:
    if isinstance(sink, (str, Path)):
        Path(sink).parent.mkdir(parents=True, exist_ok=True)
        with open(sink, "w", encoding="utf-8") as f:
            write_transcript(t, f)
        return
    for line in t.lines():
        sink.write(json.dumps(line, ensure_ascii=False) + "\n")


def _parse_turn(d: dict[str, Any], lineno: int) -> TurnRecord:
    missing = [k for k in _TURN_KEYS if k not in d]
    if missing:
        raise TranscriptFormatError(f"line {lineno}: turn record missing {missing}")
    if d["role"] not in ROLES:
        raise TranscriptFormatError(f"line {lineno}: unknown role {d['role']!r}")
    if not isinstance(d["index"], int) or not isinstance(d["text"], str):
        raise TranscriptFormatError(f"line {lineno}: index must be an integer and text a string")
    if not isinstance(d["elapsed_ms"], int) or d["elapsed_ms"] < 0:
        raise TranscriptFormatError(f"line {lineno}: elapsed_ms must be a non-negative integer")
    if d["valid"] is not None and not isinstance(d["valid"], bool):
        raise TranscriptFormatError(f"line {lineno}: valid must be a boolean or null")
    extra = {k: v for k, v in d.items() if k not in _TURN_KEYS and k != "completed"}
    return TurnRecord(
        index=d["index"],
        role=d["role"],
        text=d["text"],
        valid=d["valid"],
        event=d["event"],
        elapsed_ms=d["elapsed_ms"],
        completed=bool(d.get("completed", False)),
        extra=extra,
    )


def read_transcript(source: IO[str] | str | Path | Iterable[str]) -> Transcript:
    """Parse a transcript stream; schema problems name the offending line."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            return read_transcript(f)

    t: Transcript | None = None
    footer_seen = False
    last_good = 0
    for lineno, raw in enumerate(source, start=1):
        if not raw.strip():
            continue
        if footer_seen:
            raise TranscriptFormatError(f"line {lineno}: content after footer")
        try:
            d = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TranscriptFormatError(
                f"line {lineno}: not valid JSON ({exc.msg}); last good line {last_good}"
            ) from exc
        if not isinstance(d, dict):
            raise TranscriptFormatError(f"line {lineno}: expected a JSON object")

        kind = d.get("record")
        if t is None:
            if kind != "header":
                raise TranscriptFormatError(f"line {lineno}: first record must be the header")
            for k in ("language", "agent"):
                if not isinstance(d.get(k), str):
                    raise TranscriptFormatError(f"line {lineno}: header field {k!r} must be a string")
            t = Transcript(
                language=d["language"],
                agent=d["agent"],
                config=dict(d.get("config") or {}),
                recovery_mode=d.get("recovery_mode") or DEFAULT_RECOVERY_MODE,
                feedback=dict(d.get("feedback") or Transcript.__dataclass_fields__["feedback"].default_factory()),
                header_extra={k: v for k, v in d.items() if k not in _HEADER_KEYS},
            )
        elif kind == "footer":
            if d.get("status") not in ("session_end", "aborted"):
                raise TranscriptFormatError(f"line {lineno}: footer status must be session_end or aborted")
            t.status = d["status"]
            t.abort_reason = d.get("abort_reason")
            if d.get("metrics") is not None:
                try:
                    t.metrics = SessionMetrics.from_dict(d["metrics"])
                except (KeyError, TypeError) as exc:
                    raise TranscriptFormatError(f"line {lineno}: malformed metrics ({exc})") from exc
            t.footer_extra = {k: v for k, v in d.items() if k not in _FOOTER_KEYS}
            footer_seen = True
        elif kind is not None:
            raise TranscriptFormatError(f"line {lineno}: unknown record kind {kind!r}")
        else:
            rec = _parse_turn(d, lineno)
            if rec.index != len(t.records) + 1:
                raise TranscriptFormatError(f"line {lineno}: index {rec.index} breaks the sequence")
            t.records.append(rec)
        last_good = lineno

    if t is None:
        raise TranscriptFormatError("empty transcript")
    if not footer_seen:
        raise TranscriptFormatError(f"transcript truncated: no footer; last good line {last_good}")
    return t
