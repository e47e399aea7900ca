"""Drive agent sessions against the tribe bot and record transcripts."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from typing import Any

from .agents import Agent
from .env import EnvConfig, Event, TurnOutcome, is_ended, new_session, step
from .language import LanguageSpec
from .metrics import DEFAULT_RECOVERY_MODE, RECOVERY_MODES
from .transcript import Transcript

log = logging.getLogger(__name__)

DEFAULT_TURN_TIMEOUT_S = 60.0


def _ms(start: float) -> int:
    return max(0, round((time.perf_counter() - start) * 1000))


class Session:
    """One environment session plus the transcript that records it.

    Shared by the in-process runner and the network service so both produce the
    same records for the same messages.
    """

    def __init__(
        self,
        spec: LanguageSpec,
        config: EnvConfig = EnvConfig(),
        agent_label: str = "agent",
        *,
        recovery_mode: str = DEFAULT_RECOVERY_MODE,
        prompt_variant: str | None = None,
        extra_config: dict[str, Any] | None = None,
    ):
        if recovery_mode not in RECOVERY_MODES:
            raise ValueError(f"unknown recovery mode {recovery_mode!r}")
        self.spec = spec
        start = time.perf_counter()
        self.state, self.opening = new_session(spec, config)
        self.transcript = Transcript(
            language=spec.name,
            agent=agent_label,
            config={
                "t_max": config.t_max,
                "target_completions": config.target_completions,
                "seed": config.seed,
                "prompt_variant": prompt_variant,
                **(extra_config or {}),
            },
            recovery_mode=recovery_mode,
            feedback={"positive": spec.feedback.positive, "confusion": spec.feedback.confusion},
        )
        self.transcript.append("environment", self.opening, _ms(start), event=Event.OPENING.value)
        self.last_outcome: TurnOutcome | None = None

    @property
    def ended(self) -> bool:
        return self.transcript.status is not None or is_ended(self.state)

    @property
    def history(self) -> list[tuple[str, str]]:
        return [(r.role, r.text) for r in self.transcript.records]

    def send(self, text: str, agent_elapsed_ms: int = 0) -> TurnOutcome:
        """Feed one agent message; raises SessionEndedError once the session is over."""
        start = time.perf_counter()
        outcome = step(self.state, text)
        env_ms = _ms(start)
        self.transcript.append("agent", text, agent_elapsed_ms, valid=outcome.valid)
        self.transcript.append(
            "environment", outcome.reply, env_ms, event=outcome.event.value, completed=outcome.completed
        )
        self.last_outcome = outcome
        if outcome.event == Event.SESSION_END:
            self.finish()
        return outcome

    def finish(self, aborted: str | None = None) -> Transcript:
        t = self.transcript
        if t.status is None:
            t.status = "aborted" if aborted else "session_end"
            t.abort_reason = aborted
            t.metrics = t.score()
        return t


def run_session(
    agent: Agent,
    spec: LanguageSpec,
    config: EnvConfig = EnvConfig(),
    *,
    timeout_s: float | None = DEFAULT_TURN_TIMEOUT_S,
    recovery_mode: str = DEFAULT_RECOVERY_MODE,
    prompt_variant: str | None = None,
) -> Transcript:
    """Alternate agent and environment turns until the session ends.

    An agent that raises or exceeds ``timeout_s`` aborts the session; the partial
    transcript is returned with status ``aborted``.
    """
    session = Session(
        spec,
        config,
        getattr(agent, "label", type(agent).__name__),
        recovery_mode=recovery_mode,
        prompt_variant=prompt_variant,
    )
    pool = ThreadPoolExecutor(max_workers=1) if timeout_s is not None else None
    try:
        while not session.ended:
            history = session.history
            start = time.perf_counter()
            try:
                if pool is None:
                    text = agent.next_message(history)
                else:
                    text = pool.submit(agent.next_message, history).result(timeout=timeout_s)
            except FutureTimeout:
                log.warning("agent %s timed out after %.1fs", session.transcript.agent, timeout_s)
                return session.finish(aborted=f"agent timeout after {timeout_s}s")
            except Exception as exc:
                log.warning("agent %s failed: %s", session.transcript.agent, exc)
                return session.finish(aborted=f"agent error: {type(exc).__name__}: {exc}")
            if not isinstance(text, str):
                return session.finish(aborted=f"agent returned {type(text).__name__}, not text")
            session.send(text, _ms(start))
        return session.finish()
    finally:
        if pool is not None:
            pool.shutdown(wait=False, cancel_futures=True)
