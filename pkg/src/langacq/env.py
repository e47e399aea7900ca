"""The tribe bot: a deterministic state machine that speaks one enumerated language.

A session opens with the first sentence of a randomly drawn conversation. The
agent is expected to supply the 2nd and 4th sentences; the bot supplies the 3rd
and, on completion, the opening of a newly drawn conversation. Any message that
is not an enumerated sentence gets the confusion string and resets the attempt.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .language import (
    Conversation,
    LanguageSpec,
    Sentence,
    conversation_validity,
    normalize_utterance,
    sentence_text,
    sentence_validity,
)
from .rng import Rng


class Stage(str, enum.Enum):
    AWAIT_SECOND = "await_second"
    AWAIT_FOURTH = "await_fourth"


class Event(str, enum.Enum):
    OPENING = "opening"
    FEEDBACK_NEGATIVE = "feedback_negative"
    FEEDBACK_POSITIVE = "feedback_positive"
    COMPLETION = "completion"
    SESSION_END = "session_end"


class SessionEndedError(RuntimeError):
    """Raised when stepping a session that has already ended."""


@dataclass(frozen=True)
class EnvConfig:
    t_max: int = 100
    target_completions: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.t_max < 1 or self.target_completions < 1:
            raise ValueError("t_max and target_completions must be at least 1")


@dataclass
class EnvState:
    spec: LanguageSpec
    config: EnvConfig
    rng: Rng
    active_conversation: int
    stage: Stage = Stage.AWAIT_SECOND
    recorded_second: Sentence | None = None
    completions: int = 0
    agent_turns: int = 0
    last_event: Event = Event.OPENING

    @property
    def conversation(self) -> Conversation:
        return self.spec.conversations[self.active_conversation]

    @property
    def rng_state(self) -> object:
        return self.rng.getstate()


@dataclass(frozen=True)
class TurnOutcome:
    valid: bool
    event: Event
    reply: str
    immediate_recovery: bool
    # True whenever this step closed a conversation, including the final one
    # whose event is reported as session_end.
    completed: bool = False


def _draw(state_rng: Rng, spec: LanguageSpec) -> int:
    return state_rng.below(len(spec.conversations))


def new_session(spec: LanguageSpec, config: EnvConfig = EnvConfig()) -> tuple[EnvState, str]:
    if spec.sentences_per_conversation != 4:
        raise ValueError("the tribe bot plays four-sentence conversations only")
    rng = Rng(config.seed)
    state = EnvState(spec=spec, config=config, rng=rng, active_conversation=_draw(rng, spec))
    opening = sentence_text(state.conversation[0])
    return state, opening


def is_ended(state: EnvState) -> bool:
    return (
        state.completions >= state.config.target_completions
        or state.agent_turns >= state.config.t_max
    )


def _positive(spec: LanguageSpec, sentence: Sentence) -> str:
    return f"{spec.feedback.positive} {sentence_text(sentence)}"


def _steer(state: EnvState, second: Sentence) -> None:
    """Follow the agent into a sibling conversation sharing the same opening.

    Openings are not unique (two conversations may start identically); the agent
    cannot tell them apart, so a correct 2nd sentence for any of them selects it.
    """
    conv = state.conversation
    if conv[1] == second:
        return
    for idx, other in enumerate(state.spec.conversations):
        if other[0] == conv[0] and other[1] == second:
            state.active_conversation = idx
            return


def step(state: EnvState, agent_text: str) -> TurnOutcome:
    if is_ended(state):
        raise SessionEndedError("session has ended")
    spec = state.spec
    state.agent_turns += 1
    utterance = normalize_utterance(agent_text)
    valid = sentence_validity(spec, utterance)
    recovery = valid and state.last_event == Event.FEEDBACK_NEGATIVE
    completed = False

    if not valid:
        state.stage = Stage.AWAIT_SECOND
        state.recorded_second = None
        event, reply = Event.FEEDBACK_NEGATIVE, spec.feedback.confusion
    elif state.stage == Stage.AWAIT_SECOND:
        _steer(state, utterance.tokens)
        state.recorded_second = utterance.tokens
        state.stage = Stage.AWAIT_FOURTH
        event, reply = Event.FEEDBACK_POSITIVE, _positive(spec, state.conversation[2])
    else:
        conv = state.conversation
        quad = (conv[0], state.recorded_second, conv[2], utterance.tokens)
        if conversation_validity(spec, quad):
            completed = True
            state.completions += 1
            state.active_conversation = _draw(state.rng, spec)
            state.stage = Stage.AWAIT_SECOND
            state.recorded_second = None
            event, reply = Event.COMPLETION, _positive(spec, state.conversation[0])
        else:
            event, reply = Event.FEEDBACK_POSITIVE, _positive(spec, conv[2])

    state.last_event = event
    if is_ended(state):
        event = Event.SESSION_END
    return TurnOutcome(valid, event, reply, recovery, completed)
