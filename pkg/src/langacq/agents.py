"""Scripted reference agents.

Every agent exposes ``label`` and ``next_message(history)``, where ``history`` is
the raw dialogue so far as ``(role, text)`` pairs with role ``"environment"`` or
``"agent"``. Agents are free to return any text; the environment judges it.
"""

from __future__ import annotations

from typing import Callable, Protocol, Sequence

from .generate import cvcv_words
from .language import (
    FeedbackTokens,
    LanguageSpec,
    Sentence,
    normalize_utterance,
    sentence_text,
    successor,
)
from .rng import Rng

History = Sequence[tuple[str, str]]
SCRIPTED_KINDS = ("random_valid", "random_invalid", "babbler", "imitator")


class Agent(Protocol):
    label: str

    def next_message(self, history: History) -> str: ...


def content_of(text: str, feedback: FeedbackTokens) -> Sentence | None:
    """Sentence carried by an environment message; None for the confusion string."""
    tokens = normalize_utterance(text).tokens
    if tokens == feedback.confusion_sentence:
        return None
    if tokens[:1] == (feedback.positive,):
        tokens = tokens[1:]
    return tokens


class OracleAgent:
    """Plays the correct 2nd and 4th sentences by mirroring the bot's state.

    The dialogue is replayed from the start on every call, so the agent holds no
    state of its own and can be queried with any history prefix.
    """

    label = "oracle"

    def __init__(self, spec: LanguageSpec):
        self.spec = spec

    def _replay(self, history: History):
        fb = self.spec.feedback
        opening = second = third = last = None
        awaiting_fourth = False
        seen_env = False
        for role, text in history:
            if role == "agent":
                tokens = normalize_utterance(text).tokens
                if awaiting_fourth:
                    last = tokens
                else:
                    second = tokens
                continue
            content = content_of(text, fb)
            if not seen_env:
                seen_env = True
                if normalize_utterance(text).tokens[:1] == (fb.positive,):
                    # dropped into the middle of an attempt
                    third, awaiting_fourth = content, True
                else:
                    opening = content
                continue
            if content is None:
                awaiting_fourth, second = False, None
            elif not awaiting_fourth:
                third, awaiting_fourth = content, True
            elif (opening, second, third, last) in self.spec.conversation_set:
                opening, second, third, awaiting_fourth = content, None, None, False
            else:
                third = content
        return opening, second, third, awaiting_fourth

    def next_message(self, history: History) -> str:
        opening, second, third, awaiting_fourth = self._replay(history)
        convs = self.spec.conversations
        if awaiting_fourth:
            for c in convs:
                if c[0] == opening and c[1] == second and c[2] == third:
                    return sentence_text(c[3])
            for c in convs:
                if c[2] == third:
                    return sentence_text(c[3])
            fallback = third
        else:
            for c in convs:
                if c[0] == opening:
                    return sentence_text(c[1])
            fallback = opening
        if fallback in self.spec.sentences:
            nxt = successor(self.spec, fallback)
            if nxt is not None:
                return sentence_text(nxt)
        return sentence_text(convs[0][1])


class RandomValidAgent:
    label = "random_valid"

    def __init__(self, spec: LanguageSpec, seed: int = 0):
        self._sentences = sorted(spec.sentences)
        self._rng = Rng(seed)

    def next_message(self, history: History) -> str:
        return sentence_text(self._rng.choice(self._sentences))


class RandomInvalidAgent:
    """Three fresh CVCV words that the language never uses."""

    label = "random_invalid"

    def __init__(self, spec: LanguageSpec, seed: int = 0):
        banned = set(spec.lexicon) | {spec.feedback.positive}
        self._pool = [w for w in cvcv_words() if w not in banned]
        self._rng = Rng(seed)
        self._n = spec.words_per_sentence

    def next_message(self, history: History) -> str:
        return " ".join(self._rng.sample(self._pool, self._n))


class BabblerAgent:
    """Short strings of 1-4 words recombined from what the bot has said."""

    label = "babbler"

    def __init__(self, seed: int = 0, feedback: FeedbackTokens | None = None):
        self._rng = Rng(seed)
        self._fb = feedback or FeedbackTokens()

    def next_message(self, history: History) -> str:
        heard: list[str] = []
        for role, text in history:
            if role != "environment":
                continue
            for w in content_of(text, self._fb) or ():
                if w not in heard:
                    heard.append(w)
        if not heard:
            heard = [w for _, text in history for w in normalize_utterance(text).tokens] or ["baba"]
        n = self._rng.between(1, 4)
        return " ".join(self._rng.choice(heard) for _ in range(n))


class ImitatorAgent:
    """Echoes the last sentence the bot offered, ignoring confusion replies."""

    label = "imitator"

    def __init__(self, feedback: FeedbackTokens | None = None):
        self._fb = feedback or FeedbackTokens()

    def next_message(self, history: History) -> str:
        for role, text in reversed(history):
            if role == "environment":
                content = content_of(text, self._fb)
                if content is not None:
                    return sentence_text(content)
        return ""


class HumanAgent:
    """Terminal player: shows each bot line and reads the reply from a prompt."""

    label = "human"

    def __init__(
        self,
        read: Callable[[str], str] | None = None,
        write: Callable[[str], None] | None = None,
    ):
        # resolved lazily so a patched builtins.input is honoured
        self._read = read or (lambda prompt: input(prompt))
        self._write = write or print

    def next_message(self, history: History) -> str:
        if history and history[-1][0] == "environment":
            self._write(f"tribe> {history[-1][1]}")
        return self._read("you> ")


def oracle_agent(spec: LanguageSpec) -> OracleAgent:
    return OracleAgent(spec)


def scripted_agent(kind: str, spec: LanguageSpec, seed: int = 0) -> Agent:
    if kind == "random_valid":
        return RandomValidAgent(spec, seed)
    if kind == "random_invalid":
        return RandomInvalidAgent(spec, seed)
    if kind == "babbler":
        return BabblerAgent(seed, spec.feedback)
    if kind == "imitator":
        return ImitatorAgent(spec.feedback)
    raise ValueError(f"unknown scripted agent {kind!r}; choose from {SCRIPTED_KINDS}")
