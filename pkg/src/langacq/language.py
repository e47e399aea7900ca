"""Formal language objects and their decision procedures.

A language is exhaustive by enumeration: a fixed list of conversations, each an
ordered run of sentences, each sentence an ordered run of bisyllabic words.
Everything else (lexicon, sentence set, successor map) is derived from that list.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

VOWELS = frozenset("aeiou")
_WORD_RE = re.compile(r"[a-z]+")
_VOWEL_RUN_RE = re.compile(r"[aeiou]+")

BUNDLED_LANGUAGES = ("tinkatongue", "zingaloom")

Sentence = tuple[str, ...]
Conversation = tuple[Sentence, ...]


class LanguageError(Exception):
    """Base class for language loading failures."""


class LanguageFormatError(LanguageError):
    """The document could not be parsed into the expected structure."""


class LanguageConstraintError(LanguageError):
    """A structural invariant failed; ``location`` points at the offending item."""

    def __init__(self, message: str, location: str):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass(frozen=True)
class Utterance:
    """Result of normalizing raw agent text."""

    tokens: tuple[str, ...]
    malformed: bool

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def normalize_utterance(raw: str) -> Utterance:
    """Lowercase, trim and collapse whitespace, then split into tokens.

    Tokens containing anything outside a-z mark the utterance malformed; this is
    a value, never an exception.
    """
    tokens = tuple(raw.lower().split())
    malformed = any(_WORD_RE.fullmatch(t) is None for t in tokens)
    return Utterance(tokens, malformed)


def two_syllable(word: str) -> bool:
    """True iff ``word`` has exactly two maximal vowel runs."""
    return len(_VOWEL_RUN_RE.findall(word)) == 2


def is_word(text: str) -> bool:
    return _WORD_RE.fullmatch(text) is not None and two_syllable(text)


def adjacency(u: Iterable[str], v: Iterable[str]) -> bool:
    """Two sentences are adjacent when their word sets intersect."""
    return not set(u).isdisjoint(v)


def shared_words(u: Iterable[str], v: Iterable[str]) -> int:
    return len(set(u) & set(v))


def as_sentence(text: str | Sequence[str]) -> Sentence:
    if isinstance(text, str):
        return normalize_utterance(text).tokens
    return tuple(text)


def sentence_text(sentence: Sentence) -> str:
    return " ".join(sentence)


@dataclass(frozen=True)
class FeedbackTokens:
    positive: str = "koro"
    confusion: str = "moko lira bani"

    @property
    def confusion_sentence(self) -> Sentence:
        return as_sentence(self.confusion)


@dataclass(frozen=True)
class Violation:
    """One failed constraint found by :func:`check_language`."""

    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


@dataclass(frozen=True, eq=False)
class LanguageSpec:
    """An enumerated artificial language.

    Immutable after construction; build instances with :func:`load_language`
    or :func:`from_conversations` so that the derived tables get populated.
    """

    name: str
    conversations: tuple[Conversation, ...]
    feedback: FeedbackTokens = FeedbackTokens()
    sentences_per_conversation: int = 4
    words_per_sentence: int = 3
    min_shared_words: int = 1
    generator: Mapping[str, Any] | None = None
    lexicon: frozenset[str] = field(init=False)
    sentences: frozenset[Sentence] = field(init=False)
    conversation_set: frozenset[Conversation] = field(init=False)
    _successors: Mapping[Sentence, Sentence | None] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        sentences = {s for conv in self.conversations for s in conv}
        object.__setattr__(self, "sentences", frozenset(sentences))
        object.__setattr__(self, "lexicon", frozenset(w for s in sentences for w in s))
        object.__setattr__(self, "conversation_set", frozenset(self.conversations))
        object.__setattr__(self, "_successors", _build_successors(self.conversations))

    @property
    def sorted_lexicon(self) -> list[str]:
        return sorted(self.lexicon)

    def is_valid_sentence(self, tokens: Sequence[str]) -> bool:
        return tuple(tokens) in self.sentences

    def to_document(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"name": self.name}
        if self.generator is not None:
            doc["generator"] = dict(self.generator)
        doc["feedback"] = {"positive": self.feedback.positive, "confusion": self.feedback.confusion}
        doc["conversations"] = [[sentence_text(s) for s in conv] for conv in self.conversations]
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"


def _build_successors(conversations: Sequence[Conversation]) -> dict[Sentence, Sentence | None]:
    # Scan in (conversation index, position) order; first non-final hit wins.
    succ: dict[Sentence, Sentence | None] = {}
    for conv in conversations:
        for pos, s in enumerate(conv):
            nxt = conv[pos + 1] if pos + 1 < len(conv) else None
            if succ.get(s) is None:
                succ[s] = nxt
    return succ


def sentence_validity(spec: LanguageSpec, tokens: Utterance | Sequence[str] | str) -> bool:
    """Membership of a tokenized utterance in the enumerated sentence set."""
    if isinstance(tokens, str):
        tokens = normalize_utterance(tokens)
    if isinstance(tokens, Utterance):
        if tokens.malformed:
            return False
        tokens = tokens.tokens
    if len(tokens) != spec.words_per_sentence:
        return False
    return spec.is_valid_sentence(tokens)


def conversation_validity(spec: LanguageSpec, quad: Sequence[Sentence | str]) -> bool:
    return tuple(as_sentence(s) for s in quad) in spec.conversation_set


def successor(spec: LanguageSpec, s: Sentence | str) -> Sentence | None:
    """The sentence following ``s`` in its first non-final occurrence.

    Raises KeyError when ``s`` is not in the sentence set.
    """
    s = as_sentence(s)
    if s not in spec.sentences:
        raise KeyError(f"not a sentence of {spec.name}: {sentence_text(s)!r}")
    return spec._successors[s]


def from_conversations(
    name: str,
    conversations: Iterable[Iterable[str | Sequence[str]]],
    feedback: FeedbackTokens | None = None,
    *,
    expected_conversations: int | None = None,
    sentences_per_conversation: int = 4,
    words_per_sentence: int = 3,
    min_shared_words: int = 1,
    generator: Mapping[str, Any] | None = None,
    strict: bool = False,
) -> LanguageSpec:
    """Validate raw conversations and build a :class:`LanguageSpec`.

    Word shape, sentence length, conversation length, conversation count and
    feedback-token hygiene are always enforced. Adjacency is enforced only when
    ``strict`` is set; otherwise use :func:`check_language` to list breaches.
    """
    feedback = feedback or FeedbackTokens()
    convs: list[Conversation] = []
    for ci, raw_conv in enumerate(conversations, start=1):
        raw_conv = list(raw_conv)
        if len(raw_conv) != sentences_per_conversation:
            raise LanguageConstraintError(
                f"expected {sentences_per_conversation} sentences, found {len(raw_conv)}",
                f"conversation {ci}",
            )
        conv = []
        for si, raw in enumerate(raw_conv, start=1):
            where = f"conversation {ci}, sentence {si}"
            if isinstance(raw, str):
                if raw != " ".join(raw.split()) or not raw:
                    raise LanguageConstraintError(f"irregular spacing in {raw!r}", where)
                words = tuple(raw.split(" "))
            else:
                words = tuple(raw)
            if len(words) != words_per_sentence:
                raise LanguageConstraintError(
                    f"expected {words_per_sentence} words, found {len(words)} in {' '.join(words)!r}",
                    where,
                )
            for w in words:
                if _WORD_RE.fullmatch(w) is None:
                    raise LanguageConstraintError(f"word {w!r} has characters outside a-z", where)
                if not two_syllable(w):
                    raise LanguageConstraintError(f"word {w!r} is not bisyllabic", where)
            conv.append(words)
        convs.append(tuple(conv))

    if expected_conversations is not None and len(convs) != expected_conversations:
        raise LanguageConstraintError(
            f"expected {expected_conversations} conversations, found {len(convs)}", "conversations"
        )
    if not convs:
        raise LanguageConstraintError("no conversations", "conversations")

    spec = LanguageSpec(
        name=name,
        conversations=tuple(convs),
        feedback=feedback,
        sentences_per_conversation=sentences_per_conversation,
        words_per_sentence=words_per_sentence,
        min_shared_words=min_shared_words,
        generator=generator,
    )
    if _WORD_RE.fullmatch(feedback.positive) is None:
        raise LanguageConstraintError(f"positive token {feedback.positive!r} is not a word", "feedback")
    if feedback.positive in spec.lexicon:
        raise LanguageConstraintError(f"positive token {feedback.positive!r} is in the lexicon", "feedback")
    if feedback.confusion_sentence in spec.sentences:
        raise LanguageConstraintError(
            f"confusion string {feedback.confusion!r} is a sentence of the language", "feedback"
        )
    if strict:
        problems = adjacency_violations(spec)
        if problems:
            raise LanguageConstraintError(problems[0].message, problems[0].location)
    return spec


def adjacency_violations(spec: LanguageSpec) -> list[Violation]:
    out = []
    for ci, conv in enumerate(spec.conversations, start=1):
        for k in range(len(conv) - 1):
            n = shared_words(conv[k], conv[k + 1])
            if n < spec.min_shared_words:
                out.append(
                    Violation(
                        f"conversation {ci}, sentences {k + 1}-{k + 2}",
                        f"{sentence_text(conv[k])!r} and {sentence_text(conv[k + 1])!r} "
                        f"share {n} word(s), need {spec.min_shared_words}",
                    )
                )
    return out


def check_language(spec: LanguageSpec) -> list[Violation]:
    """All constraint breaches that loading tolerates (currently adjacency)."""
    return adjacency_violations(spec)


def load_language(document: str | bytes | Mapping[str, Any], *, strict: bool = False) -> LanguageSpec:
    """Parse a language document (JSON text or an already-decoded mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise LanguageFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise LanguageFormatError("top level must be an object")

    name = document.get("name")
    if not isinstance(name, str) or not name:
        raise LanguageFormatError("field 'name' must be a non-empty string")
    fb = document.get("feedback", {})
    if not isinstance(fb, Mapping):
        raise LanguageFormatError("field 'feedback' must be an object")
    positive = fb.get("positive", FeedbackTokens.positive)
    confusion = fb.get("confusion", FeedbackTokens.confusion)
    if not isinstance(positive, str) or not isinstance(confusion, str):
        raise LanguageFormatError("feedback tokens must be strings")
    convs = document.get("conversations")
    if not isinstance(convs, list) or not all(
        isinstance(c, list) and all(isinstance(s, str) for s in c) for c in convs
    ):
        raise LanguageFormatError("field 'conversations' must be a list of lists of strings")

    generator = document.get("generator")
    shape: dict[str, int] = {}
    expected = 25
    if generator is not None:
        if not isinstance(generator, Mapping):
            raise LanguageFormatError("field 'generator' must be an object")
        params = generator.get("params", {})
        expected = int(params.get("conversation_count", expected))
        for key in ("sentences_per_conversation", "words_per_sentence", "min_shared_words"):
            if key in params:
                shape[key] = int(params[key])

    return from_conversations(
        name,
        convs,
        FeedbackTokens(positive, confusion),
        expected_conversations=expected,
        generator=generator,
        strict=strict,
        **shape,
    )


def load_language_file(path: str | Path, *, strict: bool = False) -> LanguageSpec:
    return load_language(Path(path).read_text(encoding="utf-8"), strict=strict)


def bundled_language(name: str) -> LanguageSpec:
    """Load one of the languages shipped with the package."""
    if name not in BUNDLED_LANGUAGES:
        raise KeyError(f"unknown bundled language {name!r}; choose from {BUNDLED_LANGUAGES}")
    text = resources.files("langacq.data.languages").joinpath(f"{name}.json").read_text("utf-8")
    return load_language(text)


def resolve_language(ref: str | Path) -> LanguageSpec:
    """Accept either a bundled language name or a path to a language file."""
    if isinstance(ref, str) and ref in BUNDLED_LANGUAGES:
        return bundled_language(ref)
    return load_language_file(ref)
