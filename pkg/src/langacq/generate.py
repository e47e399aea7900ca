"""Synthesis of new enumerated languages with controllable lexical overlap."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import product

from .language import FeedbackTokens, LanguageSpec, Sentence, from_conversations
from .rng import RNG_NAME, SEED_MAX, Rng

CONSONANTS = "bcdfghjklmnprstvz"
VOWEL_POOL = "aeiou"

# Restarting a conversation after this many consecutive failed sentences
# avoids spinning on a dead-end predecessor.
_LOCAL_RETRIES = 64


class GenerationError(RuntimeError):
    """Raised when the word pool or retry budget cannot satisfy the constraints."""


@dataclass(frozen=True)
class GenParams:
    seed: int
    conversation_count: int = 25
    sentences_per_conversation: int = 4
    words_per_sentence: int = 3
    min_shared_words: int = 1
    lexicon_size: int = 40
    forbidden_words: frozenset[str] = field(default_factory=frozenset)
    enforce_unique_sentences: bool = True
    max_backtracks: int = 10000

    def __post_init__(self) -> None:
        object.__setattr__(self, "forbidden_words", frozenset(self.forbidden_words))
        if not 0 <= self.seed <= SEED_MAX:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in (
            "conversation_count",
            "sentences_per_conversation",
            "words_per_sentence",
            "min_shared_words",
            "lexicon_size",
            "max_backtracks",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.min_shared_words >= self.words_per_sentence:
            raise ValueError("min_shared_words must be smaller than words_per_sentence")

    def to_header(self) -> dict:
        d = asdict(self)
        d.pop("seed")
        d["forbidden_words"] = sorted(self.forbidden_words)
        return d


def cvcv_words() -> list[str]:
    return ["".join(p) for p in product(CONSONANTS, VOWEL_POOL, CONSONANTS, VOWEL_POOL)]


def _feedback_words(feedback: FeedbackTokens) -> set[str]:
    return {feedback.positive, *feedback.confusion.split()}


def _draw_lexicon(rng: Rng, size: int, forbidden: set[str] | frozenset[str]) -> list[str]:
    pool = [w for w in cvcv_words() if w not in forbidden]
    if size > len(pool):
        raise GenerationError(f"only {len(pool)} CVCV words available, {size} requested")
    return rng.sample(pool, size)


def gen_lexicon(
    seed: int,
    size: int,
    forbidden: set[str] | frozenset[str] = frozenset(),
    feedback: FeedbackTokens | None = None,
) -> list[str]:
    """Draw ``size`` distinct CVCV words avoiding ``forbidden`` and feedback words."""
    if size < 1:
        raise ValueError("size must be positive")
    banned = set(forbidden) | _feedback_words(feedback or FeedbackTokens())
    return _draw_lexicon(Rng(seed), size, banned)


def gen_language(
    params: GenParams,
    feedback: FeedbackTokens | None = None,
    name: str | None = None,
) -> LanguageSpec:
    """Build a language by randomized search with a bounded retry budget.

    Each sentence after the first copies between ``min_shared_words`` and
    ``words_per_sentence - 1`` words from its predecessor and fills the rest
    with lexicon words absent from the predecessor.
    """
    feedback = feedback or FeedbackTokens()
    rng = Rng(params.seed)
    banned = set(params.forbidden_words) | _feedback_words(feedback)
    lexicon = _draw_lexicon(rng, params.lexicon_size, banned)
    wps = params.words_per_sentence
    if len(lexicon) < 2 * wps - params.min_shared_words:
        raise GenerationError("lexicon too small to build adjacent sentences")

    confusion = feedback.confusion_sentence
    used: set[Sentence] = set()
    backtracks = 0

    def spend(n: int = 1) -> None:
        nonlocal backtracks
        backtracks += n
        if backtracks > params.max_backtracks:
            raise GenerationError(
                f"gave up after {params.max_backtracks} backtracks (seed {params.seed})"
            )

    def fresh(prev: Sentence | None) -> Sentence:
        if prev is None:
            return tuple(rng.sample(lexicon, wps))
        k = rng.between(params.min_shared_words, wps - 1)
        kept = rng.sample(prev, k)
        others = [w for w in lexicon if w not in prev]
        words = kept + rng.sample(others, wps - k)
        rng.shuffle(words)
        return tuple(words)

    def acceptable(s: Sentence, conv: list[Sentence]) -> bool:
        if s == confusion:
            return False
        if params.enforce_unique_sentences and (s in used or s in conv):
            return False
        return True

    conversations: list[tuple[Sentence, ...]] = []
    while len(conversations) < params.conversation_count:
        conv: list[Sentence] = []
        failures = 0
        while len(conv) < params.sentences_per_conversation:
            s = fresh(conv[-1] if conv else None)
            if acceptable(s, conv):
                conv.append(s)
                failures = 0
                continue
            spend()
            failures += 1
            if failures >= _LOCAL_RETRIES:
                conv, failures = [], 0
        conversations.append(tuple(conv))
        used.update(conv)

    header = {"rng": RNG_NAME, "seed": params.seed, "params": params.to_header()}
    return from_conversations(
        name or f"generated-{params.seed}",
        conversations,
        feedback,
        expected_conversations=params.conversation_count,
        sentences_per_conversation=params.sentences_per_conversation,
        words_per_sentence=wps,
        min_shared_words=params.min_shared_words,
        generator=header,
        strict=True,
    )


def lexical_overlap(a: LanguageSpec, b: LanguageSpec) -> list[str]:
    return sorted(a.lexicon & b.lexicon)


def check_disjoint(a: LanguageSpec, b: LanguageSpec) -> bool:
    return a.lexicon.isdisjoint(b.lexicon)
