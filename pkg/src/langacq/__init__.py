"""Constructed-language acquisition environment and evaluation harness."""

from .agents import OracleAgent, oracle_agent, scripted_agent
from .env import EnvConfig, EnvState, Event, SessionEndedError, TurnOutcome, is_ended, new_session, step
from .generate import GenerationError, GenParams, check_disjoint, gen_language, gen_lexicon
from .harness import Session, run_session
from .language import (
    FeedbackTokens,
    LanguageConstraintError,
    LanguageFormatError,
    LanguageSpec,
    adjacency,
    bundled_language,
    check_language,
    conversation_validity,
    load_language,
    normalize_utterance,
    resolve_language,
    sentence_validity,
    successor,
    two_syllable,
)
from .metrics import SessionMetrics, aggregate, score_session
from .transcript import Transcript, TurnRecord, read_transcript, write_transcript

__version__ = "0.1.0"
