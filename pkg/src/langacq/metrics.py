"""Per-session acquisition metrics and their aggregation across trials."""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .language import FeedbackTokens, normalize_utterance, shared_words

if TYPE_CHECKING:
    from .transcript import Transcript

RECOVERY_MODES = ("distinct_retry", "valid_retry")
DEFAULT_RECOVERY_MODE = "distinct_retry"
METRIC_NAMES = ("tvr", "ac", "fr", "ttfk")


class TranscriptFormatError(ValueError):
    """A transcript violates the record schema; the message names the record."""


@dataclass(frozen=True)
class SessionMetrics:
    valid_turns: int
    total_turns: int
    feedback_opportunities: int
    feedback_recoveries: int
    adj_total: int
    adj_matches: int
    tvr: float
    fr: float
    ac: float
    ttfk: int
    completions: int = 0

    @classmethod
    def from_counts(
        cls,
        valid_turns: int,
        total_turns: int,
        feedback_opportunities: int,
        feedback_recoveries: int,
        adj_total: int,
        adj_matches: int,
        ttfk: int,
        completions: int = 0,
    ) -> "SessionMetrics":
        return cls(
            valid_turns=valid_turns,
            total_turns=total_turns,
            feedback_opportunities=feedback_opportunities,
            feedback_recoveries=feedback_recoveries,
            adj_total=adj_total,
            adj_matches=adj_matches,
            tvr=valid_turns / total_turns if total_turns > 0 else 0.0,
            fr=feedback_recoveries / feedback_opportunities if feedback_opportunities > 0 else 0.0,
            ac=adj_matches / adj_total if adj_total > 0 else 0.0,
            ttfk=ttfk,
            completions=completions,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SessionMetrics":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def _check_records(records: Sequence) -> None:
    if not records:
        raise TranscriptFormatError("transcript has no turn records")
    for pos, rec in enumerate(records):
        where = f"record {pos + 1}"
        if rec.index != pos + 1:
            raise TranscriptFormatError(f"{where}: index {rec.index}, expected {pos + 1}")
        expected_role = "environment" if pos % 2 == 0 else "agent"
        if rec.role != expected_role:
            raise TranscriptFormatError(f"{where}: role {rec.role!r}, expected {expected_role!r}")
        if rec.role == "agent":
            if not isinstance(rec.valid, bool):
                raise TranscriptFormatError(f"{where}: agent turn without a validity flag")
            if rec.event is not None:
                raise TranscriptFormatError(f"{where}: agent turn carries an event")
        else:
            if rec.event is None:
                raise TranscriptFormatError(f"{where}: environment turn without an event")
            if rec.valid is not None:
                raise TranscriptFormatError(f"{where}: environment turn carries a validity flag")


def _content(text: str, event: str, feedback: FeedbackTokens) -> tuple[str, ...] | None:
    """The enumerated sentence carried by an environment message, if any."""
    if event == "feedback_negative" or text == feedback.confusion:
        return None
    tokens = normalize_utterance(text).tokens
    if event != "opening" and tokens[:1] == (feedback.positive,):
        tokens = tokens[1:]
    return tokens


def score_session(transcript: "Transcript", recovery_mode: str | None = None) -> SessionMetrics:
    """Compute TVR, FR, AC and TTFK from the turn records alone.

    Adjacency is assessed for every valid agent turn against the most recent
    content sentence the environment spoke; confusion replies carry none and
    are skipped over.
    """
    mode = recovery_mode or transcript.recovery_mode or DEFAULT_RECOVERY_MODE
    if mode not in RECOVERY_MODES:
        raise ValueError(f"unknown recovery mode {mode!r}")
    records = transcript.records
    _check_records(records)
    feedback = transcript.feedback_tokens

    total = valid = opportunities = recoveries = adj_total = adj_matches = completions = 0
    ttfk = -1
    last_content: tuple[str, ...] | None = None
    for pos, rec in enumerate(records):
        if rec.role == "environment":
            if rec.completed or rec.event == "completion":
                completions += 1
            content = _content(rec.text, rec.event, feedback)
            if content is not None:
                last_content = content
            continue

        total += 1
        prev_env = records[pos - 1]
        if prev_env.event == "feedback_negative" and pos >= 3:
            opportunities += 1
            rejected = records[pos - 2]
            if mode == "valid_retry":
                recovered = rec.valid
            else:
                recovered = normalize_utterance(rec.text).text != normalize_utterance(rejected.text).text
            recoveries += int(recovered)
        if rec.valid:
            valid += 1
            if ttfk == -1:
                ttfk = total
            if last_content is not None:
                adj_total += 1
                adj_matches += int(shared_words(normalize_utterance(rec.text).tokens, last_content) > 0)

    return SessionMetrics.from_counts(
        valid, total, opportunities, recoveries, adj_total, adj_matches, ttfk, completions
    )


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class AggregateReport:
    label: str
    sessions: int
    summaries: dict[str, MetricSummary] = field(default_factory=dict)

    def __getitem__(self, metric: str) -> MetricSummary:
        return self.summaries[metric]

    @property
    def ttfk_count(self) -> int:
        return self.summaries["ttfk"].n


def _summary(values: Sequence[float]) -> MetricSummary:
    if not values:
        return MetricSummary(float("nan"), float("nan"), 0)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return MetricSummary(statistics.fmean(values), std, len(values))


def aggregate(metrics: Sequence[SessionMetrics], label: str) -> AggregateReport:
    """Mean and sample standard deviation per metric.

    TTFK is summarized only over sessions that produced a valid turn.
    """
    if not metrics:
        raise ValueError("cannot aggregate an empty list of sessions")
    summaries = {
        "tvr": _summary([m.tvr for m in metrics]),
        "ac": _summary([m.ac for m in metrics]),
        "fr": _summary([m.fr for m in metrics]),
        "ttfk": _summary([m.ttfk for m in metrics if m.ttfk != -1]),
        "completions": _summary([m.completions for m in metrics]),
    }
    return AggregateReport(label, len(metrics), summaries)


# -- tabular output ---------------------------------------------------------

_TRIAL_COLUMNS = ("label", "trial", "tvr", "ac", "fr", "ttfk", "completions")


def _fmt(x: float) -> str:
    if x != x:  # nan
        return "-"
    return f"{x:.3f}".rstrip("0").rstrip(".") if x != int(x) else str(int(x))


def report_rows(groups: Mapping[str, Sequence[SessionMetrics]]) -> list[list[str]]:
    """Per-trial rows followed by a mean / std block per label."""
    rows = [list(_TRIAL_COLUMNS) + ["ttfk_n"]]
    for label, items in groups.items():
        for i, m in enumerate(items, start=1):
            rows.append([label, str(i), _fmt(m.tvr), _fmt(m.ac), _fmt(m.fr), str(m.ttfk), str(m.completions), ""])
    for label, items in groups.items():
        agg = aggregate(items, label)
        for stat in ("mean", "std"):
            row = [label, stat]
            for name in ("tvr", "ac", "fr", "ttfk", "completions"):
                row.append(f"{getattr(agg[name], stat):.3f}" if agg[name].n else "-")
            row.append(str(agg.ttfk_count))
            rows.append(row)
    return rows


def format_csv(rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def format_text(rows: Sequence[Sequence[str]], note: str | None = None) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    if note:
        lines.insert(0, note)
    return "\n".join(lines) + "\n"
