"""Command-line entry point.

Exit codes: 0 success, 1 validation or constraint failure, 2 usage error,
3 transport or agent failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections import defaultdict
from pathlib import Path

from .agents import SCRIPTED_KINDS, HumanAgent, oracle_agent, scripted_agent
from .env import EnvConfig
from .generate import GenerationError, GenParams, gen_language, lexical_overlap
from .harness import DEFAULT_TURN_TIMEOUT_S, run_session
from .language import LanguageError, check_language, resolve_language
from .metrics import RECOVERY_MODES, TranscriptFormatError, format_csv, format_text, report_rows
from .transcript import read_transcript, write_transcript

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_TRANSPORT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _env_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--language", default="tinkatongue", help="bundled language name or path to a language file")
    p.add_argument("--t-max", type=int, default=100)
    p.add_argument("--target-completions", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--recovery-mode", choices=RECOVERY_MODES, default="distinct_retry")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="langacq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    lang = sub.add_parser("lang", help="generate, check or compare language files")
    lsub = lang.add_subparsers(dest="action", required=True)
    gen = lsub.add_parser("gen", help="generate a new language")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--disjoint-from", action="append", default=[], metavar="LANGUAGE")
    gen.add_argument("--name")
    gen.add_argument("--conversations", type=int, default=25)
    gen.add_argument("--lexicon-size", type=int, default=40)
    gen.add_argument("--min-shared", type=int, default=1)
    gen.add_argument("--max-backtracks", type=int, default=10000)
    gen.add_argument("--allow-duplicates", action="store_true", help="do not force unique sentences")
    gen.add_argument("--out", help="output file (default: stdout)")
    check = lsub.add_parser("check", help="validate a language")
    check.add_argument("language")
    diff = lsub.add_parser("diff", help="report lexical overlap between two languages")
    diff.add_argument("a")
    diff.add_argument("b")

    run = sub.add_parser("run", help="run scripted or remote agents for several trials")
    _env_args(run)
    run.add_argument("--agent", required=True, help=f"oracle, {', '.join(SCRIPTED_KINDS)}, human or an endpoint label")
    run.add_argument("--endpoints", help="endpoints file for remote agents")
    run.add_argument("--prompt-variant", choices=("full", "reduced"), help="override the endpoint's prompt")
    run.add_argument("--trials", type=int, default=10)
    run.add_argument("--timeout", type=float, default=DEFAULT_TURN_TIMEOUT_S, help="per-turn agent timeout, seconds")
    run.add_argument("--out", default="runs", help="output directory")
    run.add_argument("--format", default="text,csv", help="comma-separated report formats: text, csv")

    rep = sub.add_parser("report", help="aggregate transcripts into metric tables")
    rep.add_argument("paths", nargs="+")
    rep.add_argument("--group-by", choices=("agent", "language", "agent+language"), default="agent")
    rep.add_argument("--recovery-mode", choices=RECOVERY_MODES)
    rep.add_argument("--format", choices=("text", "csv"), default="text")

    play = sub.add_parser("play", help="play a session yourself in the terminal")
    _env_args(play)
    play.add_argument("--out", help="write the transcript here")

    serve = sub.add_parser("serve", help="expose the environment over HTTP")
    _env_args(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--transcripts", help="directory for finished session transcripts")
    return parser


def _env_config(args) -> EnvConfig:
    return EnvConfig(t_max=args.t_max, target_completions=args.target_completions, seed=args.seed)


def cmd_lang(args) -> int:
    if args.action == "gen":
        forbidden: set[str] = set()
        for ref in args.disjoint_from:
            forbidden |= resolve_language(ref).lexicon
        params = GenParams(
            seed=args.seed,
            conversation_count=args.conversations,
            min_shared_words=args.min_shared,
            lexicon_size=args.lexicon_size,
            forbidden_words=frozenset(forbidden),
            enforce_unique_sentences=not args.allow_duplicates,
            max_backtracks=args.max_backtracks,
        )
        try:
            spec = gen_language(params, name=args.name)
        except GenerationError as exc:
            print(f"generation failed: {exc}", file=sys.stderr)
            return EXIT_INVALID
        if args.out:
            Path(args.out).write_text(spec.dumps(), encoding="utf-8")
            print(f"wrote {args.out}: {len(spec.conversations)} conversations, {len(spec.lexicon)} words")
        else:
            sys.stdout.write(spec.dumps())
        return EXIT_OK

    if args.action == "check":
        spec = resolve_language(args.language)
        problems = check_language(spec)
        summary = (
            f"{spec.name}: {len(spec.conversations)} conversations, "
            f"{len(spec.sentences)} distinct sentences, {len(spec.lexicon)} words"
        )
        if problems:
            print(f"{summary}; {len(problems)} constraint violation(s)")
            for v in problems:
                print(f"  {v}")
            return EXIT_INVALID
        print(f"{len(spec.conversations)} conversations, constraints satisfied ({summary})")
        return EXIT_OK

    a, b = resolve_language(args.a), resolve_language(args.b)
    shared = lexical_overlap(a, b)
    print(f"overlap: {len(shared)} words" + (f" ({', '.join(shared)})" if shared else ""))
    return EXIT_OK


def _make_agent(args, spec, seed: int):
    kind = args.agent
    if kind == "oracle":
        return oracle_agent(spec), None
    if kind in SCRIPTED_KINDS:
        return scripted_agent(kind, spec, seed), None
    if kind == "human":
        return HumanAgent(), None
    from .llm import load_endpoints, remote_agent

    if not args.endpoints:
        raise UsageError(f"unknown agent {kind!r} (remote agents need --endpoints)")
    label = kind.removeprefix("endpoint:")
    endpoints = load_endpoints(args.endpoints)
    if label not in endpoints:
        raise UsageError(f"endpoint {label!r} not found in {args.endpoints}")
    ep = endpoints[label]
    if args.prompt_variant:
        ep = dataclasses.replace(ep, prompt_variant=args.prompt_variant)
    return remote_agent(ep), ep.prompt_variant


def cmd_run(args) -> int:
    spec = resolve_language(args.language)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics, finished = [], 0
    for trial in range(1, args.trials + 1):
        seed = args.seed + trial - 1
        agent, variant = _make_agent(args, spec, seed)
        cfg = EnvConfig(args.t_max, args.target_completions, seed)
        t = run_session(
            agent, spec, cfg, timeout_s=args.timeout, recovery_mode=args.recovery_mode, prompt_variant=variant
        )
        write_transcript(t, out / f"trial_{trial:02d}.jsonl")
        if t.aborted:
            print(f"trial {trial}: aborted ({t.abort_reason})", file=sys.stderr)
        else:
            finished += 1
        metrics.append(t.metrics)
    rows = report_rows({f"{args.agent}@{spec.name}": metrics})
    note = f"recovery_mode={args.recovery_mode}; total_turns counts agent turns only"
    formats = {f.strip() for f in args.format.split(",") if f.strip()}
    if "csv" in formats:
        (out / "metrics.csv").write_text(format_csv(rows), encoding="utf-8")
    text = format_text(rows, note)
    if "text" in formats:
        (out / "metrics.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK if finished else EXIT_TRANSPORT


def cmd_report(args) -> int:
    groups: dict[str, list] = defaultdict(list)
    modes = set()
    failures = 0
    for path in args.paths:
        try:
            t = read_transcript(path)
            m = t.score(args.recovery_mode)
        except (OSError, TranscriptFormatError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        modes.add(args.recovery_mode or t.recovery_mode)
        key = {"agent": t.agent, "language": t.language, "agent+language": f"{t.agent}@{t.language}"}[args.group_by]
        groups[key].append(m)
    if not groups:
        return EXIT_INVALID
    rows = report_rows(groups)
    if args.format == "csv":
        print(format_csv(rows), end="")
    else:
        print(format_text(rows, f"recovery_mode={','.join(sorted(modes))}; total_turns counts agent turns only"), end="")
    return EXIT_OK if not failures else EXIT_INVALID


def cmd_play(args) -> int:
    spec = resolve_language(args.language)
    t = run_session(HumanAgent(), spec, _env_config(args), timeout_s=None, recovery_mode=args.recovery_mode)
    if t.records:
        print(f"tribe> {t.records[-1].text}")
    m = t.metrics
    print(f"turns {m.total_turns}  valid {m.valid_turns}  completions {m.completions}  TTFK {m.ttfk}")
    if args.out:
        write_transcript(t, args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    spec = resolve_language(args.language)
    app = create_app(spec, _env_config(args), transcript_dir=args.transcripts, recovery_mode=args.recovery_mode)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {"lang": cmd_lang, "run": cmd_run, "report": cmd_report, "play": cmd_play, "serve": cmd_serve}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LanguageError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EOFError, KeyboardInterrupt):
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
