"""Command line: interactive REPL chat plus bench / train-confidence /
pagerank / serve subcommands over the same engine.

Every flag can also be set through a CONVKG_* environment variable
(--session-ttl -> CONVKG_SESSION_TTL and so on).
"""

from __future__ import annotations

import argparse
import os
import sys

from .arbiter import ArbiterError, load_model, save_model, train_adaboost
from .context import RewardError
from .docs import DocsError
from .engine import Engine, EngineConfig, fixture_dir
from .evaluation import BenchmarkError, run_benchmark
from .gen import TemplateError
from .kb import KBLoadError, KBNotFound, compute_pagerank, load_kb
from .nlu import LexiconError
from .reasoning import GrammarError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

_VALIDATION_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    KBLoadError,
    LexiconError,
    GrammarError,
    TemplateError,
    DocsError,
    BenchmarkError,
    ArbiterError,
    ValueError,
)


def _env(name: str, default: str | None = None) -> str | None:
    return os.environ.get(f"CONVKG_{name}", default)


def build_parser() -> argparse.ArgumentParser:
    fixture = fixture_dir()
    parser = argparse.ArgumentParser(
        prog="convkg",
        description="Conversational question answering over a knowledge graph.",
    )
    parser.add_argument("--kb", default=_env("KB", f"{fixture}/triples.tsv"), help="triples file")
    parser.add_argument("--entities", default=_env("ENTITIES", f"{fixture}/entities.jsonl"))
    parser.add_argument("--lexicon", default=_env("LEXICON"), help="defaults to the bundled pack for --lang")
    parser.add_argument("--grammar", default=_env("GRAMMAR"), help="defaults to the bundled pack for --lang")
    parser.add_argument("--templates", default=_env("TEMPLATES", f"{fixture}/templates.txt"))
    parser.add_argument("--paragraphs", default=_env("PARAGRAPHS", f"{fixture}/paragraphs.tsv"))
    parser.add_argument("--speakers", default=_env("SPEAKERS", f"{fixture}/speakers.jsonl"))
    parser.add_argument("--model", default=_env("MODEL", f"{fixture}/confidence.model"))
    parser.add_argument("--lang", default=_env("LANG_PACK", "en"))
    parser.add_argument("--listen", default=_env("LISTEN", "127.0.0.1:8080"), help="serve address host:port")
    parser.add_argument("--session-ttl", type=float, default=float(_env("SESSION_TTL", "1800")))
    parser.add_argument("--log", default=_env("LOG"), help="dialogue corpus log path (appended)")

    sub = parser.add_subparsers(dest="command", required=True)

    repl = sub.add_parser("repl", help="interactive chat on stdin/stdout")
    repl.add_argument("--speaker", default=None, help="speaker profile id (enables deixis)")

    serve = sub.add_parser("serve", help="run the HTTP session service")
    # accepted after the subcommand too; SUPPRESS keeps the global value
    serve.add_argument("--listen", default=argparse.SUPPRESS)
    serve.add_argument("--session-ttl", type=float, default=argparse.SUPPRESS)
    serve.add_argument("--static", default=_env("STATIC"), help="directory with the web client bundle")

    bench = sub.add_parser("bench", help="run a benchmark file and write a report")
    bench.add_argument("file")
    bench.add_argument("--report", default="benchmark_report.txt")

    train = sub.add_parser("train-confidence", help="train the arbitration model from a sample file")
    train.add_argument("file")
    train.add_argument("--out", default="confidence.model")
    train.add_argument("--rounds", type=int, default=30)

    pagerank = sub.add_parser("pagerank", help="print entity PageRank scores")
    pagerank.add_argument("--top", type=int, default=0, help="only print the N best (0 = all)")

    return parser


def engine_config(args: argparse.Namespace) -> EngineConfig:
    fixture = fixture_dir()
    return EngineConfig(
        triples=args.kb,
        entities=args.entities,
        lexicon=args.lexicon or f"{fixture}/lexicon_{args.lang}.txt",
        grammar=args.grammar or f"{fixture}/grammar_{args.lang}.txt",
        templates=args.templates,
        paragraphs=args.paragraphs,
        speakers=args.speakers,
        model=args.model,
        lang=args.lang,
        corpus_log=args.log,
    )


# -- repl ---------------------------------------------------------------------


def _print_sheet(sheet, out) -> None:
    print(f"{sheet.label} ({sheet.id})", file=out)
    if sheet.description:
        print(f"  {sheet.description}", file=out)
    if sheet.types:
        print("  types: " + ", ".join(label for _, label in sheet.types), file=out)
    if sheet.image_ref:
        print(f"  image: {sheet.image_ref}", file=out)


def _turn_entities(state):
    question, answers = set(), set()
    if state.turns:
        turn = state.turns[-1]
        for m in turn.resolved_frame.name_mentions():
            if m.candidates:
                question.add(m.top_candidate())
        for v in turn.answer.values:
            if v.is_entity:
                answers.add(v.text)
    return question, answers


def run_repl(engine: Engine, speaker_id: str | None = None, stdin=None, out=None) -> int:
    stdin = stdin or sys.stdin
    out = out or sys.stdout
    interactive = hasattr(stdin, "isatty") and stdin.isatty()
    try:
        state = engine.new_state(speaker_id)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=out)
        return EXIT_VALIDATION
    if interactive:
        print("convkg chat - :why :docs :sheet <id> :reward +/- :quit", file=out)
    while True:
        if interactive:
            print("> ", end="", file=out, flush=True)
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line == ":quit":
            break
        if line.startswith(":"):
            _repl_command(engine, state, line, out)
            continue
        try:
            answer = engine.ask(state, line)
        except Exception as exc:  # the loop never crashes on a bad turn
            print(f"error: {exc}", file=out)
            continue
        print(answer.long_text or answer.short_text, file=out)
        print(f"[confidence {answer.confidence:.2f} - {answer.source}]", file=out)
    return EXIT_OK


def _repl_command(engine: Engine, state, line: str, out) -> None:
    parts = line.split()
    cmd = parts[0]
    if cmd == ":why":
        if not state.turns:
            print("no turn yet", file=out)
            return
        turn = state.turns[-1]
        if turn.answer.query_debug:
            print(turn.answer.query_debug, file=out)
        for t in sorted(turn.answer.provenance):
            print(f"  {t}", file=out)
        if not turn.answer.provenance and not turn.answer.query_debug:
            print("no provenance recorded", file=out)
    elif cmd == ":docs":
        question, answers = _turn_entities(state)
        terms = []
        if state.turns:
            terms = [t.lemma for t in state.turns[-1].resolved_frame.raw_tokens if t.pos not in ("PUNCT",)]
        results = engine.excerpts(question, answers, terms, k=3)
        if not results:
            print("no matching excerpts", file=out)
        for paragraph, score in results:
            print(f"[{paragraph.doc_id}] ({score:.2f}) {paragraph.text}", file=out)
    elif cmd == ":sheet":
        if len(parts) != 2:
            print("usage: :sheet <entity-id>", file=out)
            return
        try:
            _print_sheet(engine.sheet(parts[1]), out)
        except KBNotFound as exc:
            print(f"error: {exc}", file=out)
    elif cmd == ":reward":
        if len(parts) != 2 or parts[1] not in ("+", "-"):
            print("usage: :reward +|-", file=out)
            return
        if not state.turns:
            print("no turn to reward", file=out)
            return
        reward = "CORRECT" if parts[1] == "+" else "INCORRECT"
        try:
            engine.reward(state, state.turns[-1].index, reward)
            print(f"reward recorded: {reward}", file=out)
        except RewardError as exc:
            print(f"error: {exc}", file=out)
    else:
        print("commands: :why :docs :sheet <id> :reward +/- :quit", file=out)


# -- operational subcommands ----------------------------------------------------


def run_bench(engine: Engine, path: str, report_path: str, out=None) -> int:
    out = out or sys.stdout
    report = run_benchmark(path, engine.bench_system(), report_path)
    print(
        f"items={len(report.items)} macro_P={report.macro_precision:.4f} "
        f"macro_R={report.macro_recall:.4f} macro_F1={report.macro_f1:.4f}",
        file=out,
    )
    print(f"report written to {report_path}", file=out)
    return EXIT_OK


def load_samples(path: str) -> list[tuple[list[float], int]]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                label = int(parts[0])
                features = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed sample line") from exc
            if label not in (1, -1):
                raise ValueError(f"{path}:{lineno}: label must be +1 or -1")
            samples.append((features, label))
    if not samples:
        raise ValueError(f"{path}: no samples found")
    return samples


def run_train_confidence(path: str, out_path: str, rounds: int, out=None) -> int:
    out = out or sys.stdout
    samples = load_samples(path)
    model = train_adaboost(samples, rounds=rounds)
    save_model(model, out_path)
    reloaded = load_model(out_path)
    from .arbiter import score

    for features, _ in samples[:50]:
        if score(model, features) != score(reloaded, features):
            raise RuntimeError("model round-trip produced different scores")
    print(f"trained on {len(samples)} samples, {len(model.stumps)} stumps -> {out_path}", file=out)
    return EXIT_OK


def run_pagerank(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    kb = load_kb(args.kb, args.entities, lang=args.lang)
    scores = compute_pagerank(kb)
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    if args.top > 0:
        ranked = ranked[: args.top]
    for entity_id, score in ranked:
        print(f"{entity_id}\t{score:.10f}", file=out)
    return EXIT_OK


def run_serve(engine: Engine, args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    host, _, port = args.listen.rpartition(":")
    app = create_app(engine, session_ttl=args.session_ttl, static_dir=getattr(args, "static", None))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "pagerank":
            return run_pagerank(args)
        if args.command == "train-confidence":
            return run_train_confidence(args.file, args.out, args.rounds)
        engine = Engine.load(engine_config(args))
        if args.command == "repl":
            return run_repl(engine, speaker_id=args.speaker)
        if args.command == "bench":
            return run_bench(engine, args.file, args.report)
        if args.command == "serve":
            return run_serve(engine, args)
        parser.error(f"unknown command {args.command!r}")
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
