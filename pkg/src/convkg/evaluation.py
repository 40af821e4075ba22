"""Benchmark harness and metrics.

Answer sets are scored with QALD-style per-question precision/recall/F1,
macro-averaged unweighted; coreference chains with the MUC link metric.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .arbiter import Answer
from .kb import normalize_surface


class BenchmarkError(Exception):
    """Empty or malformed benchmark file."""


@dataclass
class BenchmarkItem:
    id: str
    question: str
    gold: set[str]
    context: list[str] = field(default_factory=list)


@dataclass
class ItemResult:
    id: str
    precision: float
    recall: float
    f1: float
    system: set[str]
    gold: set[str]
    clarification: bool


@dataclass
class EvalReport:
    items: list[ItemResult]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    n_clarifications: int
    runtime_s: float


def prf(sys: set[str], gold: set[str]) -> tuple[float, float, float]:
    """Set precision/recall/F1 with the QALD empty-answer conventions.

    Both empty counts as a perfect (1, 1, 1); an empty side against a
    non-empty one scores zero. Strings are compared case-insensitively
    after diacritic folding.
    """
    sys_n = {normalize_surface(s) for s in sys}
    gold_n = {normalize_surface(s) for s in gold}
    if not sys_n and not gold_n:
        return (1.0, 1.0, 1.0)
    if not sys_n or not gold_n:
        return (0.0, 0.0, 0.0)
    hit = len(sys_n & gold_n)
    p = hit / len(sys_n)
    r = hit / len(gold_n)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return (p, r, f1)


def coref_link_prf(
    sys_chains: Iterable[Iterable[str]], gold_chains: Iterable[Iterable[str]]
) -> tuple[float, float, float]:
    """MUC link-based coreference score; 0/0 ratios count as 0."""

    def as_sets(chains: Iterable[Iterable[str]], label: str) -> list[set[str]]:
        out: list[set[str]] = []
        seen: set[str] = set()
        for chain in chains:
            s = set(chain)
            if s & seen:
                raise BenchmarkError(f"{label} chains overlap on {sorted(s & seen)}")
            seen |= s
            out.append(s)
        return out

    sys_sets = as_sets(sys_chains, "system")
    gold_sets = as_sets(gold_chains, "gold")

    def muc_recall(keys: list[set[str]], responses: list[set[str]]) -> float:
        num = 0
        den = 0
        covered = set().union(*responses) if responses else set()
        for key in keys:
            # number of blocks the response side cuts this key chain into:
            # intersecting response chains, plus one per unmatched mention
            blocks = sum(1 for r in responses if key & r) + len(key - covered)
            num += len(key) - blocks
            den += len(key) - 1
        return num / den if den > 0 else 0.0

    r = muc_recall(gold_sets, sys_sets)
    p = muc_recall(sys_sets, gold_sets)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return (p, r, f1)


def load_benchmark(path: str) -> list[BenchmarkItem]:
    items: list[BenchmarkItem] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BenchmarkError(f"{path}:{lineno}: invalid record: {exc}") from exc
            if "id" not in rec or "question" not in rec or "gold" not in rec:
                raise BenchmarkError(f"{path}:{lineno}: record needs id, question, gold")
            items.append(
                BenchmarkItem(
                    id=str(rec["id"]),
                    question=rec["question"],
                    gold=set(rec["gold"]),
                    context=list(rec.get("context", [])),
                )
            )
    if not items:
        raise BenchmarkError(f"{path}: benchmark file contains no items")
    return items


AskFn = Callable[[str, list[str]], Answer]  # (question, context turns) -> Answer


def run_benchmark(path: str, system: AskFn, report_path: str | None = None) -> EvalReport:
    """Run each item through the system in a fresh session and score it.

    `system` receives the question plus its context turns and must replay
    the context before answering. Item-level failures score zero but never
    abort the run.
    """
    items = load_benchmark(path)
    results: list[ItemResult] = []
    started = time.perf_counter()
    for item in items:
        try:
            answer = system(item.question, item.context)
            sys_strings = set(answer.value_labels)
            clarification = answer.source == "NONE"
        except Exception:
            sys_strings = set()
            clarification = True
        p, r, f1 = prf(sys_strings, item.gold)
        results.append(
            ItemResult(
                id=item.id, precision=p, recall=r, f1=f1,
                system=sys_strings, gold=item.gold, clarification=clarification,
            )
        )
    runtime = time.perf_counter() - started
    n = len(results)
    report = EvalReport(
        items=results,
        macro_precision=sum(it.precision for it in results) / n,
        macro_recall=sum(it.recall for it in results) / n,
        macro_f1=sum(it.f1 for it in results) / n,
        n_clarifications=sum(1 for it in results if it.clarification),
        runtime_s=runtime,
    )
    if report_path:
        write_report(report, report_path)
    return report


def format_report(report: EvalReport) -> str:
    """Deterministic text report; the runtime line is the only varying part."""
    lines = [
        "benchmark report",
        "convention: empty system answer vs empty gold counts as a perfect match",
        "",
        f"{'id':<12} {'P':>6} {'R':>6} {'F1':>6}  answers",
    ]
    for it in report.items:
        answers = "(clarification)" if it.clarification else ", ".join(sorted(it.system))
        lines.append(f"{it.id:<12} {it.precision:6.3f} {it.recall:6.3f} {it.f1:6.3f}  {answers}")
    lines += [
        "",
        f"items: {len(report.items)}   clarifications: {report.n_clarifications}",
        f"macro P: {report.macro_precision:.4f}",
        f"macro R: {report.macro_recall:.4f}",
        f"macro F1: {report.macro_f1:.4f}",
        f"runtime_s: {report.runtime_s:.3f}",
    ]
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_report(report))
