"""Search QA backend.

Links question entities, collects the KB triples connecting candidate
subjects to candidate predicates into a correlation matrix, then scores each
cell by question coverage and entity relevance to extract the best answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kb import KnowledgeBase, Triple, Value, normalize_surface
from .nlu import NAME, TYPE_WORD, Lexicon, Mention, QuestionFrame
from .reasoning import KIND_DEFINITION, QAResult, SOURCE_SEARCH


class EmptyCandidates(Exception):
    """The frame offers neither subjects nor predicates to search with."""


@dataclass
class SearchConfig:
    expand: int = 1  # one-hop row expansion bound
    type_bonus: float = 1.5  # multiplicative bonus on a type match
    tie_epsilon: float = 1e-9  # relative tie window for answer sets


@dataclass
class CandidateSet:
    subjects: list[Mention]
    predicates: set[str]
    types: set[str]


@dataclass
class CorrelationMatrix:
    rows: list[str]  # candidate subject entity ids
    cols: list[str]  # candidate predicate entity ids
    cells: dict[tuple[str, str], list[Triple]] = field(default_factory=dict)


@dataclass
class CellScore:
    coverage: float
    relevance: float
    type_match: bool
    total: float


def collect_candidates(frame: QuestionFrame, lexicon: Lexicon) -> CandidateSet:
    """Subjects from NAME mentions, predicates from synonym hits, types from type words."""
    subjects = [m for m in frame.mentions if m.kind == NAME and m.candidates]
    predicates: set[str] = set()
    for lemma in frame.content_lemmas():
        if lemma in lexicon.stopwords:
            continue
        predicates |= lexicon.synonyms.get(lemma, set())
    types = {m.candidates[0][0] for m in frame.mentions if m.kind == TYPE_WORD and m.candidates}
    if not subjects and not predicates:
        raise EmptyCandidates("no subjects and no predicates in the question")
    return CandidateSet(subjects=subjects, predicates=predicates, types=types)


def build_matrix(cands: CandidateSet, kb: KnowledgeBase, expand: int = 1) -> CorrelationMatrix:
    """Fill cells from direct lookups; expansion adds one-hop connected rows."""
    rows: list[str] = []
    seen: set[str] = set()
    for mention in cands.subjects:
        for entity_id, _ in mention.candidates:
            if entity_id not in seen:
                seen.add(entity_id)
                rows.append(entity_id)
    cols = sorted(cands.predicates)

    frontier = list(rows)
    for _ in range(max(0, expand)):
        added: list[str] = []
        for s in frontier:
            for p in cols:
                for t in kb.match(s=s, p=p):
                    if t.object.is_entity and t.object.text not in seen:
                        seen.add(t.object.text)
                        added.append(t.object.text)
                for t in kb.match(p=p, o=Value.entity(s)):
                    if t.subject not in seen:
                        seen.add(t.subject)
                        added.append(t.subject)
        rows.extend(added)
        frontier = added

    cells: dict[tuple[str, str], list[Triple]] = {}
    for r in rows:
        for c in cols:
            triples = kb.match(s=r, p=c)
            if triples:
                cells[(r, c)] = triples
    return CorrelationMatrix(rows=rows, cols=cols, cells=cells)


def _label_lemma_set(entity_id: str, kb: KnowledgeBase, lang: str) -> set[str]:
    ent = kb.entities.get(entity_id)
    if ent is None:
        return set()
    words: set[str] = set()
    surfaces = [ent.labels.get(lang, ""), ent.labels.get(kb.default_lang, "")]
    surfaces.extend(ent.aliases.get(lang, ()))
    for surface in surfaces:
        words.update(normalize_surface(surface).split())
    return words


def score_cell(
    row: str,
    col: str,
    triples: list[Triple],
    question_lemmas: list[str],
    cands: CandidateSet,
    kb: KnowledgeBase,
    lexicon: Lexicon,
    max_pagerank: float,
    config: SearchConfig,
) -> CellScore:
    """coverage x normalized relevance, with a multiplicative type bonus."""
    label_words = _label_lemma_set(row, kb, lexicon.language)
    row_types = kb.entities[row].types if row in kb.entities else set()
    explained = 0
    for lemma in question_lemmas:
        if lemma in label_words:
            explained += 1
        elif col in lexicon.synonyms.get(lemma, set()):
            explained += 1
        elif lemma in lexicon.type_words and lexicon.type_words[lemma] in row_types:
            explained += 1
    coverage = explained / len(question_lemmas) if question_lemmas else 0.0
    pagerank = kb.entities[row].pagerank if row in kb.entities else 0.0
    relevance = pagerank / max_pagerank if max_pagerank > 0 else 1.0
    type_match = False
    for t in triples:
        if t.object.is_entity:
            obj = kb.entities.get(t.object.text)
            if obj is not None and obj.types & cands.types:
                type_match = True
                break
    total = coverage * relevance * (config.type_bonus if type_match else 1.0)
    return CellScore(coverage=coverage, relevance=relevance, type_match=type_match, total=total)


def _question_lemmas(frame: QuestionFrame, lexicon: Lexicon) -> list[str]:
    out = []
    for lemma in dict.fromkeys(frame.content_lemmas()):  # dedup, keep order
        if lemma and lemma not in lexicon.stopwords:
            out.append(lemma)
    return out


def score_and_select(
    matrix: CorrelationMatrix,
    frame: QuestionFrame,
    kb: KnowledgeBase,
    lexicon: Lexicon,
    cands: CandidateSet,
    config: SearchConfig | None = None,
) -> QAResult:
    """Answers are the objects of every cell within the tie window of the best."""
    config = config or SearchConfig()
    if not matrix.cells:
        return QAResult.failure(SOURCE_SEARCH, debug="empty correlation matrix")
    question_lemmas = _question_lemmas(frame, lexicon)
    max_pagerank = max(
        (kb.entities[r].pagerank for r in matrix.rows if r in kb.entities),
        default=0.0,
    )
    # triples that merely point back at a question subject are not answers
    subject_ids = {m.top_candidate() for m in cands.subjects if m.candidates}
    answerable: dict[tuple[str, str], list[Triple]] = {}
    for key, triples in matrix.cells.items():
        kept = [t for t in triples if not (t.object.is_entity and t.object.text in subject_ids)]
        if kept:
            answerable[key] = kept
    if not answerable:
        return QAResult.failure(SOURCE_SEARCH, debug="matrix only connects back to the question subjects")
    scored: dict[tuple[str, str], CellScore] = {}
    for key, triples in answerable.items():
        scored[key] = score_cell(
            key[0], key[1], triples, question_lemmas, cands, kb, lexicon, max_pagerank, config
        )
    best = max(s.total for s in scored.values())
    if best <= 0.0:
        return QAResult.failure(SOURCE_SEARCH, debug="no cell scored above zero")
    threshold = best * (1.0 - config.tie_epsilon)
    values: set[Value] = set()
    provenance: set[Triple] = set()
    best_cell: CellScore | None = None
    for key in sorted(scored):
        score = scored[key]
        if score.total >= threshold:
            for t in answerable[key]:
                values.add(t.object)
                provenance.add(t)
            if best_cell is None or score.total > best_cell.total:
                best_cell = score
    assert best_cell is not None
    debug_lines = ["MATRIX " + " ".join(matrix.cols)] + [
        f"{r} {c} -> {len(matrix.cells[(r, c)])} triples, total={scored[(r, c)].total:.6f}"
        for (r, c) in sorted(scored)
    ]
    return QAResult(
        source=SOURCE_SEARCH,
        values=sorted(values),
        provenance=provenance,
        query_debug="\n".join(debug_lines),
        coverage=best_cell.coverage,
        relevance=best_cell.relevance,
    )


def answer_search(
    frame: QuestionFrame,
    kb: KnowledgeBase,
    lexicon: Lexicon,
    config: SearchConfig | None = None,
) -> QAResult:
    """End-to-end search backend: candidates -> matrix -> scored answer."""
    config = config or SearchConfig()
    try:
        cands = collect_candidates(frame, lexicon)
    except EmptyCandidates as exc:
        return QAResult.failure(SOURCE_SEARCH, debug=str(exc))
    if not cands.predicates:
        # definition fallback: no relation asked, return the subject itself
        top = max(
            (m.candidates[0] for m in cands.subjects),
            key=lambda c: (c[1], c[0]),
            default=None,
        )
        if top is None:
            return QAResult.failure(SOURCE_SEARCH, debug="no linkable subject")
        entity_id = top[0]
        ent = kb.entities[entity_id]
        provenance = {t for t in kb.match(s=entity_id) if t.object.is_entity and t.object.text in ent.types}
        return QAResult(
            source=SOURCE_SEARCH,
            values=[Value.entity(entity_id)],
            provenance=provenance,
            query_debug=f"DEFINE {entity_id}",
            answer_kind=KIND_DEFINITION,
            coverage=1.0,
            relevance=1.0,
        )
    matrix = build_matrix(cands, kb, expand=config.expand)
    return score_and_select(matrix, frame, kb, lexicon, cands, config)
