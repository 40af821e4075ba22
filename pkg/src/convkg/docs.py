"""Documentary retrieval: entity-annotated paragraphs with a tf-idf index.

Paragraphs carry the entity ids they mention; retrieval combines entity
overlap with the question/answer entities and a tf-idf cosine on question
terms.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .kb import KnowledgeBase
from .nlu import Lexicon, tokenize

log = logging.getLogger(__name__)

ENTITY_OVERLAP_WEIGHT = 10.0


class DocsError(Exception):
    """Malformed paragraph file."""


@dataclass
class Paragraph:
    doc_id: str
    text: str
    entities: set[str]
    source_title: str


@dataclass
class DocIndex:
    paragraphs: dict[str, Paragraph] = field(default_factory=dict)
    postings: dict[str, dict[str, int]] = field(default_factory=dict)  # term -> doc_id -> tf
    entity_postings: dict[str, set[str]] = field(default_factory=dict)
    doc_norm: dict[str, float] = field(default_factory=dict)
    entity_overlap_weight: float = ENTITY_OVERLAP_WEIGHT

    @property
    def n_docs(self) -> int:
        return len(self.paragraphs)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log((self.n_docs + 1) / (df + 1)) + 1.0


def _terms(text: str, lexicon: Lexicon) -> list[str]:
    out = []
    for tok in tokenize(text):
        if not any(ch.isalnum() for ch in tok.surface):
            continue
        norm = tok.surface.casefold()
        lemma, _pos = lexicon.lemmas.get(norm, (norm, None))
        if lemma in lexicon.stopwords or norm in lexicon.stopwords:
            continue
        out.append(lemma)
    return out


def index_paragraphs(path: str, kb: KnowledgeBase, lexicon: Lexicon) -> DocIndex:
    """Build the index from a TAB-separated paragraph file.

    Columns: doc_id, source_title, comma-separated entity ids, text.
    Unknown entity annotations are dropped with a warning, not fatal.
    """
    index = DocIndex()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DocsError(f"{path}:{lineno}: expected 4 TAB-separated fields, got {len(parts)}")
            doc_id, title, raw_entities, text = parts
            if not text.strip():
                raise DocsError(f"{path}:{lineno}: empty paragraph text")
            if doc_id in index.paragraphs:
                raise DocsError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            entities = set()
            for eid in filter(None, (e.strip() for e in raw_entities.split(","))):
                if eid not in kb.entities:
                    log.warning("%s:%d: unknown entity annotation %s dropped", path, lineno, eid)
                    continue
                entities.add(eid)
            index.paragraphs[doc_id] = Paragraph(doc_id=doc_id, text=text, entities=entities, source_title=title)
            for eid in entities:
                index.entity_postings.setdefault(eid, set()).add(doc_id)
            for term, tf in Counter(_terms(text, lexicon)).items():
                index.postings.setdefault(term, {})[doc_id] = tf
    # vector norms need the final idf values, so a second pass
    sq = defaultdict(float)
    for term, docs in index.postings.items():
        idf = index.idf(term)
        for doc_id, tf in docs.items():
            weight = (1.0 + math.log(tf)) * idf
            sq[doc_id] += weight * weight
    index.doc_norm = {doc_id: math.sqrt(v) for doc_id, v in sq.items()}
    return index


def retrieve(
    index: DocIndex,
    question_entities: set[str],
    answer_entities: set[str],
    question_terms: list[str],
    k: int = 3,
) -> list[tuple[Paragraph, float]]:
    """Top-k paragraphs by entity overlap + tf-idf cosine, stable by doc_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    wanted = question_entities | answer_entities
    scores: dict[str, float] = defaultdict(float)
    for eid in wanted:
        for doc_id in index.entity_postings.get(eid, ()):
            scores[doc_id] += index.entity_overlap_weight

    if question_terms:
        q_tf = Counter(question_terms)
        q_weights = {t: (1.0 + math.log(tf)) * index.idf(t) for t, tf in q_tf.items()}
        q_norm = math.sqrt(sum(wt * wt for wt in q_weights.values()))
        if q_norm > 0:
            dots: dict[str, float] = defaultdict(float)
            for term, q_wt in q_weights.items():
                for doc_id, tf in index.postings.get(term, {}).items():
                    dots[doc_id] += q_wt * (1.0 + math.log(tf)) * index.idf(term)
            for doc_id, dot in dots.items():
                norm = index.doc_norm.get(doc_id, 0.0)
                if norm > 0:
                    scores[doc_id] += dot / (q_norm * norm)

    ranked = sorted(((d, s) for d, s in scores.items() if s > 0.0), key=lambda it: (-it[1], it[0]))
    return [(index.paragraphs[d], s) for d, s in ranked[:k]]
