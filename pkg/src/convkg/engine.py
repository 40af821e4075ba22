"""Asset bundle and session factory shared by the CLI, server and benchmarks."""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field
from importlib import resources

from . import context, docs, gen
from .arbiter import AdaBoostModel, Answer, load_model
from .context import DialogueState, SpeakerProfile, load_speakers
from .kb import KnowledgeBase, compute_pagerank, entity_sheet, load_kb
from .nlu import Lexicon, load_lexicon
from .reasoning import Grammar, load_grammar
from .search import SearchConfig


@dataclass
class EngineConfig:
    triples: str
    entities: str
    lexicon: str
    grammar: str
    templates: str
    paragraphs: str | None = None
    speakers: str | None = None
    model: str | None = None
    lang: str = "en"
    damping: float = 0.85
    pagerank_tol: float = 1e-9
    pagerank_max_iter: int = 100
    search: SearchConfig = field(default_factory=SearchConfig)
    corpus_log: str | None = None


def fixture_dir() -> str:
    return str(resources.files("convkg").joinpath("data/fixture"))


def fixture_config(lang: str = "en", corpus_log: str | None = None) -> EngineConfig:
    """Configuration pointing at the bundled demonstration knowledge base."""
    base = fixture_dir()
    return EngineConfig(
        triples=f"{base}/triples.tsv",
        entities=f"{base}/entities.jsonl",
        lexicon=f"{base}/lexicon_{lang}.txt",
        grammar=f"{base}/grammar_{lang}.txt",
        templates=f"{base}/templates.txt",
        paragraphs=f"{base}/paragraphs.tsv",
        speakers=f"{base}/speakers.jsonl",
        model=f"{base}/confidence.model",
        lang=lang,
        corpus_log=corpus_log,
    )


class Engine:
    """Loaded assets plus per-session dialogue entry points."""

    def __init__(
        self,
        kb: KnowledgeBase,
        lexicon: Lexicon,
        grammar: Grammar,
        templates: gen.Templates,
        model: AdaBoostModel,
        doc_index: docs.DocIndex | None = None,
        speakers: dict[str, SpeakerProfile] | None = None,
        search_config: SearchConfig | None = None,
        corpus_log: str | None = None,
    ):
        self.kb = kb
        self.lexicon = lexicon
        self.grammar = grammar
        self.templates = templates
        self.model = model
        self.doc_index = doc_index
        self.speakers = speakers or {}
        self.search_config = search_config or SearchConfig()
        self.corpus_log = corpus_log

    @classmethod
    def load(cls, config: EngineConfig) -> "Engine":
        kb = load_kb(config.triples, config.entities, lang=config.lang)
        compute_pagerank(kb, damping=config.damping, tol=config.pagerank_tol, max_iter=config.pagerank_max_iter)
        lexicon = load_lexicon(config.lexicon, language=config.lang, kb=kb)
        grammar = load_grammar(config.grammar, kb, lexicon)
        templates = gen.load_templates(config.templates)
        if config.model:
            model = load_model(config.model)
        else:
            raise ValueError("EngineConfig.model is required (train one with train-confidence)")
        doc_index = docs.index_paragraphs(config.paragraphs, kb, lexicon) if config.paragraphs else None
        speakers = load_speakers(config.speakers, kb) if config.speakers else {}
        return cls(
            kb=kb,
            lexicon=lexicon,
            grammar=grammar,
            templates=templates,
            model=model,
            doc_index=doc_index,
            speakers=speakers,
            search_config=config.search,
            corpus_log=config.corpus_log,
        )

    # -- sessions ---------------------------------------------------------

    def new_state(self, speaker_id: str | None = None) -> DialogueState:
        speaker = None
        if speaker_id is not None:
            speaker = self.speakers.get(speaker_id)
            if speaker is None:
                raise KeyError(f"unknown speaker: {speaker_id}")
        return DialogueState(session_id=secrets.token_urlsafe(24), speaker=speaker)

    def ask(self, state: DialogueState, text: str) -> Answer:
        answer, _ = context.ask(
            state,
            text,
            kb=self.kb,
            lexicon=self.lexicon,
            grammar=self.grammar,
            model=self.model,
            templates=self.templates,
            search_config=self.search_config,
            corpus_log=self.corpus_log,
        )
        return answer

    def reward(self, state: DialogueState, turn_index: int, reward: str) -> None:
        context.record_reward(state, turn_index, reward, corpus_log=self.corpus_log)

    def sheet(self, entity_id: str, lang: str | None = None):
        return entity_sheet(self.kb, entity_id, lang)

    def excerpts(
        self,
        question_entities: set[str],
        answer_entities: set[str],
        question_terms: list[str],
        k: int = 3,
    ):
        if self.doc_index is None:
            return []
        return docs.retrieve(self.doc_index, question_entities, answer_entities, question_terms, k)

    def bench_system(self):
        """Callable for evaluation.run_benchmark: fresh session per item."""

        def run(question: str, context_turns: list[str]) -> Answer:
            state = self.new_state()
            for prior in context_turns:
                self.ask(state, prior)
            return self.ask(state, question)

        return run
