"""Conversational question answering over a Wikidata-style knowledge graph.

Two QA backends (grammar reasoning and entity search) are arbitrated by a
boosted-stump confidence model; a dialogue context manager resolves
coreference, ellipsis and speaker deixis between turns.
"""

from .arbiter import AdaBoostModel, Answer, arbitrate, score, train_adaboost
from .context import DialogueState, SpeakerProfile, ask, record_reward
from .engine import Engine, EngineConfig, fixture_config
from .evaluation import coref_link_prf, prf, run_benchmark
from .kb import KnowledgeBase, Triple, Value, compute_pagerank, entity_sheet, load_kb
from .nlu import Lexicon, QuestionFrame, load_lexicon
from .query import GraphQuery, TriplePattern, evaluate
from .reasoning import Grammar, QAResult, answer_reasoning, load_grammar
from .search import SearchConfig, answer_search

__version__ = "0.1.0"

__all__ = [
    "AdaBoostModel",
    "Answer",
    "DialogueState",
    "Engine",
    "EngineConfig",
    "Grammar",
    "GraphQuery",
    "KnowledgeBase",
    "Lexicon",
    "QAResult",
    "QuestionFrame",
    "SearchConfig",
    "SpeakerProfile",
    "Triple",
    "TriplePattern",
    "Value",
    "answer_reasoning",
    "answer_search",
    "arbitrate",
    "ask",
    "compute_pagerank",
    "coref_link_prf",
    "entity_sheet",
    "evaluate",
    "fixture_config",
    "load_grammar",
    "load_kb",
    "load_lexicon",
    "prf",
    "record_reward",
    "run_benchmark",
    "score",
    "train_adaboost",
]
