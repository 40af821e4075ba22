from __future__ import annotations

import random

import pytest

from convkg.engine import Engine, fixture_config
from convkg.kb import Entity, KnowledgeBase, Triple, Value, compute_pagerank


@pytest.fixture(scope="session")
def engine() -> Engine:
    return Engine.load(fixture_config())


@pytest.fixture(scope="session")
def kb(engine) -> KnowledgeBase:
    return engine.kb


@pytest.fixture(scope="session")
def lexicon(engine):
    return engine.lexicon


@pytest.fixture(scope="session")
def grammar(engine):
    return engine.grammar


def make_kb(raw_triples, default_lang="en", pagerank=False) -> KnowledgeBase:
    """Build an in-memory KB from (s, p, o) tuples; o may be a str id or Value."""
    entities: dict[str, Entity] = {}
    triples: list[Triple] = []

    def declare(entity_id: str) -> None:
        if entity_id not in entities:
            entities[entity_id] = Entity(id=entity_id, labels={"en": entity_id.replace("_", " ")})

    for s, p, o in raw_triples:
        declare(s)
        declare(p)
        if isinstance(o, Value):
            value = o
            if value.is_entity:
                declare(value.text)
        else:
            declare(o)
            value = Value.entity(o)
        triples.append(Triple(s, p, value))
    kb = KnowledgeBase(entities, triples, default_lang=default_lang)
    if pagerank:
        compute_pagerank(kb)
    return kb


def random_kb(rng: random.Random, n_entities=10, n_predicates=3, n_literals=2, n_triples=30) -> KnowledgeBase:
    entity_ids = [f"Q_E{i}" for i in range(n_entities)]
    predicate_ids = [f"P_R{i}" for i in range(n_predicates)]
    literals = [Value.literal(f"lit{i}") for i in range(n_literals)]
    raw = []
    for _ in range(n_triples):
        s = rng.choice(entity_ids)
        p = rng.choice(predicate_ids)
        if literals and rng.random() < 0.25:
            o = rng.choice(literals)
        else:
            o = Value.entity(rng.choice(entity_ids + predicate_ids))
        raw.append((s, p, o))
    entities = {e: Entity(id=e, labels={"en": e}) for e in entity_ids + predicate_ids}
    return KnowledgeBase(entities, [Triple(s, p, o) for s, p, o in raw])
