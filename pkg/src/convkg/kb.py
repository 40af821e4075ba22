"""Knowledge base: triple store with permutation indexes, entity metadata and PageRank.

The store is immutable after load_kb()/compute_pagerank(); all lookups are
safe for concurrent readers.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

EntityId = str

ENTITY_ID_RE = re.compile(r"^[QP][A-Za-z0-9_]+$")

LITERAL_PLAIN = "plain"
LITERAL_NUMBER = "number"
LITERAL_DATE = "date"
_DATATYPES = (LITERAL_PLAIN, LITERAL_NUMBER, LITERAL_DATE)


class KBError(Exception):
    """Base error for knowledge-base operations."""


class KBLoadError(KBError):
    """Malformed input file or dangling references at load time."""


class KBNotFound(KBError):
    """Requested entity does not exist."""


def normalize_surface(text: str) -> str:
    """Lowercase and strip diacritics, collapsing inner whitespace."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(stripped.casefold().split())


@dataclass(frozen=True, order=True)
class Value:
    """Object position of a triple: either an entity reference or a literal."""

    kind: str  # "entity" | "literal"
    text: str  # entity id, or literal text
    datatype: str = ""  # literals only: plain | number | date

    @staticmethod
    def entity(entity_id: EntityId) -> "Value":
        return Value("entity", entity_id)

    @staticmethod
    def literal(text: str, datatype: str = LITERAL_PLAIN) -> "Value":
        if datatype not in _DATATYPES:
            raise ValueError(f"unknown literal datatype: {datatype}")
        return Value("literal", text, datatype)

    @property
    def is_entity(self) -> bool:
        return self.kind == "entity"

    def __str__(self) -> str:
        if self.is_entity:
            return self.text
        suffix = "" if self.datatype == LITERAL_PLAIN else f"^{self.datatype}"
        return f'"{self.text}"{suffix}'


@dataclass(frozen=True, order=True)
class Triple:
    subject: EntityId
    predicate: EntityId
    object: Value

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {self.object}"


@dataclass
class Entity:
    """Entity record: labels/aliases/description keyed by language code."""

    id: EntityId
    labels: dict[str, str] = field(default_factory=dict)
    aliases: dict[str, list[str]] = field(default_factory=dict)
    description: dict[str, str] = field(default_factory=dict)
    types: set[EntityId] = field(default_factory=set)
    image_ref: str | None = None
    pagerank: float = 0.0
    # optional agreement features used by the dialogue resolver
    gender: str = "unknown"  # m | f | n | unknown
    number: str = "sg"  # sg | pl

    def label(self, lang: str, default_lang: str = "en") -> str:
        return self.labels.get(lang) or self.labels.get(default_lang) or next(iter(self.labels.values()))


@dataclass(frozen=True)
class EntitySheet:
    """Compact entity summary: label, description, types, image reference."""

    id: EntityId
    label: str
    description: str
    types: list[tuple[EntityId, str]]
    image_ref: str | None


class KnowledgeBase:
    """Triples plus entity metadata, indexed for lookup on any bound pattern.

    Six permutation indexes (SPO, SOP, PSO, POS, OSP, OPS) are kept as flat
    maps from each distinct bound-component combination to the matching
    triples, which gives the same access paths with one dict hop.
    """

    def __init__(self, entities: dict[EntityId, Entity], triples: list[Triple], default_lang: str = "en"):
        self.entities = entities
        self.triples = sorted(set(triples))
        self.default_lang = default_lang
        self._by_s: dict[EntityId, list[Triple]] = defaultdict(list)
        self._by_p: dict[EntityId, list[Triple]] = defaultdict(list)
        self._by_o: dict[Value, list[Triple]] = defaultdict(list)
        self._by_sp: dict[tuple[EntityId, EntityId], list[Triple]] = defaultdict(list)
        self._by_so: dict[tuple[EntityId, Value], list[Triple]] = defaultdict(list)
        self._by_po: dict[tuple[EntityId, Value], list[Triple]] = defaultdict(list)
        self._ground: set[Triple] = set()
        self.predicate_ids: set[EntityId] = set()
        for t in self.triples:
            self._by_s[t.subject].append(t)
            self._by_p[t.predicate].append(t)
            self._by_o[t.object].append(t)
            self._by_sp[(t.subject, t.predicate)].append(t)
            self._by_so[(t.subject, t.object)].append(t)
            self._by_po[(t.predicate, t.object)].append(t)
            self._ground.add(t)
            self.predicate_ids.add(t.predicate)
        # surface form -> entity ids, per language, over labels and aliases
        self.label_index: dict[str, dict[str, set[EntityId]]] = defaultdict(lambda: defaultdict(set))
        for ent in entities.values():
            for lang, lab in ent.labels.items():
                self.label_index[lang][normalize_surface(lab)].add(ent.id)
            for lang, names in ent.aliases.items():
                for name in names:
                    self.label_index[lang][normalize_surface(name)].add(ent.id)

    # -- queries ---------------------------------------------------------

    def match(self, s: EntityId | None = None, p: EntityId | None = None, o: Value | None = None) -> list[Triple]:
        """All triples agreeing with every bound argument, in (s, p, o) order."""
        if s is not None and p is not None and o is not None:
            t = Triple(s, p, o)
            return [t] if t in self._ground else []
        if s is not None and p is not None:
            return list(self._by_sp.get((s, p), ()))
        if s is not None and o is not None:
            return list(self._by_so.get((s, o), ()))
        if p is not None and o is not None:
            return list(self._by_po.get((p, o), ()))
        if s is not None:
            return list(self._by_s.get(s, ()))
        if p is not None:
            return list(self._by_p.get(p, ()))
        if o is not None:
            return list(self._by_o.get(o, ()))
        return list(self.triples)

    def lookup_label(self, surface: str, lang: str | None = None) -> set[EntityId]:
        """Entity ids whose label or alias matches the surface, folded."""
        lang = lang or self.default_lang
        return set(self.label_index.get(lang, {}).get(normalize_surface(surface), set()))

    def entity_values(self) -> list[Value]:
        """Every value the KB can bind: entity ids plus literal objects."""
        values = [Value.entity(e) for e in self.entities]
        values.extend(t.object for t in self.triples if not t.object.is_entity)
        return sorted(set(values))

    def subject_like_ids(self) -> set[EntityId]:
        """Ids usable as name-mention candidates: everything that is not purely a predicate."""
        only_predicates = set(self.predicate_ids)
        for t in self.triples:
            only_predicates.discard(t.subject)
            if t.object.is_entity:
                only_predicates.discard(t.object.text)
        return set(self.entities) - only_predicates

    def stats(self) -> dict[str, int]:
        return {"entities": len(self.entities), "triples": len(self.triples)}


# -- loading ---------------------------------------------------------------

_ENTITY_FIELDS = ("id", "labels", "aliases", "description", "types", "image")


def _parse_object(token: str, entities: dict[EntityId, Entity]) -> Value:
    if ENTITY_ID_RE.match(token) and token in entities:
        return Value.entity(token)
    datatype = LITERAL_PLAIN
    text = token
    m = re.match(r'^"(.*)"(?:\^(\w+))?$', token)
    if m:
        text = m.group(1)
        if m.group(2):
            if m.group(2) not in _DATATYPES:
                raise ValueError(f"unknown literal datatype suffix ^{m.group(2)}")
            datatype = m.group(2)
    return Value.literal(text, datatype)


def load_entities(entities_path: str) -> dict[EntityId, Entity]:
    """Read the line-delimited entity file (one JSON record per line)."""
    entities: dict[EntityId, Entity] = {}
    with open(entities_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise KBLoadError(f"{entities_path}:{lineno}: invalid record: {exc}") from exc
            if "id" not in rec:
                raise KBLoadError(f"{entities_path}:{lineno}: missing 'id' field")
            ent = Entity(
                id=rec["id"],
                labels=dict(rec.get("labels", {})),
                aliases={k: list(v) for k, v in rec.get("aliases", {}).items()},
                description=dict(rec.get("description", {})),
                types=set(rec.get("types", [])),
                image_ref=rec.get("image"),
                gender=rec.get("gender", "unknown"),
                number=rec.get("number", "sg"),
            )
            if not ent.labels:
                raise KBLoadError(f"{entities_path}:{lineno}: entity {ent.id} has no label")
            entities[ent.id] = ent
    return entities


def load_kb(triples_path: str, entities_path: str, lang: str = "en") -> KnowledgeBase:
    """Load entities and triples, deduplicate, and build all indexes.

    Raises KBLoadError with the offending line number on malformed input,
    or with the full offender list when triples reference undeclared ids.
    """
    entities = load_entities(entities_path)
    triples: list[Triple] = []
    undeclared: list[str] = []
    with open(triples_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise KBLoadError(f"{triples_path}:{lineno}: expected 3 TAB-separated fields, got {len(parts)}")
            s, p, raw_o = (part.strip() for part in parts)
            if s not in entities:
                undeclared.append(f"line {lineno}: subject {s}")
            if p not in entities:
                undeclared.append(f"line {lineno}: predicate {p}")
            try:
                obj = _parse_object(raw_o, entities)
            except ValueError as exc:
                raise KBLoadError(f"{triples_path}:{lineno}: {exc}") from exc
            triples.append(Triple(s, p, obj))
    if undeclared:
        raise KBLoadError(f"{triples_path}: triples reference undeclared entities: " + "; ".join(undeclared))
    kb = KnowledgeBase(entities, triples, default_lang=lang)
    stats = kb.stats()
    log.info("loaded %d entities and %d triples from %s", stats["entities"], stats["triples"], triples_path)
    return kb


def dump_kb(kb: KnowledgeBase, triples_path: str, entities_path: str) -> None:
    """Serialize back to the flat-file formats (load -> dump -> load is identity)."""
    with open(entities_path, "w", encoding="utf-8") as fh:
        for ent_id in sorted(kb.entities):
            ent = kb.entities[ent_id]
            rec: dict = {
                "id": ent.id,
                "labels": ent.labels,
                "aliases": ent.aliases,
                "description": ent.description,
                "types": sorted(ent.types),
            }
            if ent.image_ref:
                rec["image"] = ent.image_ref
            if ent.gender != "unknown":
                rec["gender"] = ent.gender
            if ent.number != "sg":
                rec["number"] = ent.number
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    with open(triples_path, "w", encoding="utf-8") as fh:
        for t in kb.triples:
            fh.write(f"{t.subject}\t{t.predicate}\t{t.object}\n")


# -- pagerank ---------------------------------------------------------------


def compute_pagerank(
    kb: KnowledgeBase,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> dict[EntityId, float]:
    """Power-iteration PageRank over the entity graph.

    One directed edge per triple whose object is an entity; parallel edges
    count with multiplicity. Dangling mass is spread uniformly. Scores are
    written back into Entity.pagerank and sum to 1.
    """
    if not kb.entities:
        raise KBError("cannot compute pagerank on an empty entity set")
    if not 0.0 < damping < 1.0:
        raise KBError("damping must lie in (0, 1)")
    if tol <= 0:
        raise KBError("tol must be positive")
    nodes = sorted(kb.entities)
    pos = {e: i for i, e in enumerate(nodes)}
    n = len(nodes)
    src = []
    dst = []
    for t in kb.triples:
        if t.object.is_entity:
            src.append(pos[t.subject])
            dst.append(pos[t.object.text])
    src_arr = np.asarray(src, dtype=np.int64)
    dst_arr = np.asarray(dst, dtype=np.int64)
    outdeg = np.zeros(n)
    np.add.at(outdeg, src_arr, 1.0)
    dangling = outdeg == 0

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        contrib = np.zeros(n)
        if len(src_arr):
            np.add.at(contrib, dst_arr, x[src_arr] / outdeg[src_arr])
        contrib += x[dangling].sum() / n
        new = (1.0 - damping) / n + damping * contrib
        new /= new.sum()
        if np.abs(new - x).sum() < tol:
            x = new
            break
        x = new
    scores = {e: float(x[pos[e]]) for e in nodes}
    for e, score in scores.items():
        kb.entities[e].pagerank = score
    return scores


def entity_sheet(kb: KnowledgeBase, entity_id: EntityId, lang: str | None = None) -> EntitySheet:
    """Summarise one entity: label, description, types and picture reference."""
    lang = lang or kb.default_lang
    ent = kb.entities.get(entity_id)
    if ent is None:
        raise KBNotFound(f"unknown entity: {entity_id}")
    fallback = kb.default_lang
    description = ent.description.get(lang) or ent.description.get(fallback) or ""
    types = []
    for type_id in sorted(ent.types):
        type_ent = kb.entities.get(type_id)
        types.append((type_id, type_ent.label(lang, fallback) if type_ent else type_id))
    return EntitySheet(
        id=ent.id,
        label=ent.label(lang, fallback),
        description=description,
        types=types,
        image_ref=ent.image_ref,
    )
