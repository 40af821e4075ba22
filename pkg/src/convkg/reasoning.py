"""Grammar-driven QA backend.

Rules are surface patterns with entity/predicate slots; each carries a query
template. The first matched rule whose instantiated query returns something
wins, mirroring clause order in a logic grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import query as q
from .kb import KnowledgeBase, Triple, Value
from .nlu import NAME, Lexicon, Mention, QuestionFrame, Token

SOURCE_REASONING = "REASONING"
SOURCE_SEARCH = "SEARCH"

KIND_ENTITY_SET = "ENTITY_SET"
KIND_COUNT = "COUNT"
KIND_DEFINITION = "DEFINITION"

# atom kinds
A_LEMMA = "lemma"
A_POS = "pos"
A_ENTITY = "entity_slot"
A_PRED = "pred_slot"
A_WILD = "wildcard"

_ENTITY_SLOT_RE = re.compile(r"^E\d+$")
_PRED_SLOT_RE = re.compile(r"^P\d+$")


class GrammarError(Exception):
    """Malformed grammar file or templates inconsistent with the KB."""


class InstantiationError(Exception):
    """A rule matched but its template slots could not be filled."""


@dataclass(frozen=True)
class Atom:
    kind: str
    value: str = ""  # lemma text, POS tag, or slot name


@dataclass
class RulePattern:
    name: str
    atoms: list[Atom]
    priority: int

    def slots(self) -> set[str]:
        return {a.value for a in self.atoms if a.kind in (A_ENTITY, A_PRED)}

    def wildcards(self) -> int:
        return sum(1 for a in self.atoms if a.kind == A_WILD)


@dataclass
class LogicalPattern:
    rule: str
    answer_kind: str
    # DEFINITION rules name the slot whose entity is the answer
    define_slot: str | None = None
    # other rules carry a query template: raw (s, p, o) term strings with $slots
    project: str = "?y"
    aggregate: str = q.AGG_LIST
    patterns: list[tuple[str, str, str]] = field(default_factory=list)

    def placeholders(self) -> set[str]:
        found = set()
        if self.define_slot:
            found.add(self.define_slot)
        for triple in self.patterns:
            for term in triple:
                if term.startswith("$"):
                    found.add(term[1:])
        return found


@dataclass
class Grammar:
    rules: list[tuple[RulePattern, LogicalPattern]]
    lexicon: Lexicon

    def ordered(self) -> list[tuple[RulePattern, LogicalPattern]]:
        return sorted(self.rules, key=lambda r: (r[0].priority, r[0].wildcards(), r[0].name))


@dataclass
class QAResult:
    """Backend output, shared by the reasoning and search QA systems."""

    source: str
    values: list[Value]
    provenance: set[Triple] = field(default_factory=set)
    query_debug: str = ""
    features: list[float] | None = None
    failed: bool = False
    answer_kind: str = KIND_ENTITY_SET
    rule_priority: int = -1
    coverage: float = 0.0
    relevance: float = 0.0

    @staticmethod
    def failure(source: str, debug: str = "") -> "QAResult":
        return QAResult(source=source, values=[], query_debug=debug, failed=True)


# -- matching ----------------------------------------------------------------


@dataclass(frozen=True)
class _Element:
    """One matchable unit: a token, or a whole NAME-mention span."""

    token: Token | None = None
    mention: Mention | None = None

    @property
    def is_entity(self) -> bool:
        return self.mention is not None


def _elements(frame: QuestionFrame) -> list[_Element]:
    spans = {m.token_span[0]: m for m in frame.mentions if m.kind == NAME}
    out: list[_Element] = []
    i = 0
    while i < len(frame.raw_tokens):
        if i in spans:
            m = spans[i]
            out.append(_Element(mention=m))
            i = m.token_span[1]
        else:
            out.append(_Element(token=frame.raw_tokens[i]))
            i += 1
    return out


def _atom_matches(atom: Atom, el: _Element, lexicon: Lexicon) -> bool:
    if atom.kind == A_ENTITY:
        return el.is_entity
    if el.is_entity:
        return False
    tok = el.token
    assert tok is not None
    if atom.kind == A_LEMMA:
        return tok.lemma == atom.value
    if atom.kind == A_POS:
        return tok.pos == atom.value
    if atom.kind == A_PRED:
        return tok.lemma in lexicon.synonyms
    return False


Slots = dict[str, object]  # slot name -> Mention (entity slots) | str lemma (pred slots)


def _match_atoms(atoms: list[Atom], elements: list[_Element], lexicon: Lexicon) -> Slots | None:
    """Anchored left-to-right match; wildcards consume lazily; first match wins."""

    def rec(ai: int, ei: int, binds: Slots) -> Slots | None:
        if ai == len(atoms):
            return binds if ei == len(elements) else None
        atom = atoms[ai]
        if atom.kind == A_WILD:
            for skip in range(len(elements) - ei + 1):
                result = rec(ai + 1, ei + skip, binds)
                if result is not None:
                    return result
            return None
        if ei >= len(elements) or not _atom_matches(atom, elements[ei], lexicon):
            return None
        if atom.kind == A_ENTITY:
            binds = {**binds, atom.value: elements[ei].mention}
        elif atom.kind == A_PRED:
            binds = {**binds, atom.value: elements[ei].token.lemma}
        return rec(ai + 1, ei + 1, binds)

    return rec(0, 0, {})


def match_rules(frame: QuestionFrame, grammar: Grammar) -> list[tuple[RulePattern, LogicalPattern, Slots]]:
    """All rules matching the frame, ordered by (priority, fewer wildcards)."""
    elements = _elements(frame)
    out = []
    for rule, logical in grammar.ordered():
        binds = _match_atoms(rule.atoms, elements, grammar.lexicon)
        if binds is not None:
            out.append((rule, logical, binds))
    return out


# -- instantiation -----------------------------------------------------------


def _resolve_slot_term(term: str, binds: Slots, lexicon: Lexicon) -> str:
    if not term.startswith("$"):
        return term
    slot = term[1:]
    bound = binds.get(slot)
    if bound is None:
        raise InstantiationError(f"slot {slot} is unbound")
    if isinstance(bound, Mention):
        if not bound.candidates:
            raise InstantiationError(f"mention for slot {slot} has no entity candidates")
        return bound.top_candidate()
    # predicate slot: lemma -> predicate id via the synonym table
    targets = lexicon.synonyms.get(str(bound))
    if not targets:
        raise InstantiationError(f"lemma {bound!r} has no predicate synonym")
    return sorted(targets)[0]


def instantiate(logical: LogicalPattern, binds: Slots, lexicon: Lexicon) -> q.GraphQuery:
    """Fill template slots: entity slots take the top-pagerank candidate."""
    patterns = []
    for s, p, o in logical.patterns:
        patterns.append(
            q.TriplePattern(
                q.parse_term(_resolve_slot_term(s, binds, lexicon)),
                q.parse_term(_resolve_slot_term(p, binds, lexicon)),
                q.parse_term(_resolve_slot_term(o, binds, lexicon)),
            )
        )
    gq = q.GraphQuery(patterns, project=logical.project, aggregate=logical.aggregate)
    q.validate(gq)
    return gq


def _definition_result(entity_id: str, kb: KnowledgeBase) -> QAResult:
    ent = kb.entities[entity_id]
    provenance = {t for t in kb.match(s=entity_id) if t.object.is_entity and t.object.text in ent.types}
    return QAResult(
        source=SOURCE_REASONING,
        values=[Value.entity(entity_id)],
        provenance=provenance,
        query_debug=f"DEFINE {entity_id}",
        answer_kind=KIND_DEFINITION,
    )


def answer_reasoning(frame: QuestionFrame, grammar: Grammar, kb: KnowledgeBase) -> QAResult:
    """Try matched rules in order; first rule with a non-empty result wins."""
    for rule, logical, binds in match_rules(frame, grammar):
        try:
            if logical.answer_kind == KIND_DEFINITION:
                assert logical.define_slot is not None
                mention = binds.get(logical.define_slot)
                if not isinstance(mention, Mention) or not mention.candidates:
                    raise InstantiationError("definition slot unbound")
                result = _definition_result(mention.top_candidate(), kb)
                result.rule_priority = rule.priority
                return result
            gq = instantiate(logical, binds, grammar.lexicon)
        except (InstantiationError, q.QueryError):
            continue
        outcome = q.evaluate(gq, kb)
        if logical.answer_kind == KIND_COUNT or gq.aggregate == q.AGG_COUNT:
            count = outcome if isinstance(outcome, int) else len(outcome)
            if count == 0:
                continue
            return QAResult(
                source=SOURCE_REASONING,
                values=[Value.literal(str(count), "number")],
                provenance=q.provenance(gq, kb),
                query_debug=q.format_query(gq),
                answer_kind=KIND_COUNT,
                rule_priority=rule.priority,
            )
        values = list(outcome) if isinstance(outcome, list) else []
        if not values:
            continue
        return QAResult(
            source=SOURCE_REASONING,
            values=values,
            provenance=q.provenance(gq, kb),
            query_debug=q.format_query(gq),
            answer_kind=KIND_ENTITY_SET,
            rule_priority=rule.priority,
        )
    return QAResult.failure(SOURCE_REASONING, debug="no rule produced an answer")


# -- grammar file ------------------------------------------------------------


def _parse_atom(token: str) -> Atom:
    if token == "*":
        return Atom(A_WILD)
    if token.startswith("POS:"):
        return Atom(A_POS, token[4:])
    if _ENTITY_SLOT_RE.match(token):
        return Atom(A_ENTITY, token)
    if _PRED_SLOT_RE.match(token):
        return Atom(A_PRED, token)
    return Atom(A_LEMMA, token)


def load_grammar(path: str, kb: KnowledgeBase, lexicon: Lexicon) -> Grammar:
    """Parse rule blocks (RULE / PATTERN / QUERY / KIND) separated by blank lines."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    rules: list[tuple[RulePattern, LogicalPattern]] = []
    names: set[str] = set()
    blocks = [b for b in re.split(r"\n\s*\n", text) if b.strip() and not b.strip().startswith("#")]
    for block_no, block in enumerate(blocks, start=1):
        fields: dict[str, str] = {}
        for line in block.strip().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, rest = line.partition(" ")
            fields[key] = rest.strip()
        try:
            name, prio = fields["RULE"].split()
            atoms = [_parse_atom(t) for t in fields["PATTERN"].split()]
            kind = fields["KIND"]
            query_spec = fields["QUERY"]
        except KeyError as exc:
            raise GrammarError(f"{path}: block {block_no}: missing {exc.args[0]} line") from exc
        except ValueError as exc:
            raise GrammarError(f"{path}: block {block_no}: malformed RULE line") from exc
        if name in names:
            raise GrammarError(f"{path}: block {block_no}: duplicate rule name {name!r}")
        names.add(name)
        if kind not in (KIND_ENTITY_SET, KIND_COUNT, KIND_DEFINITION):
            raise GrammarError(f"{path}: block {block_no}: unknown KIND {kind!r}")
        rule = RulePattern(name=name, atoms=atoms, priority=int(prio))
        if not rule.slots():
            raise GrammarError(f"{path}: block {block_no}: rule has no slots")

        if query_spec.startswith("DEFINE"):
            parts = query_spec.split()
            if len(parts) != 2 or not parts[1].startswith("$"):
                raise GrammarError(f"{path}: block {block_no}: DEFINE takes one $slot")
            logical = LogicalPattern(rule=name, answer_kind=kind, define_slot=parts[1][1:])
        else:
            segments = [seg.strip() for seg in query_spec.split(";")]
            head = segments[0].split()
            if len(head) != 2 or head[0] not in ("SELECT", "COUNT"):
                raise GrammarError(f"{path}: block {block_no}: bad query header {segments[0]!r}")
            patterns = []
            for seg in segments[1:]:
                terms = seg.split()
                if len(terms) != 3:
                    raise GrammarError(f"{path}: block {block_no}: pattern needs 3 terms: {seg!r}")
                patterns.append((terms[0], terms[1], terms[2]))
            if not patterns:
                raise GrammarError(f"{path}: block {block_no}: query has no patterns")
            logical = LogicalPattern(
                rule=name,
                answer_kind=kind,
                project=head[1],
                aggregate=q.AGG_COUNT if head[0] == "COUNT" else q.AGG_LIST,
                patterns=patterns,
            )
        missing = logical.placeholders() - rule.slots()
        if missing:
            raise GrammarError(f"{path}: block {block_no}: template slots not in pattern: {sorted(missing)}")
        for s, p, o in logical.patterns:
            if not p.startswith(("$", "?")) and p not in kb.predicate_ids:
                raise GrammarError(f"{path}: block {block_no}: template predicate {p!r} not in KB")
        rules.append((rule, logical))
    if not rules:
        raise GrammarError(f"{path}: no rule blocks found")
    return Grammar(rules=rules, lexicon=lexicon)
