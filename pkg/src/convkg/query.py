"""Conjunctive graph-pattern queries over a KnowledgeBase.

A GraphQuery is a set of triple patterns sharing variables, one projection
variable, and a LIST or COUNT aggregate. Evaluation is a left-deep nested
index join following plan() order; results use set semantics.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .kb import KnowledgeBase, Triple, Value

AGG_LIST = "LIST"
AGG_COUNT = "COUNT"


class QueryError(Exception):
    """Invalid query: disconnected patterns, missing projection, bad term."""


@dataclass(frozen=True)
class Term:
    """Variable ("?x"), entity id, or literal value."""

    kind: str  # "var" | "entity" | "literal"
    name: str = ""  # variable name, with leading "?"
    value: Value | None = None  # entity/literal terms

    @staticmethod
    def var(name: str) -> "Term":
        if not name.startswith("?") or len(name) < 2:
            raise QueryError(f"variable names must start with '?': {name!r}")
        return Term("var", name=name)

    @staticmethod
    def entity(entity_id: str) -> "Term":
        return Term("entity", value=Value.entity(entity_id))

    @staticmethod
    def literal(value: Value) -> "Term":
        return Term("literal", value=value)

    @property
    def is_var(self) -> bool:
        return self.kind == "var"

    def __str__(self) -> str:
        return self.name if self.is_var else str(self.value)


@dataclass(frozen=True)
class TriplePattern:
    s: Term
    p: Term
    o: Term

    def variables(self) -> set[str]:
        return {t.name for t in (self.s, self.p, self.o) if t.is_var}

    def constants(self) -> set[Value]:
        return {t.value for t in (self.s, self.p, self.o) if not t.is_var}

    def __str__(self) -> str:
        return f"{self.s} {self.p} {self.o}"


@dataclass
class GraphQuery:
    patterns: list[TriplePattern]
    project: str
    aggregate: str = AGG_LIST

    def variables(self) -> set[str]:
        out: set[str] = set()
        for pat in self.patterns:
            out |= pat.variables()
        return out

    def __str__(self) -> str:
        head = f"{'COUNT' if self.aggregate == AGG_COUNT else 'SELECT'} {self.project}"
        return "\n".join([head, *(str(p) for p in self.patterns)])


Bindings = dict[str, Value]


def validate(q: GraphQuery) -> None:
    """Reject queries with no patterns, missing projection, or disconnected parts."""
    if not q.patterns:
        raise QueryError("query has no patterns")
    if q.aggregate not in (AGG_LIST, AGG_COUNT):
        raise QueryError(f"unknown aggregate: {q.aggregate}")
    if q.project not in q.variables():
        raise QueryError(f"projection {q.project} does not occur in any pattern")
    for pat in q.patterns:
        if pat.p.kind == "literal":
            raise QueryError("predicate position must be a variable or entity")
    # connectivity over shared variables/constants; fully ground patterns are
    # pure filters (at most one match) and connect trivially
    remaining = [i for i in range(len(q.patterns)) if q.patterns[i].variables()]
    if not remaining:
        return
    first = remaining.pop(0)
    frontier_syms = q.patterns[first].variables() | q.patterns[first].constants()
    changed = True
    while changed and remaining:
        changed = False
        for i in list(remaining):
            syms = q.patterns[i].variables() | q.patterns[i].constants()
            if syms & frontier_syms:
                frontier_syms |= syms
                remaining.remove(i)
                changed = True
    if remaining:
        raise QueryError("query patterns do not form a connected graph")


def _estimate(pat: TriplePattern, kb: KnowledgeBase, bound: set[str]) -> int:
    """Upper bound on matching triples given variables bound so far."""
    s = pat.s.value.text if pat.s.kind == "entity" else None
    p = pat.p.value.text if pat.p.kind == "entity" else None
    o = pat.o.value if not pat.o.is_var else None
    # a variable already bound behaves like a constant, but its value is
    # unknown at plan time; credit it with the best single-position estimate
    if s is None and p is None and o is None and not (pat.variables() & bound):
        return len(kb.triples) + 1  # cross product, schedule last
    n = len(kb.match(s, p, o))
    if pat.variables() & bound:
        n = min(n, len(kb.triples))
        n = max(n // 2, 0)
    return n


def plan(q: GraphQuery, kb: KnowledgeBase) -> list[TriplePattern]:
    """Order patterns most-selective-first; never changes evaluate() results."""
    validate(q)
    remaining = list(q.patterns)
    ordered: list[TriplePattern] = []
    bound: set[str] = set()
    while remaining:
        # prefer patterns connected to what is already bound
        connected = [pat for pat in remaining if not bound or (pat.variables() & bound)]
        pool = connected or remaining
        best = min(pool, key=lambda pat: (_estimate(pat, kb, bound), q.patterns.index(pat)))
        ordered.append(best)
        remaining.remove(best)
        bound |= best.variables()
    return ordered


def _substitute(term: Term, binding: Bindings) -> Value | None:
    if term.is_var:
        return binding.get(term.name)
    return term.value


def _match_pattern(pat: TriplePattern, kb: KnowledgeBase, binding: Bindings) -> list[Triple]:
    s_val = _substitute(pat.s, binding)
    p_val = _substitute(pat.p, binding)
    o_val = _substitute(pat.o, binding)
    if (s_val is not None and not s_val.is_entity) or (p_val is not None and not p_val.is_entity):
        return []  # literals can never fill subject/predicate positions
    return kb.match(
        s_val.text if s_val is not None else None,
        p_val.text if p_val is not None else None,
        o_val,
    )


def _extend(pat: TriplePattern, triple: Triple, binding: Bindings) -> Bindings | None:
    new = dict(binding)
    for term, actual in ((pat.s, Value.entity(triple.subject)), (pat.p, Value.entity(triple.predicate)), (pat.o, triple.object)):
        if term.is_var:
            prev = new.get(term.name)
            if prev is not None and prev != actual:
                return None
            new[term.name] = actual
        elif term.value != actual:
            return None
    return new


def solutions(q: GraphQuery, kb: KnowledgeBase) -> list[Bindings]:
    """All total variable bindings satisfying every pattern."""
    ordered = plan(q, kb)
    results: list[Bindings] = []

    def recurse(i: int, binding: Bindings) -> None:
        if i == len(ordered):
            results.append(binding)
            return
        pat = ordered[i]
        for triple in _match_pattern(pat, kb, binding):
            extended = _extend(pat, triple, binding)
            if extended is not None:
                recurse(i + 1, extended)

    recurse(0, {})
    return results


def evaluate(q: GraphQuery, kb: KnowledgeBase) -> list[Value] | int:
    """Project-variable values over all solutions (LIST), or their count (COUNT)."""
    values = {sol[q.project] for sol in solutions(q, kb)}
    if q.aggregate == AGG_COUNT:
        return len(values)
    return sorted(values)


def provenance(q: GraphQuery, kb: KnowledgeBase) -> set[Triple]:
    """Every KB triple used by some solution of the query."""
    triples: set[Triple] = set()
    for sol in solutions(q, kb):
        for pat in q.patterns:
            s = _substitute(pat.s, sol)
            p = _substitute(pat.p, sol)
            o = _substitute(pat.o, sol)
            assert s is not None and p is not None and o is not None
            triples.add(Triple(s.text, p.text, o))
    return triples


# -- textual debug form ------------------------------------------------------


def format_query(q: GraphQuery) -> str:
    return str(q)


def parse_term(token: str) -> Term:
    if token.startswith("?"):
        return Term.var(token)
    if token.startswith('"'):
        m = re.match(r'^"(.*)"(?:\^(\w+))?$', token)
        if not m:
            raise QueryError(f"malformed literal term: {token}")
        return Term.literal(Value.literal(m.group(1), m.group(2) or "plain"))
    return Term.entity(token)


def parse_query(text: str) -> GraphQuery:
    """Parse the debug form: header `SELECT ?x` / `COUNT ?x`, one pattern per line."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise QueryError("empty query text")
    head = lines[0].split()
    if len(head) != 2 or head[0] not in ("SELECT", "COUNT"):
        raise QueryError(f"bad query header: {lines[0]!r}")
    aggregate = AGG_LIST if head[0] == "SELECT" else AGG_COUNT
    patterns = []
    for ln in lines[1:]:
        toks = ln.split()
        if len(toks) != 3:
            raise QueryError(f"pattern line needs 3 terms: {ln!r}")
        patterns.append(TriplePattern(*(parse_term(t) for t in toks)))
    q = GraphQuery(patterns, project=head[1], aggregate=aggregate)
    validate(q)
    return q
