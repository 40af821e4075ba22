"""Conjunctive graph-pattern queries and PageRank over the bundled KB.

Run: python demos/query_engine_demo.py
"""

from convkg.engine import Engine, fixture_config
from convkg.query import evaluate, parse_query, plan

engine = Engine.load(fixture_config())
kb = engine.kb

print(f"KB: {kb.stats()['entities']} entities, {kb.stats()['triples']} triples")

print()
print("=== two-pattern join: capitals of the Iberian countries ===")
q = parse_query(
    "SELECT ?c\n"
    "?x P_part_of Q_IberianPeninsula\n"
    "?x P_capital ?c"
)
print(q)
print("plan order (most selective first):")
for pattern in plan(q, kb):
    print(f"  {pattern}")
for value in evaluate(q, kb):
    print(f"  -> {kb.entities[value.text].label('en')}")

print()
print("=== counting solutions ===")
q = parse_query("COUNT ?x\n?x P_sibling Q_MichaelJackson")
print(q)
print(f"  -> {evaluate(q, kb)} siblings")

print()
print("=== predicate variables work too ===")
q = parse_query("SELECT ?p\nQ_MichaelJackson ?p Q_JosephJackson")
print(q)
for value in evaluate(q, kb):
    print(f"  -> {value.text}")

print()
print("=== PageRank: ten best-connected entities ===")
ranked = sorted(kb.entities.values(), key=lambda e: (-e.pagerank, e.id))
for ent in ranked[:10]:
    print(f"  {ent.pagerank:.4f}  {ent.label('en')} ({ent.id})")
