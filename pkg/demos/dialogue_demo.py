"""Walk through a multi-turn dialogue with pronouns, ellipsis and deixis.

Run: python demos/dialogue_demo.py
"""

from convkg.engine import Engine, fixture_config

engine = Engine.load(fixture_config())

print("=== in-context family dialogue ===")
state = engine.new_state()
for text in (
    "Who is Michael Jackson?",
    "What is his father's name?",   # "his" resolved by salience
    "and his mother's?",            # elliptical fragment completed from the last turn
    "and his brothers' and sisters'?",
):
    answer = engine.ask(state, text)
    print(f"U: {text}")
    print(f"S: {answer.long_text or answer.short_text}")
    print(f"   [{answer.source}, confidence {answer.confidence:.2f}]")

print()
print("=== out-of-context chained question ===")
state = engine.new_state()
answer = engine.ask(state, "What are the capitals of the countries of the Iberian Peninsula?")
print(f"S: {answer.short_text}")
print("   explored triples:")
for triple in sorted(answer.provenance):
    print(f"     {triple}")

print()
print("=== speaker deixis (profile: alice, born in France) ===")
state = engine.new_state("alice")
answer = engine.ask(state, "Who is the president of the country where I was born?")
print(f"S: {answer.short_text}")

print()
print("=== the same question without a profile asks for clarification ===")
state = engine.new_state()
answer = engine.ask(state, "Who is the president of the country where I was born?")
print(f"S: {answer.short_text}")
