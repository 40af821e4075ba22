"""Documentary excerpts, entity sheets, and the benchmark harness.

Run: python demos/retrieval_and_eval_demo.py
"""

from convkg.engine import Engine, fixture_config, fixture_dir
from convkg.evaluation import coref_link_prf, format_report, prf, run_benchmark

engine = Engine.load(fixture_config())

print("=== entity sheet ===")
sheet = engine.sheet("Q_MichaelJackson")
print(f"{sheet.label}: {sheet.description}")
print(f"types: {[label for _, label in sheet.types]}, image: {sheet.image_ref}")

print()
print("=== documentary excerpts for a question/answer pair ===")
for paragraph, score in engine.excerpts(
    {"Q_MichaelJackson"}, {"Q_JosephJackson"}, ["father", "born"], k=2
):
    print(f"[{paragraph.doc_id}] score={score:.2f}")
    print(f"  {paragraph.text}")

print()
print("=== answer-set metrics ===")
print("prf({madrid}, {madrid}) =", prf({"Madrid"}, {"Madrid"}))
print("prf({a,b}, {b,c})       =", prf({"a", "b"}, {"b", "c"}))
print("MUC split chain         =", coref_link_prf([{"a", "b"}, {"c"}], [{"a", "b", "c"}]))

print()
print("=== 20-question benchmark over the fixture KB ===")
report = run_benchmark(f"{fixture_dir()}/benchmark.jsonl", engine.bench_system())
print(format_report(report))
