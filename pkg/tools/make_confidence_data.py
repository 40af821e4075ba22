"""Regenerate the bundled arbitration training set and confidence model.

Runs a battery of questions against the fixture KB, collects one feature
vector per backend per question, labels each against the gold answers
derived from the KB, then trains and saves the boosted-stump model.

Usage: python tools/make_confidence_data.py
"""

from __future__ import annotations

from pathlib import Path

from convkg.arbiter import extract_features, save_model, train_adaboost
from convkg.context import resolve_coreference, resolve_deixis, resolve_ellipsis
from convkg.engine import Engine, fixture_config, fixture_dir
from convkg.gen import render_value
from convkg.kb import normalize_surface
from convkg.nlu import analyze
from convkg.reasoning import answer_reasoning
from convkg.search import answer_search

OUT_DIR = Path(fixture_dir())


def gold_labels(kb, entity_ids=None, literals=None):
    out = set()
    for e in entity_ids or ():
        out.add(kb.entities[e].label("en"))
    for lit in literals or ():
        out.add(lit)
    return out


def build_questions(engine):
    kb = engine.kb
    label = lambda e: kb.entities[e].label("en")
    questions: list[tuple[str, list[str], set[str]]] = []  # (text, context, gold)

    people = [e for e in kb.entities if "Q_Human" in kb.entities[e].types]
    for person in sorted(people):
        questions.append((f"Who is {label(person)}?", [], {label(person)}))
        questions.append((f"Who was {label(person)}?", [], {label(person)}))

    places = [
        "Q_Spain", "Q_Portugal", "Q_Andorra", "Q_France", "Q_Madrid",
        "Q_Lisbon", "Q_AndorraLaVella", "Q_Paris", "Q_IberianPeninsula",
    ]
    for place in places:
        questions.append((f"What is {label(place)}?", [], {label(place)}))

    attribute_words = {
        "P_father": "father",
        "P_mother": "mother",
        "P_spouse": "spouse",
        "P_capital": "capital",
        "P_head_of_state": "president",
        "P_citizen_of": "citizenship",
    }
    skip_subjects = {"Q_Gibraltar"}  # label collides with its capital city
    for pred, word in attribute_words.items():
        for t in kb.match(p=pred):
            if t.subject in skip_subjects or not t.object.is_entity:
                continue
            subject = label(t.subject)
            gold = {label(x.object.text) for x in kb.match(s=t.subject, p=pred)}
            wh = "Who" if "Q_Human" in kb.entities[t.object.text].types else "What"
            questions.append((f"{wh} is the {word} of {subject}?", [], gold))
            questions.append((f"{wh} is {subject}'s {word}?", [], gold))
            if pred in ("P_father", "P_mother", "P_spouse"):
                questions.append((f"What is the name of {subject}'s {word}?", [], gold))

    for subject in ("Q_MichaelJackson", "Q_MarieCurie"):
        date = next(t.object.text for t in kb.match(s=subject, p="P_birthdate"))
        questions.append((f"When was {label(subject)} born?", [], {date}))

    siblings = {label(t.subject) for t in kb.match(p="P_sibling")}
    questions.append(("Who are the siblings of Michael Jackson?", [], siblings))
    questions.append(("Who are Michael Jackson's siblings?", [], siblings))
    questions.append(("How many siblings does Michael Jackson have?", [], {str(len(siblings))}))
    for t in kb.match(p="P_sibling"):
        # only the edge toward Michael Jackson is derivable for each sibling
        questions.append((f"Who is the sibling of {label(t.subject)}?", [], {"Michael Jackson"}))

    for country in ("Q_Spain", "Q_Portugal", "Q_Andorra"):
        questions.append((f"What is {label(country)} part of?", [], {"Iberian Peninsula"}))
    questions.append(
        ("Which countries are part of the Iberian Peninsula?", [], {"Spain", "Portugal", "Andorra", "Gibraltar"})
    )
    questions.append(
        (
            "What are the capitals of the countries of the Iberian Peninsula?",
            [],
            {"Andorra la Vella", "Gibraltar", "Lisbon", "Madrid"},
        )
    )
    for country in ("Q_Spain", "Q_Portugal", "Q_Andorra", "Q_France"):
        capital = next(t.object.text for t in kb.match(s=country, p="P_capital"))
        questions.append((f"Which city is the capital of {label(country)}?", [], {label(capital)}))

    # pronoun and ellipsis turns, resolved against a short history
    questions.append(("What is his father's name?", ["Who is Michael Jackson?"], {"Joseph Jackson"}))
    questions.append(
        ("and his mother's?", ["Who is Michael Jackson?", "What is his father's name?"], {"Katherine Jackson"})
    )
    questions.append(("Who is her husband?", ["Who is Marie Curie?"], {"Pierre Curie"}))
    questions.append(
        ("and his brothers' and sisters'?",
         ["Who is Michael Jackson?", "What is his father's name?", "and his mother's?"],
         siblings)
    )

    # unanswerable / off-KB questions: every produced answer is wrong
    nonsense = [
        "Who is Elvis Presley?",
        "Who is the president of Portugal?",
        "What is the capital of Poland?",
        "When was Tito Jackson born?",
        "What is the melting point of iron?",
        "Who wrote the song Thriller?",
        "Which rivers cross the Iberian Peninsula?",
        "How many children does Marie Curie have?",
        "What is the currency of Andorra?",
        "Who is the mayor of Madrid?",
        "Where does Janet Jackson live?",
        "What is the population of Lisbon?",
        "flurble grumph zixt",
        "Tell me something interesting.",
        "capital capital capital",
    ]
    for text in nonsense:
        questions.append((text, [], set()))
    return questions


def resolve(engine, text, context_turns):
    state = engine.new_state()
    for prior in context_turns:
        engine.ask(state, prior)
    frame = analyze(text, engine.kb, engine.lexicon)
    if frame.has_deixis:
        frame = resolve_deixis(frame, state, engine.lexicon, engine.kb)
    frame = resolve_coreference(frame, state, engine.kb)
    if frame.is_elliptical:
        frame = resolve_ellipsis(frame, state, engine.lexicon)
    return frame


def main() -> None:
    engine = Engine.load(fixture_config())
    kb = engine.kb
    samples = []
    n_questions = 0
    for text, context_turns, gold in build_questions(engine):
        try:
            frame = resolve(engine, text, context_turns)
        except Exception:
            continue
        n_questions += 1
        gold_norm = {normalize_surface(g) for g in gold}
        for result in (
            answer_reasoning(frame, engine.grammar, kb),
            answer_search(frame, kb, engine.lexicon, engine.search_config),
        ):
            features = extract_features(result, frame, kb)
            if result.failed:
                label = -1
            else:
                produced = {normalize_surface(render_value(v, kb, "en")) for v in result.values}
                label = 1 if produced == gold_norm and gold_norm else -1
            samples.append((features, label))

    out_samples = OUT_DIR / "confidence_samples.tsv"
    with open(out_samples, "w", encoding="utf-8") as fh:
        fh.write("# label\tn_values\tn_provenance\tcoverage\trelevance\trule_priority\t"
                 "n_question_tokens\tn_mentions\tanswer_pagerank_max\tsource_flag\tfailed_flag\n")
        for features, label in samples:
            fh.write(f"{label:+d}\t" + "\t".join(repr(f) for f in features) + "\n")

    model = train_adaboost(samples, rounds=30)
    save_model(model, str(OUT_DIR / "confidence.model"))

    n_pos = sum(1 for _, y in samples if y > 0)
    print(f"{n_questions} questions -> {len(samples)} samples ({n_pos} positive)")
    print(f"model: {len(model.stumps)} stumps -> {OUT_DIR / 'confidence.model'}")
    # training accuracy report
    from convkg.arbiter import score

    correct = sum(1 for f, y in samples if (score(model, f) > 0.5) == (y > 0))
    print(f"training accuracy: {correct}/{len(samples)} = {correct / len(samples):.3f}")


if __name__ == "__main__":
    main()
