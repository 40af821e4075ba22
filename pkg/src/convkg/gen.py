"""Answer text generation from slot templates.

Short answers are label lists; long answers fill per-language templates keyed
by answer kind (DEFINITION, ENTITY_SET, COUNT, CLARIFICATION).
"""

from __future__ import annotations

from dataclasses import dataclass

from .kb import KnowledgeBase, Value
from .nlu import QuestionFrame

KIND_DEFINITION = "DEFINITION"
KIND_ENTITY_SET = "ENTITY_SET"
KIND_COUNT = "COUNT"
KIND_CLARIFICATION = "CLARIFICATION"
_KINDS = (KIND_DEFINITION, KIND_ENTITY_SET, KIND_COUNT, KIND_CLARIFICATION)

_PLACEHOLDERS = ("{subject}", "{values}", "{description}", "{count}")


class TemplateError(Exception):
    """Malformed template file or unknown placeholder."""


class GenerationError(Exception):
    """Nothing to render (empty value set)."""


@dataclass(frozen=True)
class Template:
    answer_kind: str
    language: str
    pattern: str


Templates = dict[tuple[str, str], Template]


def load_templates(path: str) -> Templates:
    """Read `KIND lang | pattern` lines."""
    templates: Templates = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, sep, pattern = line.partition("|")
            if not sep:
                raise TemplateError(f"{path}:{lineno}: missing '|' separator")
            parts = head.split()
            if len(parts) != 2:
                raise TemplateError(f"{path}:{lineno}: expected 'KIND lang | pattern'")
            kind, lang = parts
            if kind not in _KINDS:
                raise TemplateError(f"{path}:{lineno}: unknown answer kind {kind!r}")
            pattern = pattern.strip()
            leftover = _strip_placeholders(pattern)
            if "{" in leftover or "}" in leftover:
                raise TemplateError(f"{path}:{lineno}: unrecognized placeholder in {pattern!r}")
            templates[(kind, lang)] = Template(answer_kind=kind, language=lang, pattern=pattern)
    return templates


def _strip_placeholders(pattern: str) -> str:
    for ph in _PLACEHOLDERS:
        pattern = pattern.replace(ph, "")
    return pattern


def _value_sort_key(v: Value, kb: KnowledgeBase, lang: str):
    if v.is_entity and v.text in kb.entities:
        ent = kb.entities[v.text]
        return (0, -ent.pagerank, ent.label(lang, kb.default_lang))
    return (1, 0.0, v.text)


def render_value(v: Value, kb: KnowledgeBase, lang: str) -> str:
    if v.is_entity and v.text in kb.entities:
        return kb.entities[v.text].label(lang, kb.default_lang)
    return v.text


def short_answer(values: list[Value] | set[Value], kb: KnowledgeBase, lang: str) -> str:
    """Comma-joined labels, descending pagerank then label."""
    values = list(values)
    if not values:
        raise GenerationError("cannot render an empty value set")
    ordered = sorted(values, key=lambda v: _value_sort_key(v, kb, lang))
    return ", ".join(render_value(v, kb, lang) for v in ordered)


def frame_answer_kind(frame: QuestionFrame) -> str:
    if frame.wh_type == "HOWMANY":
        return KIND_COUNT
    if frame.predicate_lemma is None:
        return KIND_DEFINITION
    return KIND_ENTITY_SET


def _subject_label(frame: QuestionFrame, values: list[Value], kb: KnowledgeBase, lang: str) -> str:
    for m in frame.name_mentions():
        if m.candidates:
            return render_value(Value.entity(m.top_candidate()), kb, lang)
    if values:
        return render_value(values[0], kb, lang)
    return ""


def _description(values: list[Value], kb: KnowledgeBase, lang: str) -> str:
    for v in values:
        if v.is_entity and v.text in kb.entities:
            ent = kb.entities[v.text]
            return ent.description.get(lang) or ent.description.get(kb.default_lang) or ""
    return ""


def _count(values: list[Value]) -> str:
    if len(values) == 1 and not values[0].is_entity and values[0].datatype == "number":
        return values[0].text
    return str(len(values))


def long_answer(
    frame: QuestionFrame,
    values: list[Value] | set[Value],
    kb: KnowledgeBase,
    templates: Templates,
    lang: str,
) -> str:
    """Template-rendered answer; falls back to the short answer when no template fits."""
    values = sorted(values, key=lambda v: _value_sort_key(v, kb, lang))
    kind = frame_answer_kind(frame)
    template = templates.get((kind, lang))
    if template is None:
        return short_answer(values, kb, lang)
    text = template.pattern
    text = text.replace("{subject}", _subject_label(frame, values, kb, lang))
    text = text.replace("{values}", ", ".join(render_value(v, kb, lang) for v in values))
    text = text.replace("{description}", _description(values, kb, lang))
    text = text.replace("{count}", _count(values))
    return text


_CLARIFICATIONS = {
    "en": {
        "UNRESOLVED_REFERENCE": "I am not sure who or what you are referring to. Could you rephrase?",
        "UNRESOLVED_ELLIPSIS": "I need a full question first before I can complete that one.",
        "UNRESOLVED_SPEAKER": "I do not know enough about you to answer that. Could you tell me more?",
        "NO_ANSWER": "I could not find an answer to that question.",
    },
    "fr": {
        "UNRESOLVED_REFERENCE": "Je ne sais pas de qui ou de quoi vous parlez. Pouvez-vous reformuler ?",
        "UNRESOLVED_ELLIPSIS": "Il me faut d'abord une question complète avant de compléter celle-ci.",
        "UNRESOLVED_SPEAKER": "Je ne vous connais pas assez pour répondre. Pouvez-vous m'en dire plus ?",
        "NO_ANSWER": "Je n'ai pas trouvé de réponse à cette question.",
    },
}


def clarification_text(signal: str, lang: str, templates: Templates | None = None) -> str:
    table = _CLARIFICATIONS.get(lang, _CLARIFICATIONS["en"])
    message = table.get(signal, table["NO_ANSWER"])
    if templates:
        template = templates.get((KIND_CLARIFICATION, lang))
        if template is not None:
            return template.pattern.replace("{values}", message)
    return message
