"""Dialogue state: salience-based coreference, ellipsis and deixis resolution,
and per-turn orchestration of the QA backends, arbitration and generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from . import gen
from .arbiter import AdaBoostModel, Answer, arbitrate, clarification_answer, extract_features
from .kb import KnowledgeBase, Value
from .nlu import (
    NAME,
    NOUN,
    POSSESSIVE,
    PRONOUN,
    SELF,
    VERB,
    Lexicon,
    Mention,
    QuestionFrame,
    Token,
    analyze,
)
from .reasoning import Grammar, QAResult, SOURCE_REASONING, SOURCE_SEARCH, answer_reasoning
from .search import SearchConfig, answer_search

ROLE_TOPIC = "TOPIC"
ROLE_ANSWER = "ANSWER"

REWARD_CORRECT = "CORRECT"
REWARD_INCORRECT = "INCORRECT"

UNRESOLVED_REFERENCE = "UNRESOLVED_REFERENCE"
UNRESOLVED_ELLIPSIS = "UNRESOLVED_ELLIPSIS"
UNRESOLVED_SPEAKER = "UNRESOLVED_SPEAKER"


class ResolutionError(Exception):
    """A pronoun, fragment or deictic reference could not be grounded."""

    def __init__(self, signal: str, message: str):
        super().__init__(message)
        self.signal = signal


class RewardError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class SpeakerProfile:
    speaker_id: str
    name: str
    attributes: dict[str, Value] = field(default_factory=dict)
    language: str = "en"


@dataclass
class SalienceEntry:
    entity: str
    gender: str
    number: str
    last_turn: int
    role: str  # TOPIC | ANSWER


@dataclass
class Turn:
    index: int
    user_text: str
    resolved_frame: QuestionFrame
    answer: Answer
    reward: str | None = None


@dataclass
class DialogueState:
    session_id: str
    turns: list[Turn] = field(default_factory=list)
    salience: list[SalienceEntry] = field(default_factory=list)
    last_frame: QuestionFrame | None = None
    speaker: SpeakerProfile | None = None

    @property
    def next_turn(self) -> int:
        return len(self.turns)


def _compatible(mention: Mention, entry: SalienceEntry) -> bool:
    """Gender and number must agree whenever both sides are known."""
    if mention.gender != "unknown" and entry.gender != "unknown" and mention.gender != entry.gender:
        return False
    if mention.number != entry.number and "unknown" not in (mention.number, entry.number):
        return False
    return True


def _as_name_mention(mention: Mention, entity_id: str, kb: KnowledgeBase) -> Mention:
    ent = kb.entities[entity_id]
    return replace(
        mention,
        kind=NAME,
        candidates=[(entity_id, ent.pagerank)],
        gender=ent.gender,
        number=ent.number,
    )


def resolve_coreference(frame: QuestionFrame, state: DialogueState, kb: KnowledgeBase) -> QuestionFrame:
    """Bind third-person pronouns/possessives to the most salient compatible entity."""
    resolved = frame.copy()
    for i, mention in enumerate(resolved.mentions):
        if mention.kind not in (PRONOUN, POSSESSIVE) or mention.person != 3:
            continue
        if not state.salience:
            raise ResolutionError(
                UNRESOLVED_REFERENCE, f"no discourse entity available for {mention.surface!r}"
            )
        entry = next((e for e in state.salience if _compatible(mention, e)), None)
        if entry is None:
            raise ResolutionError(
                UNRESOLVED_REFERENCE, f"no salient entity agrees with {mention.surface!r}"
            )
        resolved.mentions[i] = _as_name_mention(mention, entry.entity, kb)
    return resolved


def _rewrite_predicate_token(tokens: list[Token], old_lemma: str | None, new_lemma: str) -> list[Token]:
    out = [replace(t) for t in tokens]
    for t in out:
        if old_lemma is not None and t.lemma == old_lemma:
            t.surface = new_lemma
            t.norm = new_lemma
            t.lemma = new_lemma
            t.pos = NOUN
            return out
    return out


def resolve_ellipsis(frame: QuestionFrame, state: DialogueState, lexicon: Lexicon) -> QuestionFrame:
    """Complete a fragment by overriding slots of the previous resolved frame."""
    if state.last_frame is None:
        raise ResolutionError(UNRESOLVED_ELLIPSIS, "no previous question to complete the fragment with")
    merged = state.last_frame.copy()
    merged.is_elliptical = False

    heads: list[str] = []
    for link_heads in frame.possessive_links.values():
        heads.extend(link_heads)
    if not heads and frame.predicate_lemma and frame.predicate_lemma != merged.predicate_lemma:
        heads = [frame.predicate_lemma]
    if heads:
        # prefer a head the synonym table can map to a predicate
        chosen = next((h for h in heads if h in lexicon.synonyms), heads[0])
        merged.raw_tokens = _rewrite_predicate_token(merged.raw_tokens, merged.predicate_lemma, chosen)
        merged.predicate_lemma = chosen
        merged.possessive_links = {
            idx: [chosen] for idx, _ in merged.possessive_links.items()
        } or merged.possessive_links

    new_names = [m for m in frame.mentions if m.kind == NAME and m.candidates]
    if new_names:
        slots = [i for i, m in enumerate(merged.mentions) if m.kind == NAME]
        for j, new_m in enumerate(new_names):
            if j < len(slots):
                old = merged.mentions[slots[j]]
                merged.mentions[slots[j]] = replace(
                    new_m, token_span=old.token_span
                )
    return merged


def _governing_lemma(frame: QuestionFrame, mention: Mention, lexicon: Lexicon) -> str | None:
    start, end = mention.token_span
    for tok in frame.raw_tokens[end:]:
        if tok.pos in (VERB, NOUN) and tok.lemma in lexicon.deixis:
            return tok.lemma
    for tok in reversed(frame.raw_tokens[:start]):
        if tok.pos in (VERB, NOUN) and tok.lemma in lexicon.deixis:
            return tok.lemma
    return None


def resolve_deixis(
    frame: QuestionFrame, state: DialogueState, lexicon: Lexicon, kb: KnowledgeBase
) -> QuestionFrame:
    """Replace speaker references with the profile attribute picked by the governing word."""
    resolved = frame.copy()
    for i, mention in enumerate(resolved.mentions):
        if mention.kind != SELF:
            continue
        if state.speaker is None:
            raise ResolutionError(UNRESOLVED_SPEAKER, "no speaker profile attached to this session")
        lemma = _governing_lemma(resolved, mention, lexicon)
        if lemma is None:
            raise ResolutionError(
                UNRESOLVED_SPEAKER, f"cannot tell which speaker attribute {mention.surface!r} refers to"
            )
        attribute = lexicon.deixis[lemma]
        value = state.speaker.attributes.get(attribute)
        if value is None:
            raise ResolutionError(UNRESOLVED_SPEAKER, f"speaker profile lacks attribute {attribute!r}")
        if not value.is_entity or value.text not in kb.entities:
            raise ResolutionError(UNRESOLVED_SPEAKER, f"speaker attribute {attribute!r} is not a KB entity")
        resolved.mentions[i] = _as_name_mention(mention, value.text, kb)
        resolved.has_deixis = False
    return resolved


def _update_salience(state: DialogueState, frame: QuestionFrame, answer: Answer, turn_index: int) -> None:
    fresh: list[SalienceEntry] = []
    seen: set[str] = set()
    for m in frame.name_mentions():
        if m.candidates and m.top_candidate() not in seen:
            seen.add(m.top_candidate())
            fresh.append(
                SalienceEntry(
                    entity=m.top_candidate(),
                    gender=m.gender,
                    number=m.number,
                    last_turn=turn_index,
                    role=ROLE_TOPIC,
                )
            )
    for v in answer.values:
        if v.is_entity and v.text not in seen:
            seen.add(v.text)
            # agreement features come from entity metadata
            fresh.append(
                SalienceEntry(
                    entity=v.text,
                    gender="unknown",
                    number="sg",
                    last_turn=turn_index,
                    role=ROLE_ANSWER,
                )
            )
    survivors = [e for e in state.salience if e.entity not in seen]
    merged = fresh + survivors
    merged.sort(key=lambda e: (-e.last_turn, 0 if e.role == ROLE_TOPIC else 1))
    state.salience = merged


def ask(
    state: DialogueState,
    utterance: str,
    kb: KnowledgeBase,
    lexicon: Lexicon,
    grammar: Grammar,
    model: AdaBoostModel,
    templates: gen.Templates | None = None,
    search_config: SearchConfig | None = None,
    corpus_log: str | None = None,
) -> tuple[Answer, DialogueState]:
    """Run one dialogue turn: resolve, query both backends, arbitrate, render."""
    if not utterance.strip():
        raise ValueError("utterance must be non-empty")
    templates = templates or {}
    lang = lexicon.language
    frame = analyze(utterance, kb, lexicon)
    resolved = frame
    try:
        if resolved.has_deixis:
            resolved = resolve_deixis(resolved, state, lexicon, kb)
        resolved = resolve_coreference(resolved, state, kb)
        if resolved.is_elliptical:
            resolved = resolve_ellipsis(resolved, state, lexicon)
    except ResolutionError as exc:
        answer = clarification_answer(gen.clarification_text(exc.signal, lang, templates))
        turn = Turn(index=state.next_turn, user_text=utterance, resolved_frame=resolved, answer=answer)
        state.turns.append(turn)
        _update_salience(state, resolved, answer, turn.index)
        _log_turn(corpus_log, state, turn)
        return answer, state

    try:
        r_reason = answer_reasoning(resolved, grammar, kb)
    except Exception as exc:  # backend crashes become failed results
        r_reason = QAResult.failure(SOURCE_REASONING, debug=f"backend error: {exc}")
    try:
        r_search = answer_search(resolved, kb, lexicon, search_config)
    except Exception as exc:
        r_search = QAResult.failure(SOURCE_SEARCH, debug=f"backend error: {exc}")
    r_reason.features = extract_features(r_reason, resolved, kb)
    r_search.features = extract_features(r_search, resolved, kb)
    answer = arbitrate(r_reason, r_search, model)

    if answer.source != "NONE" and answer.values:
        if gen.frame_answer_kind(resolved) == gen.KIND_COUNT and all(v.is_entity for v in answer.values):
            answer.short_text = str(len(answer.values))
            answer.value_labels = [answer.short_text]
        else:
            answer.short_text = gen.short_answer(answer.values, kb, lang)
            answer.value_labels = [gen.render_value(v, kb, lang) for v in answer.values]
        answer.long_text = gen.long_answer(resolved, answer.values, kb, templates, lang)
    elif answer.clarification is None:
        answer.clarification = gen.clarification_text("NO_ANSWER", lang, templates)
        answer.short_text = answer.clarification

    turn = Turn(index=state.next_turn, user_text=utterance, resolved_frame=resolved, answer=answer)
    state.turns.append(turn)
    _update_salience(state, resolved, answer, turn.index)
    state.last_frame = resolved
    _log_turn(corpus_log, state, turn)
    return answer, state


def record_reward(state: DialogueState, turn_index: int, reward: str, corpus_log: str | None = None) -> DialogueState:
    """Store the user's verdict on a turn; each turn takes exactly one reward."""
    if reward not in (REWARD_CORRECT, REWARD_INCORRECT):
        raise RewardError("BAD_REWARD", f"reward must be CORRECT or INCORRECT, got {reward!r}")
    if turn_index < 0 or turn_index >= len(state.turns):
        raise RewardError("NOT_FOUND", f"turn {turn_index} does not exist")
    turn = state.turns[turn_index]
    if turn.reward is not None:
        raise RewardError("REWARD_ALREADY_SET", f"turn {turn_index} already has a reward")
    turn.reward = reward
    if corpus_log:
        record = {
            "kind": "reward",
            "session_id": state.session_id,
            "turn": turn_index,
            "reward": reward,
        }
        with open(corpus_log, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    return state


def _log_turn(corpus_log: str | None, state: DialogueState, turn: Turn) -> None:
    if not corpus_log:
        return
    record = {
        "kind": "turn",
        "session_id": state.session_id,
        "turn": turn.index,
        "user_text": turn.user_text,
        "resolved_query_debug_form": turn.answer.query_debug,
        "answer_values": [str(v) for v in turn.answer.values],
        "confidence": turn.answer.confidence,
        "source": turn.answer.source,
        "reward": turn.reward,
    }
    with open(corpus_log, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def load_speakers(path: str, kb: KnowledgeBase) -> dict[str, SpeakerProfile]:
    """Read the flat speaker-profile store (one JSON record per line)."""
    speakers: dict[str, SpeakerProfile] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            rec = json.loads(line)
            attributes: dict[str, Value] = {}
            for key, val in rec.get("attributes", {}).items():
                sval = str(val)
                if sval in kb.entities:
                    attributes[key] = Value.entity(sval)
                else:
                    attributes[key] = Value.literal(sval)
            speakers[rec["speaker_id"]] = SpeakerProfile(
                speaker_id=rec["speaker_id"],
                name=rec.get("name", rec["speaker_id"]),
                attributes=attributes,
                language=rec.get("language", "en"),
            )
    return speakers
