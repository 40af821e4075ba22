"""Lexicon-driven question analysis: tokens, tags, entity mentions, frames.

A QuestionFrame is the structured reading of one utterance that the dialogue
context manager rewrites (coreference, ellipsis, deixis) before the QA
backends see it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .kb import KnowledgeBase, normalize_surface

# POS tags
WH = "WH"
VERB = "VERB"
NOUN = "NOUN"
PROPN = "PROPN"
PRON = "PRON"
POSS = "POSS"
DET = "DET"
ADP = "ADP"
CONJ = "CONJ"
PUNCT = "PUNCT"
NUM = "NUM"
OTHER = "OTHER"

# wh types
WH_TYPES = ("WHO", "WHAT", "WHICH", "WHERE", "WHEN", "HOWMANY", "NONE")

# mention kinds
NAME = "NAME"
PRONOUN = "PRONOUN"
POSSESSIVE = "POSSESSIVE"
TYPE_WORD = "TYPE_WORD"
SELF = "SELF"


class LexiconError(Exception):
    """Malformed lexicon file or synonym targets missing from the KB."""


@dataclass(frozen=True)
class PronounEntry:
    person: int  # 1 | 2 | 3
    gender: str  # m | f | n | unknown
    number: str  # sg | pl
    possessive: bool


@dataclass
class Lexicon:
    """Language pack: lemma/wh/pronoun tables, predicate synonyms, type words."""

    language: str
    lemmas: dict[str, tuple[str, str]] = field(default_factory=dict)  # surface -> (lemma, pos)
    wh: dict[str, str] = field(default_factory=dict)  # surface (1- or 2-gram) -> wh type
    pronouns: dict[str, PronounEntry] = field(default_factory=dict)
    synonyms: dict[str, set[str]] = field(default_factory=dict)  # lemma -> predicate ids
    type_words: dict[str, str] = field(default_factory=dict)  # lemma -> type entity id
    stopwords: set[str] = field(default_factory=set)  # lemmas
    deixis: dict[str, str] = field(default_factory=dict)  # governing lemma -> speaker attribute


@dataclass
class Token:
    surface: str
    char_span: tuple[int, int]
    norm: str = ""
    lemma: str = ""
    pos: str = OTHER


@dataclass
class Mention:
    """A span of tokens referring to an entity, pronoun, type word, or the speaker."""

    token_span: tuple[int, int]  # [start, end) indexes into the token list
    surface: str
    kind: str
    candidates: list[tuple[str, float]] = field(default_factory=list)  # (entity id, pagerank), ranked
    person: int = 3
    gender: str = "unknown"
    number: str = "sg"

    def top_candidate(self) -> str:
        return self.candidates[0][0]


@dataclass
class QuestionFrame:
    """Structured reading of one utterance."""

    wh_type: str
    predicate_lemma: str | None
    mentions: list[Mention]
    possessive_links: dict[int, list[str]]  # mention index -> coordinated head-noun lemmas
    is_elliptical: bool
    has_deixis: bool
    raw_tokens: list[Token]
    language: str = "en"

    def name_mentions(self) -> list[Mention]:
        return [m for m in self.mentions if m.kind == NAME]

    _FUNCTION_POS = frozenset((PUNCT, DET, ADP, CONJ, PRON, POSS, WH, NUM))

    def content_lemmas(self) -> list[str]:
        """Content-word lemmas of the utterance (PROPN/NOUN/VERB/unknown)."""
        return [t.lemma for t in self.raw_tokens if t.pos not in self._FUNCTION_POS and t.lemma]

    def copy(self) -> "QuestionFrame":
        return replace(
            self,
            mentions=[replace(m, candidates=list(m.candidates)) for m in self.mentions],
            possessive_links={k: list(v) for k, v in self.possessive_links.items()},
            raw_tokens=[replace(t) for t in self.raw_tokens],
        )


# -- tokenizer ---------------------------------------------------------------

_APOSTROPHES = "'’"
_WORD_RE = re.compile(rf"[^\W_]+(?:[-][^\W_]+)*(?:['’][^\W_]*)*|['’]|[^\s]", re.UNICODE)


def _split_apostrophe(chunk: str, start: int) -> list[tuple[str, int, int]]:
    """Split one non-space chunk at an internal apostrophe.

    The apostrophe sticks to the shorter side: "mother's" -> mother + 's,
    "brothers'" -> brothers + ', "l'artiste" -> l' + artiste.
    """
    for i, ch in enumerate(chunk):
        if ch in _APOSTROPHES and i > 0:
            after = chunk[i + 1 :]
            if len(after) <= 2:  # possessive clitic: 's or bare '
                return [
                    (chunk[:i], start, start + i),
                    (chunk[i:], start + i, start + len(chunk)),
                ]
            # elision: the apostrophe closes the short prefix (l', d')
            return [
                (chunk[: i + 1], start, start + i + 1),
                *_split_apostrophe(after, start + i + 1),
            ]
    return [(chunk, start, start + len(chunk))]


def tokenize(text: str) -> list[Token]:
    """Split on whitespace and punctuation; punctuation and clitics become tokens."""
    tokens: list[Token] = []
    for m in _WORD_RE.finditer(text):
        chunk = m.group(0)
        if len(chunk) > 1 and any(ch in _APOSTROPHES for ch in chunk[1:]):
            pieces = _split_apostrophe(chunk, m.start())
        else:
            pieces = [(chunk, m.start(), m.end())]
        for surface, s, e in pieces:
            tokens.append(Token(surface=surface, char_span=(s, e)))
    return tokens


_NUM_RE = re.compile(r"^\d+(?:[.,]\d+)*$")


def tag(tokens: list[Token], lexicon: Lexicon) -> list[Token]:
    """Fill norm, lemma and pos from the lexicon tables (in place, returned)."""
    for tok in tokens:
        tok.norm = normalize_surface(tok.surface)
        if tok.norm in lexicon.pronouns:
            entry = lexicon.pronouns[tok.norm]
            tok.pos, tok.lemma = (POSS if entry.possessive else PRON), tok.norm
        elif tok.norm in lexicon.wh:
            tok.pos, tok.lemma = WH, tok.norm
        elif tok.norm in lexicon.lemmas:
            tok.lemma, tok.pos = lexicon.lemmas[tok.norm]
        elif not any(ch.isalnum() for ch in tok.surface):
            tok.pos, tok.lemma = PUNCT, tok.surface
        elif _NUM_RE.match(tok.surface):
            tok.pos, tok.lemma = NUM, tok.norm
        elif tok.surface[:1].isupper():
            tok.pos, tok.lemma = PROPN, tok.norm
        else:
            tok.pos, tok.lemma = OTHER, tok.norm
    return tokens


def detect_mentions(tokens: list[Token], kb: KnowledgeBase, lexicon: Lexicon) -> list[Mention]:
    """Entity mentions by greedy longest label match, plus pronoun/type mentions."""
    mentions: list[Mention] = []
    linkable = kb.subject_like_ids()
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.pos in (PROPN, NOUN):
            matched = False
            max_n = min(5, len(tokens) - i)
            for n in range(max_n, 0, -1):
                span = tokens[i : i + n]
                if any(t.pos not in (PROPN, NOUN) for t in span):
                    continue
                if n == 1 and tok.pos == NOUN and (tok.lemma in lexicon.type_words or tok.lemma in lexicon.synonyms):
                    # single common nouns with a type/predicate reading stay available
                    # for TYPE_WORD mentions and PRED slots
                    continue
                surface = " ".join(t.surface for t in span)
                ids = kb.lookup_label(surface, lexicon.language) & linkable
                if ids:
                    ranked = sorted(((e, kb.entities[e].pagerank) for e in ids), key=lambda c: (-c[1], c[0]))
                    ent = kb.entities[ranked[0][0]]
                    mentions.append(
                        Mention(
                            token_span=(i, i + n),
                            surface=surface,
                            kind=NAME,
                            candidates=ranked,
                            gender=ent.gender,
                            number=ent.number,
                        )
                    )
                    i += n
                    matched = True
                    break
            if matched:
                continue
        entry = lexicon.pronouns.get(tok.norm)
        if entry is not None:
            kind = SELF if entry.person in (1, 2) else (POSSESSIVE if entry.possessive else PRONOUN)
            mentions.append(
                Mention(
                    token_span=(i, i + 1),
                    surface=tok.surface,
                    kind=kind,
                    person=entry.person,
                    gender=entry.gender,
                    number=entry.number,
                )
            )
        elif tok.pos == NOUN and tok.lemma in lexicon.type_words:
            type_id = lexicon.type_words[tok.lemma]
            pagerank = kb.entities[type_id].pagerank if type_id in kb.entities else 0.0
            mentions.append(
                Mention(
                    token_span=(i, i + 1),
                    surface=tok.surface,
                    kind=TYPE_WORD,
                    candidates=[(type_id, pagerank)],
                )
            )
        i += 1
    return mentions


def _wh_type(tokens: list[Token], lexicon: Lexicon) -> str:
    for i, tok in enumerate(tokens):
        if i + 1 < len(tokens):
            bigram = f"{tok.norm} {tokens[i + 1].norm}"
            if bigram in lexicon.wh:
                return lexicon.wh[bigram]
        if tok.norm in lexicon.wh:
            return lexicon.wh[tok.norm]
    return "NONE"


def _possessive_heads(tokens: list[Token], start: int) -> list[str]:
    """Head nouns governed by a possessive at `start`, following coordination.

    Recognizes "his father", "his brothers ' and sisters '".
    """
    heads: list[str] = []
    i = start + 1
    if i < len(tokens) and tokens[i].pos == NOUN:
        heads.append(tokens[i].lemma)
        i += 1
        while i < len(tokens):
            j = i
            if j < len(tokens) and tokens[j].pos == POSS and tokens[j].surface.startswith(tuple(_APOSTROPHES)):
                j += 1
            if j < len(tokens) and tokens[j].pos == CONJ:
                j += 1
                if j < len(tokens) and tokens[j].pos == NOUN:
                    heads.append(tokens[j].lemma)
                    i = j + 1
                    continue
            break
    return heads


def parse_question(tokens: list[Token], mentions: list[Mention], lexicon: Lexicon) -> QuestionFrame:
    """Assemble the frame: wh type, predicate lemma, possessive links, flags."""
    wh = _wh_type(tokens, lexicon)
    in_mention = set()
    for m in mentions:
        in_mention.update(range(*m.token_span))

    predicate_lemma: str | None = None
    fallback: str | None = None
    for i, tok in enumerate(tokens):
        if i in in_mention or tok.pos not in (NOUN, VERB) or tok.lemma in lexicon.stopwords:
            continue
        if tok.lemma in lexicon.synonyms:
            predicate_lemma = tok.lemma
            break
        if fallback is None:
            fallback = tok.lemma
    if predicate_lemma is None:
        predicate_lemma = fallback

    possessive_links: dict[int, list[str]] = {}
    for idx, m in enumerate(mentions):
        if m.kind == POSSESSIVE or (m.kind == SELF and tokens[m.token_span[0]].pos == POSS):
            heads = _possessive_heads(tokens, m.token_span[0])
            if heads:
                possessive_links[idx] = heads

    first = next((t for t in tokens if t.pos != PUNCT), None)
    is_elliptical = wh == "NONE" or (predicate_lemma is None and first is not None and first.pos == CONJ)
    has_deixis = any(m.person in (1, 2) for m in mentions if m.kind == SELF)
    return QuestionFrame(
        wh_type=wh,
        predicate_lemma=predicate_lemma,
        mentions=mentions,
        possessive_links=possessive_links,
        is_elliptical=is_elliptical,
        has_deixis=has_deixis,
        raw_tokens=tokens,
        language=lexicon.language,
    )


def analyze(text: str, kb: KnowledgeBase, lexicon: Lexicon) -> QuestionFrame:
    """tokenize + tag + detect_mentions + parse_question in one step."""
    tokens = tag(tokenize(text), lexicon)
    mentions = detect_mentions(tokens, kb, lexicon)
    return parse_question(tokens, mentions, lexicon)


# -- lexicon loading ---------------------------------------------------------

_SECTIONS = ("LEMMA", "WH", "PRON", "SYN", "TYPE", "STOP", "DEIXIS")
_REQUIRED = ("LEMMA", "WH", "PRON", "SYN", "TYPE", "STOP")


def load_lexicon(path: str, language: str, kb: KnowledgeBase | None = None) -> Lexicon:
    """Read a language pack; validates SYN targets against the KB when given."""
    lex = Lexicon(language=language)
    section = None
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in _SECTIONS:
                section = line
                seen.add(line)
                continue
            parts = line.split()
            try:
                if section == "LEMMA":
                    surface, lemma, pos = parts
                    lex.lemmas[normalize_surface(surface)] = (lemma, pos)
                elif section == "WH":
                    *surface_words, wh = parts
                    lex.wh[normalize_surface(" ".join(surface_words))] = wh
                elif section == "PRON":
                    surface, person, gender, number, flag = parts
                    lex.pronouns[normalize_surface(surface)] = PronounEntry(
                        person=int(person), gender=gender, number=number, possessive=flag == "poss"
                    )
                elif section == "SYN":
                    lemma, *targets = parts
                    lex.synonyms.setdefault(lemma, set()).update(targets)
                elif section == "TYPE":
                    lemma, type_id = parts
                    lex.type_words[lemma] = type_id
                elif section == "STOP":
                    lex.stopwords.update(parts)
                elif section == "DEIXIS":
                    lemma, attribute = parts
                    lex.deixis[lemma] = attribute
                else:
                    raise LexiconError(f"{path}:{lineno}: line outside any section")
            except (ValueError, TypeError) as exc:
                raise LexiconError(f"{path}:{lineno}: malformed {section} line: {line!r}") from exc
    missing = [s for s in _REQUIRED if s not in seen]
    if missing:
        raise LexiconError(f"{path}: missing required sections: {', '.join(missing)}")
    if kb is not None:
        bad = {t for targets in lex.synonyms.values() for t in targets if t not in kb.entities}
        if bad:
            raise LexiconError(f"{path}: SYN targets not present in KB: {', '.join(sorted(bad))}")
    return lex
