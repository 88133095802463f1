"""Question information extraction: instruction text -> structured query.

The grammar is table driven (``data/qie_lexicon.tsv``). A question is one of

* direct:       ``<lead> <np>``
* comparative:  ``<lead> <comparator> <np>`` or ``<lead> <np> <comparator-suffix>``
* spatial:      ``<lead> <np> [not] <relation> <np>``
* cross-object: ``<lead> <np> <same-as> <np>`` where the second noun phrase may
  itself be ``<np> <relation> <np>`` (indirection through an anchor)

Empty record fields are wildcards. Anything outside the grammar raises
``UnparseableQuestion``; the parser never returns a partial reading.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterable

from .errors import UnparseableQuestion
from .ontology import default_ontology

RELATIONS = ("left_of", "right_of", "above", "below")
FLIP = {"left_of": "right_of", "right_of": "left_of", "above": "below", "below": "above"}
SAME_AS_ATTRS = ("color", "toward", "shape")


def flip(relation: str) -> str:
    return FLIP[relation]


class Role(str, Enum):
    REFERENCE = "Reference"
    TARGET = "Target"
    ANCHOR = "Anchor"


class ReasoningType(str, Enum):
    DIRECT = "Direct"
    SPATIAL = "Spatial"
    COMPARATIVE = "Comparative"


class Comparator(str, Enum):
    LARGEST = "largest"
    SMALLEST = "smallest"
    LEFTMOST = "leftmost"
    RIGHTMOST = "rightmost"
    TOPMOST = "topmost"
    BOTTOMMOST = "bottommost"


@dataclass(frozen=True)
class QueryRecord:
    shape: str | None = None
    color: str | None = None
    orientation: str | None = None
    role: Role = Role.TARGET
    same_as: str | None = None

    def populated(self) -> int:
        return sum(v is not None for v in (self.shape, self.color, self.orientation))

    def is_empty(self) -> bool:
        return self.populated() == 0 and self.same_as is None

    def to_wire(self) -> dict:
        rec = {
            "ObjectData": {
                "shape": self.shape or "",
                "color": self.color or "",
                "orientation": self.orientation or "",
            },
            "role": self.role.value,
        }
        if self.same_as:
            rec["same_as"] = self.same_as
        return rec


@dataclass(frozen=True)
class ParsedQuery:
    records: tuple[QueryRecord, ...]
    relation: str | None = None
    reasoning_type: ReasoningType = ReasoningType.DIRECT
    comparator: Comparator | None = None
    raw_text: str = ""
    directly: bool = False

    def __post_init__(self):
        if (self.reasoning_type is ReasoningType.SPATIAL) != (self.relation is not None):
            raise ValueError("relation present iff reasoning type is Spatial")
        if (self.reasoning_type is ReasoningType.COMPARATIVE) != (self.comparator is not None):
            raise ValueError("comparator present iff reasoning type is Comparative")
        if self.reasoning_type is ReasoningType.SPATIAL and len(self.indices(Role.REFERENCE)) != 1:
            raise ValueError("spatial queries carry exactly one reference record")

    def indices(self, role: Role) -> list[int]:
        return [i for i, r in enumerate(self.records) if r.role is role]

    def record(self, role: Role) -> QueryRecord | None:
        idx = self.indices(role)
        return self.records[idx[0]] if idx else None

    @property
    def reference(self) -> QueryRecord | None:
        return self.record(Role.REFERENCE)

    @property
    def target(self) -> QueryRecord | None:
        return self.record(Role.TARGET)

    @property
    def anchor(self) -> QueryRecord | None:
        return self.record(Role.ANCHOR)

    def semantic_key(self) -> tuple:
        """Everything except the raw text; two phrasings of one question share it."""
        return (self.records, self.relation, self.reasoning_type, self.comparator, self.directly)

    def to_wire(self) -> dict:
        return {
            "records": [r.to_wire() for r in self.records],
            "relation": self.relation,
            "reasoning_type": self.reasoning_type.value,
            "comparator": self.comparator.value if self.comparator else None,
            "directly": self.directly,
            "raw_text": self.raw_text,
        }


# ---------------------------------------------------------------- tokenizing

_TOKEN_RE = re.compile(
    r"'([^']+)'|\"([^\"]+)\"|‘([^’]+)’|“([^”]+)”"
    r"|([A-Za-z0-9]+(?:-[A-Za-z0-9]+)*)"
)


@dataclass(frozen=True)
class Token:
    text: str
    quoted: bool
    start: int
    end: int

    @property
    def low(self) -> str:
        return self.text.lower()


def tokenize(text: str) -> list[Token]:
    toks = []
    for m in _TOKEN_RE.finditer(text):
        quoted = m.group(5) is None
        body = next(g for g in m.groups() if g is not None)
        toks.append(Token(body.strip() if quoted else body, quoted, m.start(), m.end()))
    return toks


# ---------------------------------------------------------------- lexicon

@dataclass
class Lexicon:
    leads: set[tuple[str, ...]] = field(default_factory=set)
    fillers: set[str] = field(default_factory=set)
    generics: set[tuple[str, ...]] = field(default_factory=set)
    categories: dict[tuple[str, ...], str] = field(default_factory=dict)
    attributes: dict[tuple[str, ...], tuple[str, str]] = field(default_factory=dict)
    relations: dict[tuple[str, ...], tuple[str, bool]] = field(default_factory=dict)
    negations: set[tuple[str, ...]] = field(default_factory=set)
    comparators: dict[tuple[str, ...], Comparator] = field(default_factory=dict)
    comparator_suffixes: dict[tuple[str, ...], Comparator] = field(default_factory=dict)
    same_as: dict[tuple[str, ...], str] = field(default_factory=dict)
    synonyms: dict[str, str] = field(default_factory=dict)

    @property
    def max_len(self) -> int:
        tables: Iterable = (
            self.leads, self.generics, self.categories, self.attributes, self.relations,
            self.negations, self.comparators, self.comparator_suffixes, self.same_as,
        )
        return max(len(k) for t in tables for k in t)


def _phrase(text: str) -> tuple[str, ...]:
    return tuple(t.low for t in tokenize(text))


def load_lexicon(text: str | None = None) -> Lexicon:
    if text is None:
        text = resources.files("vrcsolve").joinpath("data", "qie_lexicon.tsv").read_text("utf-8")
    onto = default_ontology()
    lex = Lexicon()
    for kind, values in (("color", onto.colors), ("toward", onto.towards)):
        for v in values:
            lex.attributes[(v,)] = (kind, v)
    for s in onto.shapes:
        if len(s) > 1:  # letters/digits are literals, handled separately
            lex.attributes[_phrase(s)] = ("shape", s)
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        kind, phrase = cols[0], _phrase(cols[1])
        value = cols[2] if len(cols) > 2 else None
        if kind == "lead":
            lex.leads.add(phrase)
        elif kind == "filler":
            lex.fillers.update(phrase)
        elif kind == "generic":
            lex.generics.add(phrase)
        elif kind == "category":
            lex.categories[phrase] = value
        elif kind == "synonym":
            tag = onto.parse_attribute_token(value)
            lex.attributes[phrase] = (tag.kind.value, value)
            lex.synonyms[cols[1].lower()] = value
        elif kind == "relation":
            if value not in RELATIONS:
                raise ValueError(f"unknown relation {value!r} in lexicon")
            lex.relations[phrase] = (value, len(cols) > 3 and cols[3] == "aligned")
        elif kind == "negation":
            lex.negations.add(phrase)
        elif kind == "comparator":
            lex.comparators[phrase] = Comparator(value)
        elif kind == "comparator_suffix":
            lex.comparator_suffixes[phrase] = Comparator(value)
        elif kind == "same_as":
            if value not in SAME_AS_ATTRS:
                raise ValueError(f"unknown same-as attribute {value!r}")
            lex.same_as[phrase] = value
        else:
            raise ValueError(f"unknown lexicon kind {kind!r}")
    return lex


@lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    return load_lexicon()


def match_at(toks: list[Token], i: int, table, max_len: int) -> tuple[int, object] | None:
    """Longest phrase from ``table`` starting at token ``i``; returns (length, key)."""
    for n in range(min(max_len, len(toks) - i), 0, -1):
        window = toks[i:i + n]
        if any(t.quoted for t in window):
            continue
        key = tuple(t.low for t in window)
        if key in table:
            return n, key
    return None


def find_phrase(toks: list[Token], table, max_len: int, start: int = 0) -> tuple[int, int, object] | None:
    """Leftmost, then longest, occurrence of a phrase: (start, end, key)."""
    for i in range(start, len(toks)):
        hit = match_at(toks, i, table, max_len)
        if hit:
            return i, i + hit[0], hit[1]
    return None


# ---------------------------------------------------------------- relations

_FALLBACK = {
    "left_of": re.compile(r"\b(?:left|leftwards?|left-hand)\b"),
    "right_of": re.compile(r"\b(?:right|rightwards?|right-hand)\b"),
    "above": re.compile(r"\b(?:upwards?|up|top|higher|north)\b"),
    "below": re.compile(r"\b(?:downwards?|down|bottom|lower|south)\b"),
}
_FALLBACK_CONNECTIVES = {
    "to", "the", "of", "on", "at", "from", "than", "side", "hand", "is", "that",
    "which", "located", "lying", "positioned", "sitting", "placed", "just", "a",
}


def _find_relation(toks: list[Token], lex: Lexicon):
    """Relation phrase with optional preceding negation.

    Returns (neg_start, end, relation, aligned) or None.
    """
    hit = find_phrase(toks, lex.relations, lex.max_len)
    if hit is None:
        return None
    start, end, key = hit
    relation, aligned = lex.relations[key]
    neg_start = start
    for n in range(min(lex.max_len, start), 0, -1):
        key_neg = tuple(t.low for t in toks[start - n:start])
        if key_neg in lex.negations and not any(t.quoted for t in toks[start - n:start]):
            relation = flip(relation)
            neg_start = start - n
            break
    return neg_start, end, relation, aligned


def locate_relation(text: str, lexicon: Lexicon | None = None) -> tuple[int, int, str, bool] | None:
    """Character span of the first table relation phrase (negation included),
    with its polarity-normalised relation and aligned flag."""
    lex = lexicon or default_lexicon()
    toks = tokenize(text)
    found = _find_relation(toks, lex)
    if found is None:
        return None
    start, end, relation, aligned = found
    return toks[start].start, toks[end - 1].end, relation, aligned


def locate_phrase(text: str, table, lexicon: Lexicon | None = None) -> tuple[int, int, object] | None:
    """Character span and key of the leftmost-longest phrase from a lexicon table."""
    lex = lexicon or default_lexicon()
    toks = tokenize(text)
    hit = find_phrase(toks, table, lex.max_len)
    if hit is None:
        return None
    start, end, key = hit
    return toks[start].start, toks[end - 1].end, key


def _fallback_relation(toks: list[Token]) -> tuple[int, str] | None:
    for i, t in enumerate(toks):
        if t.quoted:
            continue
        for rel, pat in _FALLBACK.items():
            if pat.fullmatch(t.low):
                return i, rel
    return None


def _strip_comparator_suffixes(toks: list[Token], lex: Lexicon) -> list[Token]:
    out, i = [], 0
    while i < len(toks):
        hit = match_at(toks, i, lex.comparator_suffixes, lex.max_len)
        if hit:
            i += hit[0]
            continue
        out.append(toks[i])
        i += 1
    return out


def extract_spatial_relation(text: str, lexicon: Lexicon | None = None) -> str | None:
    """First spatial predicate in ``text``, polarity-normalised, or None."""
    lex = lexicon or default_lexicon()
    toks = tokenize(text)
    found = _find_relation(toks, lex)
    if found:
        return found[2]
    toks = _strip_comparator_suffixes(toks, lex)
    if find_phrase(toks, lex.comparators, lex.max_len):
        return None
    fb = _fallback_relation(toks)
    if fb is None:
        return None
    i, rel = fb
    negated = any(t.low == "not" for t in toks[max(0, i - 3):i])
    return flip(rel) if negated else rel


# ---------------------------------------------------------------- noun phrases

def parse_np(toks: list[Token], lex: Lexicon, role: Role, text: str = "") -> QueryRecord | None:
    """Parse a noun phrase into a record; returns None for a bare generic head."""
    onto = default_ontology()
    fields: dict[str, str] = {}
    saw_generic = False
    category: str | None = None

    def put(name: str, value: str) -> None:
        if name in fields and fields[name] != value:
            raise UnparseableQuestion(f"conflicting {name} in {text!r}")
        fields[name] = value

    i = 0
    while i < len(toks):
        tok = toks[i]
        if tok.quoted or (category and tok.text.isalnum() and len(tok.text) == 1):
            literal = tok.text
            if not onto.is_shape(literal):
                raise UnparseableQuestion(f"unknown literal {literal!r} in {text!r}")
            if category and literal not in onto.expand_category(category):
                raise UnparseableQuestion(f"{literal!r} is not a {category} in {text!r}")
            put("shape", literal)
            category = None
            i += 1
            continue
        if tok.text.isdigit() and len(tok.text) == 1:
            put("shape", tok.text)
            i += 1
            continue
        if tok.low in lex.fillers:
            i += 1
            continue
        hit = match_at(toks, i, lex.attributes, lex.max_len)
        if hit:
            kind, value = lex.attributes[hit[1]]
            put({"toward": "orientation"}.get(kind, kind), value)
            i += hit[0]
            continue
        hit = match_at(toks, i, lex.categories, lex.max_len)
        if hit:
            category = lex.categories[hit[1]]
            put("shape", category)
            i += hit[0]
            # a following literal refines the category
            if i < len(toks) and (toks[i].quoted or (toks[i].text.isalnum() and len(toks[i].text) == 1)):
                del fields["shape"]
            else:
                category = None
            continue
        hit = match_at(toks, i, lex.generics, lex.max_len)
        if hit:
            saw_generic = True
            i += hit[0]
            continue
        raise UnparseableQuestion(f"unrecognised word {tok.text!r} in {text!r}")
    if not fields:
        if saw_generic:
            return None
        raise UnparseableQuestion(f"empty noun phrase in {text!r}")
    return QueryRecord(
        shape=fields.get("shape"),
        color=fields.get("color"),
        orientation=fields.get("orientation"),
        role=role,
    )


def _strip_lead(toks: list[Token], lex: Lexicon) -> list[Token]:
    hit = match_at(toks, 0, lex.leads, lex.max_len)
    return toks[hit[0]:] if hit else toks


def _split_comparator(toks: list[Token], lex: Lexicon) -> tuple[list[Token], Comparator | None]:
    comp = None
    out, i = [], 0
    while i < len(toks):
        hit = match_at(toks, i, lex.comparators, lex.max_len) or match_at(
            toks, i, lex.comparator_suffixes, lex.max_len
        )
        if hit:
            value = lex.comparators.get(hit[1]) or lex.comparator_suffixes[hit[1]]
            if comp is not None and comp is not value:
                raise UnparseableQuestion("two different comparators")
            comp = value
            i += hit[0]
            continue
        out.append(toks[i])
        i += 1
    return out, comp


def _trim_connectives(toks: list[Token], leading: bool) -> list[Token]:
    toks = list(toks)
    while toks and not toks[0 if leading else -1].quoted and toks[0 if leading else -1].low in _FALLBACK_CONNECTIVES:
        toks.pop(0 if leading else -1)
    return toks


def _reference(toks: list[Token], lex: Lexicon, text: str) -> QueryRecord:
    rec = parse_np(toks, lex, Role.REFERENCE, text)
    if rec is None:
        raise UnparseableQuestion(f"reference object is unspecified in {text!r}")
    return rec


def parse_question(text: str, lexicon: Lexicon | None = None) -> ParsedQuery:
    """Parse one instruction into a ParsedQuery (deterministic, all-or-nothing)."""
    lex = lexicon or default_lexicon()
    toks = _strip_lead(tokenize(text), lex)
    if not toks:
        raise UnparseableQuestion(f"no content in {text!r}")

    same = find_phrase(toks, lex.same_as, lex.max_len)
    if same:
        start, end, key = same
        attr = lex.same_as[key]
        target = parse_np(toks[:start], lex, Role.TARGET, text)
        if target is None:
            target = QueryRecord(role=Role.TARGET, same_as=attr)
        else:
            target = QueryRecord(target.shape, target.color, target.orientation, Role.TARGET, attr)
        rest = toks[end:]
        rel = _find_relation(rest, lex)
        if rel:
            neg_start, rel_end, relation, aligned = rel
            anchor = parse_np(rest[:neg_start], lex, Role.ANCHOR, text)
            if anchor is None:
                raise UnparseableQuestion(f"anchor object is unspecified in {text!r}")
            ref = _reference(rest[rel_end:], lex, text)
            return ParsedQuery((ref, anchor, target), relation, ReasoningType.SPATIAL, None, text, aligned)
        ref = _reference(rest, lex, text)
        return ParsedQuery((ref, target), None, ReasoningType.DIRECT, None, text)

    rel = _find_relation(toks, lex)
    if rel:
        neg_start, end, relation, aligned = rel
        return _spatial(toks[:neg_start], toks[end:], relation, aligned, lex, text)

    body, comp = _split_comparator(toks, lex)
    if comp is not None:
        target = parse_np(body, lex, Role.TARGET, text) or QueryRecord(role=Role.TARGET)
        return ParsedQuery((target,), None, ReasoningType.COMPARATIVE, comp, text)

    fb = _fallback_relation(toks)
    if fb:
        i, relation = fb
        left = toks[:i]
        if left and left[-1].low == "not":
            relation = flip(relation)
            left = left[:-1]
        left = _trim_connectives(left, leading=False)
        if left and left[-1].low == "not":
            relation = flip(relation)
            left = _trim_connectives(left[:-1], leading=False)
        right = _trim_connectives(toks[i + 1:], leading=True)
        return _spatial(left, right, relation, False, lex, text)

    target = parse_np(toks, lex, Role.TARGET, text)
    if target is None:
        raise UnparseableQuestion(f"no attribute to match in {text!r}")
    return ParsedQuery((target,), None, ReasoningType.DIRECT, None, text)


def _spatial(left, right, relation, aligned, lex, text) -> ParsedQuery:
    ref = _reference(right, lex, text)
    target = parse_np(left, lex, Role.TARGET, text)
    records = (ref,) if target is None else (ref, target)
    return ParsedQuery(records, relation, ReasoningType.SPATIAL, None, text, aligned)
