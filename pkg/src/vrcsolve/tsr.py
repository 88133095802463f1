"""Question randomization: answer-preserving rewrites of challenge wording.

Each rewrite axis has a one-letter name. S substitutes synonyms; R rewords
relation and comparator phrases (polarity flips included); I routes the
question through an anchor object that shares an attribute with the answer. Every emitted variant
is re-solved by the brute-force scene oracle before it is kept.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .errors import NoValidAnchor, UnparseableQuestion, VrcError
from .harness import Challenge
from .ontology import CompoundLabel
from .perception import merge_colocated, parse_detections, split_labels
from .qie import FLIP, default_lexicon, locate_phrase, locate_relation, parse_question
from .scenegen import (
    LEADS,
    RELATION_PHRASES,
    PlacedObject,
    _attr,
    _descriptions,
    _matches_desc,
    _relation,
    _unique_desc,
    brute_force_solve,
    challenge_objects,
    describe,
    truth_region,
)

COMBINATIONS = ("S", "R", "I", "S+R", "S+I", "S+R+I")


@dataclass(frozen=True)
class TsrAxes:
    S: bool = False
    R: bool = False
    I: bool = False

    def __post_init__(self):
        if not (self.S or self.R or self.I):
            raise ValueError("at least one axis must be set")

    @classmethod
    def parse(cls, spec: str) -> "TsrAxes":
        """Accepts ``"S+R"`` or ``"s,r"`` style strings."""
        parts = {p.strip().upper() for p in re.split(r"[+,]", spec) if p.strip()}
        unknown = parts - {"S", "R", "I"}
        if unknown:
            raise ValueError(f"unknown axes {sorted(unknown)}")
        return cls("S" in parts, "R" in parts, "I" in parts)

    @property
    def name(self) -> str:
        return "+".join(a for a in "SRI" if getattr(self, a))


@dataclass(frozen=True)
class TsrVariant:
    source_id: str
    axes: TsrAxes
    text: str
    seed: int | str

    def to_challenge(self, source: Challenge) -> Challenge:
        meta = dict(source.meta)
        meta.update({"axes": self.axes.name, "source_id": self.source_id, "tsr_seed": self.seed})
        return replace(source, id=f"{self.source_id}~{self.axes.name}", question=self.text, meta=meta)


@dataclass(frozen=True)
class Skip:
    source_id: str
    axes: str
    reason: str


@dataclass
class VariantReport:
    variants: list[TsrVariant] = field(default_factory=list)
    skipped: list[Skip] = field(default_factory=list)


# ---------------------------------------------------------------- data tables

def _data_lines(name: str) -> list[list[str]]:
    text = resources.files("vrcsolve").joinpath("data", name).read_text("utf-8")
    return [ln.split("\t") for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@dataclass(frozen=True)
class SynonymEntry:
    surface: str
    value: str
    replacements: tuple[str, ...]


@lru_cache(maxsize=None)
def default_synonyms() -> tuple[SynonymEntry, ...]:
    return tuple(
        SynonymEntry(cols[0], cols[1], tuple(s.strip() for s in cols[2].split(",")))
        for cols in _data_lines("tsr_synonyms.tsv")
    )


@dataclass(frozen=True)
class Rewording:
    kind: str
    value: str
    phrase: str
    aligned: bool = False


@lru_cache(maxsize=None)
def default_rewordings() -> tuple[Rewording, ...]:
    return tuple(
        Rewording(cols[0], cols[1], cols[2], len(cols) > 3 and cols[3] == "aligned")
        for cols in _data_lines("tsr_rewordings.tsv")
    )


# ---------------------------------------------------------------- S axis

_QUOTED = re.compile(r"'[^']*'|\"[^\"]*\"")


def substitute_synonyms(text: str, seed: int | str, lexicon: Sequence[SynonymEntry] | None = None) -> str:
    """Replace each attribute word that has an entry with a seeded synonym.

    Quoted literals and all other words are left as they are.
    """
    entries = {e.surface.lower(): e for e in (lexicon or default_synonyms())}
    if not entries:
        return text
    surfaces = sorted(entries, key=len, reverse=True)
    pattern = re.compile(r"(?<![\w-])(" + "|".join(re.escape(s) for s in surfaces) + r")(?![\w-])", re.I)
    rng = random.Random(f"{seed}:S")
    protected = [m.span() for m in _QUOTED.finditer(text)]

    def swap(m: re.Match) -> str:
        if any(a <= m.start() < b for a, b in protected):
            return m.group(0)
        return rng.choice(entries[m.group(0).lower()].replacements)

    return pattern.sub(swap, text)


# ---------------------------------------------------------------- R axis

def _options(kind: str, value: str, aligned: bool = False) -> list[str]:
    return [r.phrase for r in default_rewordings() if r.kind == kind and r.value == value and r.aligned == aligned]


def _swap_span(text: str, start: int, end: int, options: list[str], rng: random.Random) -> str | None:
    current = text[start:end].lower()
    choices = [o for o in options if o.lower() != current]
    if not choices:
        return None
    return text[:start] + rng.choice(choices) + text[end:]


def reword_relation(text: str, seed: int | str) -> str:
    """Reword the spatial phrase, or failing that a comparator, a same-as phrase
    or the lead-in. Plain relations may become a negated opposite predicate."""
    rng = random.Random(f"{seed}:R")
    lex = default_lexicon()
    span = locate_relation(text, lex)
    if span is not None:
        start, end, relation, aligned = span
        options = _options("relation", relation, aligned)
        if not aligned:
            options += [f"not {p}" for p in _options("relation", FLIP[relation])]
        return _swap_span(text, start, end, options, rng) or text
    for kind, table in (("comparator", lex.comparators), ("same_as", lex.same_as)):
        hit = locate_phrase(text, table, lex)
        if hit is not None:
            start, end, key = hit
            value = table[key]
            value = value.value if hasattr(value, "value") else value
            out = _swap_span(text, start, end, _options(kind, value), rng)
            if out is not None:
                return out
    hit = locate_phrase(text, lex.leads, lex)
    if hit is not None and hit[0] == 0:
        return _swap_span(text, hit[0], hit[1], _options("lead", "click"), rng) or text
    return text


# ---------------------------------------------------------------- I axis

def scene_objects(challenge: Challenge) -> list[PlacedObject]:
    """Ground-truth objects when stored with the challenge, else merged detections."""
    if "objects" in challenge.meta:
        return challenge_objects(challenge)
    merged = merge_colocated(parse_detections(challenge.detections))
    out = []
    for det in merged:
        shapes, colors, towards = split_labels(det.labels)
        if shapes:
            out.append(PlacedObject(
                CompoundLabel(shapes[0], colors[0] if colors else None, towards[0] if towards else None),
                det.bbox,
            ))
    return out


def _answer(challenge: Challenge, objects: Sequence[PlacedObject]) -> PlacedObject:
    q = parse_question(challenge.question)
    sol = brute_force_solve(objects, q)
    if len(sol) != 1:
        raise NoValidAnchor(f"{challenge.id}: source question has {len(sol)} solutions in the scene")
    return sol[0]


_INDIRECTION = {
    "color": "that shares color with",
    "toward": "that faces the same direction as",
    "shape": "that shares shape with",
}


def add_indirection(challenge: Challenge, seed: int | str) -> str:
    """Rewrite the question to reach the answer through an attribute-sharing anchor.

    The anchor is itself picked out spatially relative to a uniquely described
    reference, and the whole sentence must single out the original answer.
    """
    rng = random.Random(f"{seed}:I")
    objects = scene_objects(challenge)
    answer = _answer(challenge, objects)
    lead = rng.choice(LEADS)
    attrs = list(_INDIRECTION)
    rng.shuffle(attrs)
    anchors = [o for o in objects if o is not answer]
    rng.shuffle(anchors)
    for attr in attrs:
        value = _attr(answer, attr)
        if value is None:
            continue
        for anchor in anchors:
            if _attr(anchor, attr) != value:
                continue
            sharing = [o for o in objects if o is not anchor and _attr(o, attr) == value]
            tdesc = next(
                (d for d in _descriptions(answer, rng, allow_empty=True)
                 if [o for o in sharing if _matches_desc(o, d)] == [answer]),
                None,
            )
            if tdesc is None:
                continue
            head = "item" if tdesc == (None, None, None) else describe(*tdesc)
            pairs = [
                (ref, rel, directly)
                for ref in objects if ref is not anchor
                for rel, directly in RELATION_PHRASES
                if _relation(anchor.bbox, ref.bbox, rel, directly)
            ]
            rng.shuffle(pairs)
            for ref, rel, directly in pairs:
                rdesc = _unique_desc(ref, objects, rng)
                if rdesc is None:
                    continue
                for adesc in _descriptions(anchor, rng, allow_empty=False):
                    picked = [
                        a for a in objects
                        if a is not ref and _matches_desc(a, adesc) and _relation(a.bbox, ref.bbox, rel, directly)
                    ]
                    if picked != [anchor]:
                        continue
                    text = (
                        f"{lead} the {head} {_INDIRECTION[attr]} the {describe(*adesc)} "
                        f"{RELATION_PHRASES[(rel, directly)]} the {describe(*rdesc)}"
                    )
                    if _indirect_ok(text, objects, answer, anchor):
                        return text
    raise NoValidAnchor(f"{challenge.id}: no attribute-sharing anchor keeps the answer unique")


def _indirect_ok(text: str, objects, answer, anchor) -> bool:
    try:
        q = parse_question(text)
    except UnparseableQuestion:
        return False
    anchor_rec = q.anchor
    ref_rec = q.reference
    if anchor_rec is None:
        return False
    # the anchor phrase must itself pick out exactly one object
    anchor_only = replace(q, records=(ref_rec, replace(anchor_rec, role=q.target.role)), raw_text="")
    anchors = brute_force_solve(objects, anchor_only)
    if len(anchors) != 1 or anchors[0] is not anchor:
        return False
    sol = brute_force_solve(objects, q)
    return len(sol) == 1 and sol[0] is answer


# ---------------------------------------------------------------- combinations

def apply_axes(challenge: Challenge, axes: TsrAxes, seed: int | str, _cache: dict | None = None) -> str:
    """Compose the selected axes. Indirection writes a new sentence, so when it
    is selected it runs first and S and R are then applied to its output; the
    surface order of operations is always S before R."""
    base = f"{seed}:{challenge.id}"
    if axes.I:
        if _cache is not None and "I" in _cache:
            text = _cache["I"]
        else:
            try:
                text = add_indirection(challenge, f"{base}:I")
            except NoValidAnchor as exc:
                if _cache is not None:
                    _cache["I"] = exc
                raise
            if _cache is not None:
                _cache["I"] = text
        if isinstance(text, NoValidAnchor):
            raise text
    else:
        text = challenge.question
    if axes.S:
        text = substitute_synonyms(text, f"{base}:S")
    if axes.R:
        text = reword_relation(text, f"{base}:R")
    return text


def verify_variant(challenge: Challenge, text: str, objects: Sequence[PlacedObject] | None = None) -> bool:
    """True when the rewritten question has one solution whose region is the source truth."""
    objects = list(objects) if objects is not None else scene_objects(challenge)
    try:
        sol = brute_force_solve(objects, parse_question(text))
    except UnparseableQuestion:
        return False
    if len(sol) != 1:
        return False
    region = truth_region(sol[0], challenge.image_width, challenge.image_height)
    t = challenge.truth
    return all(
        abs(a - b) <= 1e-6
        for a, b in zip((region.left, region.right, region.top, region.bottom), (t.left, t.right, t.top, t.bottom))
    )


def generate_variants(challenge: Challenge, seed: int | str, combinations: Sequence[str] = COMBINATIONS) -> VariantReport:
    """One verified variant per axis combination; failures land in the skip report."""
    report = VariantReport()
    objects = scene_objects(challenge)
    cache: dict = {}
    for combo in combinations:
        axes = TsrAxes.parse(combo)
        try:
            text = apply_axes(challenge, axes, seed, cache)
        except NoValidAnchor as exc:
            report.skipped.append(Skip(challenge.id, axes.name, f"NoValidAnchor: {exc}"))
            continue
        except VrcError as exc:
            report.skipped.append(Skip(challenge.id, axes.name, f"{type(exc).__name__}: {exc}"))
            continue
        if text == challenge.question:
            report.skipped.append(Skip(challenge.id, axes.name, "no applicable rewrite"))
            continue
        if not verify_variant(challenge, text, objects):
            report.skipped.append(Skip(challenge.id, axes.name, "oracle rejected the rewrite"))
            continue
        report.variants.append(TsrVariant(challenge.id, axes, text, seed))
    return report


def generate_corpus_variants(challenges: Sequence[Challenge], seed: int | str,
                             combinations: Sequence[str] = COMBINATIONS) -> VariantReport:
    total = VariantReport()
    for ch in challenges:
        rep = generate_variants(ch, seed, combinations)
        total.variants.extend(rep.variants)
        total.skipped.extend(rep.skipped)
    return total
