"""Prompts conditioned on the reasoning type, plus the rule-based answer resolver."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template
from typing import Iterable, Sequence

from .errors import Ambiguous, EmptyScene, MalformedAnswer, NoMatch
from .integrator import Candidate, CandidateSet, candidate_to_record, record_matches
from .perception import BBox, Detection, Point, center_of, detection_to_record, split_labels
from .qie import Comparator, ParsedQuery, QueryRecord, ReasoningType, Role

ANSWER_SCHEMA = "output exactly one coordinate in the form (x,y) in pixels"
COORDINATE_CONVENTION = "x increases rightward, y increases downward"

RELATION_WORDS = {
    "left_of": "to the left of",
    "right_of": "to the right of",
    "above": "above",
    "below": "below",
}
COMPARATOR_ATTRIBUTE = {
    Comparator.LARGEST: "box area (x2-x1)*(y2-y1)",
    Comparator.SMALLEST: "box area (x2-x1)*(y2-y1)",
    Comparator.LEFTMOST: "the x coordinate of the center",
    Comparator.RIGHTMOST: "the x coordinate of the center",
    Comparator.TOPMOST: "the y coordinate of the center",
    Comparator.BOTTOMMOST: "the y coordinate of the center",
}


@dataclass(frozen=True)
class Answer:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise MalformedAnswer(f"non-finite answer ({self.x}, {self.y})")

    @classmethod
    def at(cls, p: Point) -> "Answer":
        return cls(p.x, p.y)

    def as_point(self) -> Point:
        return Point(self.x, self.y)


@dataclass(frozen=True)
class Prompt:
    reasoning_mode: str
    body: str
    answer_schema: str
    coordinate_convention: str
    serialized_candidates: str
    record_count: int

    @property
    def text(self) -> str:
        return self.body


# ---------------------------------------------------------------- templates

@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files("vrcsolve").joinpath("data", "prompts", f"{name}.txt").read_text("utf-8").rstrip("\n")


def describe_record(rec: QueryRecord | None) -> str:
    if rec is None:
        return "any object"
    parts = [
        f"shape={rec.shape or '*'}",
        f"color={rec.color or '*'}",
        f"orientation={rec.orientation or '*'}",
    ]
    if rec.same_as:
        parts.append(f"same {rec.same_as} as the reference")
    return ", ".join(parts)


def _conjunction(rec: QueryRecord | None) -> str:
    if rec is None:
        return "any object"
    parts = [f"{k} = {v}" for k, v in (("shape", rec.shape), ("color", rec.color), ("orientation", rec.orientation)) if v]
    if rec.same_as:
        parts.append(f"{rec.same_as} equal to that of the reference object")
    return " AND ".join(parts) if parts else "any object"


def _json_lines(records: Sequence[dict]) -> str:
    if not records:
        return "[]"
    inner = ",\n".join("  " + json.dumps(r, ensure_ascii=False) for r in records)
    return "[\n" + inner + "\n]"


def candidate_records(cands: CandidateSet) -> list[dict]:
    """Compact records: attribute list (plus tag) and center per candidate."""
    return [candidate_to_record(c, with_bbox=False) for c in cands]


def _assemble(sections: Iterable[str]) -> str:
    return "\n\n".join(s for s in sections if s) + "\n"


def build_prompt(query: ParsedQuery, candidates: CandidateSet) -> Prompt:
    """Prompt conditioned on the reasoning type of ``query``."""
    if len(candidates) == 0:
        raise EmptyScene("no candidates and no references to describe")
    mode = query.reasoning_type
    if mode is ReasoningType.SPATIAL:
        block = Template(load_template("spatial")).substitute(
            relation_words=("directly " if query.directly else "") + RELATION_WORDS[query.relation],
            reference=describe_record(query.reference),
        )
    elif mode is ReasoningType.COMPARATIVE:
        block = Template(load_template("comparative")).substitute(
            attribute=COMPARATOR_ATTRIBUTE[query.comparator],
            comparator=query.comparator.value,
            target=describe_record(query.target),
        )
    else:
        block = Template(load_template("direct")).substitute(conjunction=_conjunction(query.target))
        if query.reference is not None:
            block += f"\nReference object: {describe_record(query.reference)}."
    records = candidate_records(candidates)
    serialized = _json_lines(records)
    body = _assemble([
        load_template("preamble"),
        block,
        f'Question: "{query.raw_text}"',
        "Candidates (attribute list and center location):\n" + serialized,
        load_template("rules"),
    ])
    return Prompt(mode.value, body, ANSWER_SCHEMA, COORDINATE_CONVENTION, serialized, len(records))


def build_minimal_prompt(question: str) -> Prompt:
    """Question-only prompt: no perception records at all."""
    body = _assemble([load_template("minimal"), f'Question: "{question}"', load_template("rules")])
    return Prompt("Unstructured", body, ANSWER_SCHEMA, COORDINATE_CONVENTION, "", 0)


def build_detector_prompt(question: str, detections: Sequence[Detection]) -> Prompt:
    """Question plus the full, unfiltered detector output."""
    serialized = _json_lines([detection_to_record(d) for d in detections])
    body = _assemble([
        load_template("preamble"),
        f'Question: "{question}"',
        "Detections (label, center location, bbox):\n" + serialized,
        load_template("rules"),
    ])
    return Prompt("Unstructured", body, ANSWER_SCHEMA, COORDINATE_CONVENTION, serialized, len(detections))


# ---------------------------------------------------------------- decision rules

def attribute_values(labels: Sequence[str], attr: str) -> set[str]:
    shapes, colors, towards = split_labels(labels)
    return set({"shape": shapes, "color": colors, "toward": towards}[attr])


def _key(c: Candidate):
    return c.detection_index if c.detection_index is not None else (c.center.x, c.center.y)


def _distinct(cands: Iterable[Candidate]) -> list[Candidate]:
    seen, out = set(), []
    for c in cands:
        k = _key(c)
        if k not in seen:
            seen.add(k)
            out.append(c)
    return out


def _unique(cands: list[Candidate], what: str) -> Answer:
    cands = _distinct(cands)
    if not cands:
        raise NoMatch(f"no candidate satisfies the {what} query")
    if len(cands) > 1:
        raise Ambiguous(f"{len(cands)} candidates satisfy the {what} query")
    return Answer.at(cands[0].center)


def _shares_attribute(cands: list[Candidate], sources: list[Candidate], attr: str) -> list[Candidate]:
    source_keys = {_key(s) for s in sources}
    values: set[str] = set()
    for s in sources:
        values |= attribute_values(s.labels, attr)
    return [c for c in cands if _key(c) not in source_keys and attribute_values(c.labels, attr) & values]


def resolve_direct(query: ParsedQuery, candidates: CandidateSet) -> Answer:
    """Center of the unique candidate satisfying the target record."""
    target = query.target
    if target is None:
        raise NoMatch("query has no target record")
    pool = candidates.with_role(query, Role.TARGET)
    if target.same_as:
        refs = candidates.with_role(query, Role.REFERENCE)
        pool = _shares_attribute(pool, refs, target.same_as)
    return _unique(pool, "direct")


def relation_holds(target: BBox, reference: BBox, relation: str, directly: bool = False) -> bool:
    """Plain form: strict box separation along the relation axis.

    Aligned form ("directly"): the target center lies past the reference's far
    edge and the target's cross-axis span covers the reference center.
    """
    rc, tc = center_of(reference), center_of(target)
    if relation == "left_of":
        ok = tc.x < reference.x1 if directly else target.x2 < reference.x1
        aligned = target.y1 <= rc.y <= target.y2
    elif relation == "right_of":
        ok = tc.x > reference.x2 if directly else target.x1 > reference.x2
        aligned = target.y1 <= rc.y <= target.y2
    elif relation == "above":
        ok = tc.y < reference.y1 if directly else target.y2 < reference.y1
        aligned = target.x1 <= rc.x <= target.x2
    elif relation == "below":
        ok = tc.y > reference.y2 if directly else target.y1 > reference.y2
        aligned = target.x1 <= rc.x <= target.x2
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return ok and (aligned or not directly)


def axis_gap(target: BBox, reference: BBox, relation: str) -> float:
    return {
        "left_of": reference.x1 - target.x2,
        "right_of": target.x1 - reference.x2,
        "above": reference.y1 - target.y2,
        "below": target.y1 - reference.y2,
    }[relation]


def _geometric(query: ParsedQuery, pool: list[Candidate], refs: list[Candidate]) -> list[Candidate]:
    """Candidates enforcing the relation against some reference, nearest first."""
    ranked = []
    ref_keys = {_key(r) for r in refs}
    for order, c in enumerate(pool):
        if c.bbox is None or _key(c) in ref_keys:
            continue
        gaps = [
            axis_gap(c.bbox, r.bbox, query.relation)
            for r in refs
            if r.bbox is not None and relation_holds(c.bbox, r.bbox, query.relation, query.directly)
        ]
        if gaps:
            ranked.append((min(gaps), order, c))
    ranked.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in ranked]


def _linked_targets(query: ParsedQuery, candidates: CandidateSet, record: QueryRecord | None) -> list[Candidate]:
    targets = [c for c in candidates if c.is_inferred]
    if record is not None:
        targets = [c for c in targets if record_matches(c.labels, record)]
    return _distinct(targets)


def _pick_linked(query: ParsedQuery, candidates: CandidateSet, targets: list[Candidate]) -> Candidate:
    def specificity(c: Candidate) -> int:
        if c.link is None:
            return 0
        ref = candidates[c.link]
        if ref.matched_record is None:
            return 0
        return query.records[ref.matched_record].populated()

    order = {id(c): i for i, c in enumerate(candidates)}
    return sorted(targets, key=lambda c: (-specificity(c), order.get(id(c), 0)))[0]


def resolve_spatial(query: ParsedQuery, candidates: CandidateSet) -> Answer:
    """Follow reference-target links; fall back to enforcing the relation geometrically."""
    refs = candidates.with_role(query, Role.REFERENCE)
    target_rec = query.target
    anchor_rec = query.anchor
    if anchor_rec is not None:
        anchors = _linked_targets(query, candidates, anchor_rec)
        if not anchors:
            anchors = _geometric(query, candidates.with_role(query, Role.ANCHOR), refs)[:1]
        if not anchors:
            raise NoMatch("no anchor object satisfies the relation")
        pool = candidates.with_role(query, Role.TARGET)
        return _unique(_shares_attribute(pool, anchors, target_rec.same_as), "indirect")

    # a target record that is pure wildcard still narrows nothing
    filt = target_rec if target_rec is not None and target_rec.populated() else None
    targets = _linked_targets(query, candidates, filt)
    if len(targets) == 1:
        return Answer.at(targets[0].center)
    if len(targets) > 1:
        return Answer.at(_pick_linked(query, candidates, targets).center)
    if target_rec is not None:
        pool = candidates.with_role(query, Role.TARGET)
    else:
        ref_idx = set(query.indices(Role.REFERENCE))
        pool = [c for c in candidates if c.matched_record not in ref_idx]
    ranked = _geometric(query, pool, refs)
    if not ranked:
        raise NoMatch("no linked target and no candidate satisfies the relation")
    return Answer.at(ranked[0].center)


def resolve_comparative(query: ParsedQuery, candidates: CandidateSet) -> Answer:
    """Extreme of area or center coordinate; ties go to traversal order."""
    pool = [c for c in _distinct(candidates.with_role(query, Role.TARGET))]
    if not pool:
        raise NoMatch("no candidate to compare")
    comp = query.comparator

    def stat(c: Candidate) -> float:
        if comp in (Comparator.LARGEST, Comparator.SMALLEST):
            if c.bbox is None:
                raise NoMatch("candidate without a box cannot be compared by area")
            return c.bbox.area
        return c.center.x if comp in (Comparator.LEFTMOST, Comparator.RIGHTMOST) else c.center.y

    maximize = comp in (Comparator.LARGEST, Comparator.RIGHTMOST, Comparator.BOTTOMMOST)
    best = pool[0]
    best_v = stat(best)
    for c in pool[1:]:
        v = stat(c)
        if (v > best_v) if maximize else (v < best_v):
            best, best_v = c, v
    return Answer.at(best.center)


def resolve(query: ParsedQuery, candidates: CandidateSet) -> Answer:
    if query.reasoning_type is ReasoningType.SPATIAL:
        return resolve_spatial(query, candidates)
    if query.reasoning_type is ReasoningType.COMPARATIVE:
        return resolve_comparative(query, candidates)
    return resolve_direct(query, candidates)


# ---------------------------------------------------------------- answers

_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_PAIR = re.compile(r"\(\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\)")


def format_answer(a: Answer) -> str:
    return f"({a.x!r}, {a.y!r})"


def parse_backend_answer(text: str) -> Answer:
    """Extract the single ``(x, y)`` pair from a backend reply."""
    pairs = _PAIR.findall(text)
    if len(pairs) != 1:
        raise MalformedAnswer(f"expected exactly one (x,y) pair in {text!r}")
    x, y = (float(v) for v in pairs[0])
    return Answer(x, y)
