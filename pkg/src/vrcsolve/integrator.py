"""Wildcard attribute matching of detections against parsed query records."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

from .errors import MalformedRecord, NoCandidates
from .ontology import default_ontology
from .perception import BBox, Detection, DetectionSet, Point, detection_from_record
from .qie import ParsedQuery, QueryRecord, Role

MAYBE_RESULT = "!maybe result"


@dataclass(frozen=True)
class Candidate:
    labels: tuple[str, ...]
    bbox: BBox | None
    center: Point
    matched_record: int | None = None
    tags: frozenset[str] = frozenset()
    link: int | None = None
    detection_index: int | None = None

    def __post_init__(self):
        if not self.tags <= {MAYBE_RESULT}:
            raise ValueError(f"unknown candidate tags {set(self.tags)}")

    @property
    def is_inferred(self) -> bool:
        return MAYBE_RESULT in self.tags


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[Candidate, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, i: int) -> Candidate:
        return self.candidates[i]

    def with_role(self, query: ParsedQuery, role: Role) -> list[Candidate]:
        idx = set(query.indices(role))
        return [c for c in self.candidates if c.matched_record in idx]


def shape_matches(shape_field: str, shapes: Iterable[str]) -> bool:
    onto = default_ontology()
    if onto.is_category(shape_field):
        allowed = onto.expand_category(shape_field)
        return any(s in allowed for s in shapes)
    return shape_field in shapes


def record_matches(labels: Sequence[str], record: QueryRecord) -> bool:
    """All populated fields must be carried by the labels; empty fields are wildcards.

    Attributes missing on the detection side fail a populated constraint.
    """
    if record.shape is not None and not shape_matches(record.shape, labels):
        return False
    if record.color is not None and record.color not in labels:
        return False
    if record.orientation is not None and record.orientation not in labels:
        return False
    return True


def candidate_from_detection(det: Detection, index: int, record: int | None = None) -> Candidate:
    return Candidate(det.labels, det.bbox, det.center, matched_record=record, detection_index=index)


def match(detections: DetectionSet, query: ParsedQuery) -> CandidateSet:
    """Keep detections that satisfy at least one record, in traversal order.

    A detection matching several records yields one candidate per record.
    Raises NoCandidates when a reference record matches nothing.
    """
    out: list[Candidate] = []
    hits = [0] * len(query.records)
    for i, det in enumerate(detections):
        for j, rec in enumerate(query.records):
            if record_matches(det.labels, rec):
                out.append(candidate_from_detection(det, i, j))
                hits[j] += 1
    for j, rec in enumerate(query.records):
        if rec.role is Role.REFERENCE and hits[j] == 0:
            raise NoCandidates(f"no detection matches the reference {rec.to_wire()['ObjectData']}")
    return CandidateSet(tuple(out))


# ---------------------------------------------------------------- wire format

def candidate_to_record(c: Candidate, with_bbox: bool = True) -> dict:
    labels = list(c.labels)
    if c.is_inferred:
        labels.append(MAYBE_RESULT)
    rec: dict[str, Any] = {"Object": labels, "location": c.center.as_list()}
    if with_bbox and c.bbox is not None:
        rec["bbox"] = c.bbox.as_list()
    return rec


def serialize_candidates(cands: CandidateSet, with_bbox: bool = True, indent: int | None = None) -> str:
    return json.dumps([candidate_to_record(c, with_bbox) for c in cands], indent=indent, ensure_ascii=False)


def parse_candidates(serialized: str | list) -> CandidateSet:
    """Parse the candidate wire format (``bbox`` optional, tag appended to labels).

    Inferred targets are linked to the nearest preceding untagged candidate,
    which is how the compact form lists reference/target pairs.
    """
    doc = json.loads(serialized) if isinstance(serialized, str) else serialized
    if not isinstance(doc, list):
        raise MalformedRecord("expected an array of candidate records")
    out: list[Candidate] = []
    last_ref: int | None = None
    for i, rec in enumerate(doc):
        if not isinstance(rec, dict) or "Object" not in rec or "location" not in rec:
            raise MalformedRecord(f"candidate {i} needs 'Object' and 'location'")
        obj = rec["Object"]
        labels = [obj] if isinstance(obj, str) else list(obj)
        tagged = MAYBE_RESULT in labels
        labels = [t for t in labels if t != MAYBE_RESULT]
        if "bbox" in rec:
            det = detection_from_record({"Object": labels, "location": rec["location"], "bbox": rec["bbox"]}, i)
            bbox, center = det.bbox, det.center
        else:
            for t in labels:
                default_ontology().parse_attribute_token(t)
            loc = rec["location"]
            if not isinstance(loc, list) or len(loc) != 2:
                raise MalformedRecord(f"candidate {i}: 'location' must be [x, y]")
            bbox, center = None, Point(float(loc[0]), float(loc[1]))
        cand = Candidate(
            tuple(labels), bbox, center,
            tags=frozenset({MAYBE_RESULT}) if tagged else frozenset(),
            link=last_ref if tagged else None,
        )
        if not tagged:
            last_ref = len(out)
        out.append(cand)
    return CandidateSet(tuple(out))


def tag_inferred(c: Candidate, link: int) -> Candidate:
    return replace(c, tags=frozenset({MAYBE_RESULT}), link=link)
