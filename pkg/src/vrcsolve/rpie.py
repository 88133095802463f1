"""Relative position inference by probe-point projection."""
from __future__ import annotations

from dataclasses import dataclass

from .integrator import Candidate, CandidateSet, candidate_from_detection, tag_inferred
from .perception import BBox, DetectionSet, Point, center_of
from .qie import ParsedQuery, Role

DEFAULT_DELTA = 80.0

DIRECTIONS: dict[str, tuple[int, int]] = {
    "left_of": (-1, 0),
    "right_of": (1, 0),
    "above": (0, -1),
    "below": (0, 1),
}


@dataclass(frozen=True)
class ProbeConfig:
    """Probe offset in pixels; with ``adaptive`` set, the offset is
    ``beta`` times the reference box extent along the relation axis."""

    delta: float = DEFAULT_DELTA
    adaptive: bool = False
    beta: float = 1.0

    def __post_init__(self):
        if not (self.delta > 0 and self.delta != float("inf")):
            raise ValueError(f"delta must be finite and positive, got {self.delta}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def offset_for(self, box: BBox, relation: str) -> float:
        if not self.adaptive:
            return self.delta
        ux, _ = DIRECTIONS[relation]
        extent = box.width if ux else box.height
        return self.beta * extent if extent > 0 else self.delta


def shift(p: Point, relation: str, delta: float) -> Point:
    if not delta > 0:
        raise ValueError("delta must be positive")
    ux, uy = DIRECTIONS[relation]
    return Point(p.x + delta * ux, p.y + delta * uy)


def contains(p: Point, b: BBox) -> bool:
    return b.x1 <= p.x <= b.x2 and b.y1 <= p.y <= b.y2


def in_image(p: Point, width: float | None, height: float | None) -> bool:
    if p.x < 0 or p.y < 0:
        return False
    if width is not None and p.x > width:
        return False
    if height is not None and p.y > height:
        return False
    return True


def first_hit(probe: Point, detections: DetectionSet, exclude: int | None) -> int | None:
    for j, det in enumerate(detections):
        if j != exclude and contains(probe, det.bbox):
            return j
    return None


def infer_relative(
    query: ParsedQuery,
    references: CandidateSet,
    detections: DetectionSet,
    cfg: ProbeConfig = ProbeConfig(),
) -> CandidateSet:
    """Augment the candidate set with targets found by probing from each reference.

    Every input candidate is kept; each inferred target follows the reference
    it is linked to and carries the ``!maybe result`` tag.
    """
    if query.relation is None:
        return references
    ref_rows = set(query.indices(Role.REFERENCE))
    out: list[Candidate] = []
    for cand in references:
        out.append(cand)
        if cand.matched_record not in ref_rows or cand.bbox is None:
            continue
        probe = shift(center_of(cand.bbox), query.relation, cfg.offset_for(cand.bbox, query.relation))
        if not in_image(probe, detections.image_width, detections.image_height):
            continue
        hit = first_hit(probe, detections, exclude=cand.detection_index)
        if hit is None:
            continue
        target = candidate_from_detection(detections[hit], hit)
        out.append(tag_inferred(target, link=len(out) - 1))
    return CandidateSet(tuple(out))


def links(cands: CandidateSet) -> list[tuple[int, int]]:
    """(reference detection index, target detection index) pairs, in order."""
    return [
        (cands[c.link].detection_index, c.detection_index)
        for c in cands
        if c.is_inferred and c.link is not None
    ]
