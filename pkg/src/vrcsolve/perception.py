"""Detection records and their JSON wire format, plus merging of co-located boxes.

Wire format (one object per detection)::

    {"Object": "cylinder" | ["T", "blue", "side"],
     "location": [x, y],
     "bbox": [x1, y1, x2, y2]}

A document is either a bare array of such records or an object with
``image_width``/``image_height`` and a ``detections`` array.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

from .errors import GeometryError, MalformedRecord
from .ontology import default_ontology

CENTER_TOLERANCE = 0.5
DEFAULT_IOU_THRESHOLD = 0.8


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_list(self) -> list[float]:
        return [self.x, self.y]


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise GeometryError(f"non-finite box {list(vals)}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise GeometryError(f"inverted box {list(vals)}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


def center_of(bbox: BBox) -> Point:
    return Point((bbox.x1 + bbox.x2) / 2, (bbox.y1 + bbox.y2) / 2)


def iou(a: BBox, b: BBox) -> float:
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class Detection:
    labels: tuple[str, ...]
    bbox: BBox
    center: Point
    confidence: float | None = None

    def __post_init__(self):
        if not self.labels:
            raise MalformedRecord("detection has no labels")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise MalformedRecord(f"confidence out of range: {self.confidence}")
        mid = center_of(self.bbox)
        if abs(mid.x - self.center.x) > CENTER_TOLERANCE or abs(mid.y - self.center.y) > CENTER_TOLERANCE:
            raise GeometryError(
                f"location {self.center.as_list()} is not the midpoint of bbox {self.bbox.as_list()}"
            )

    @property
    def score(self) -> float:
        return 1.0 if self.confidence is None else self.confidence


@dataclass(frozen=True)
class DetectionSet:
    detections: tuple[Detection, ...] = ()
    image_width: float | None = None
    image_height: float | None = None

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)

    def __getitem__(self, i: int) -> Detection:
        return self.detections[i]

    def with_size(self, width: float | None, height: float | None) -> "DetectionSet":
        return replace(self, image_width=width, image_height=height)


def _number_list(value: Any, arity: int, key: str, idx: int) -> list[float]:
    if not isinstance(value, list) or len(value) != arity:
        raise MalformedRecord(f"record {idx}: {key!r} must be an array of {arity} numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MalformedRecord(f"record {idx}: {key!r} contains a non-number {v!r}")
        out.append(float(v))
    return out


def detection_from_record(rec: Any, idx: int = 0) -> Detection:
    if not isinstance(rec, dict):
        raise MalformedRecord(f"record {idx} is not an object")
    for key in ("Object", "location", "bbox"):
        if key not in rec:
            raise MalformedRecord(f"record {idx} is missing {key!r}")
    obj = rec["Object"]
    if isinstance(obj, str):
        labels = [obj]
    elif isinstance(obj, list) and obj and all(isinstance(t, str) for t in obj):
        labels = list(obj)
    else:
        raise MalformedRecord(f"record {idx}: 'Object' must be a string or a non-empty list of strings")
    onto = default_ontology()
    for t in labels:
        onto.parse_attribute_token(t)
    loc = _number_list(rec["location"], 2, "location", idx)
    box = _number_list(rec["bbox"], 4, "bbox", idx)
    conf = rec.get("confidence")
    if conf is not None and (isinstance(conf, bool) or not isinstance(conf, (int, float))):
        raise MalformedRecord(f"record {idx}: confidence must be a number")
    return Detection(
        labels=tuple(dict.fromkeys(labels)),
        bbox=BBox(*box),
        center=Point(*loc),
        confidence=None if conf is None else float(conf),
    )


def detection_to_record(det: Detection) -> dict:
    rec: dict[str, Any] = {
        "Object": det.labels[0] if len(det.labels) == 1 else list(det.labels),
        "location": det.center.as_list(),
        "bbox": det.bbox.as_list(),
    }
    if det.confidence is not None:
        rec["confidence"] = det.confidence
    return rec


def parse_detections(serialized: str | bytes | list | dict) -> DetectionSet:
    """Parse the wire format into a DetectionSet, preserving record order."""
    if isinstance(serialized, (bytes, bytearray)):
        serialized = serialized.decode("utf-8")
    if isinstance(serialized, str):
        try:
            doc = json.loads(serialized)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc}") from exc
    else:
        doc = serialized
    width = height = None
    if isinstance(doc, dict):
        width = doc.get("image_width")
        height = doc.get("image_height")
        doc = doc.get("detections")
    if not isinstance(doc, list):
        raise MalformedRecord("expected an array of detection records")
    dets = tuple(detection_from_record(r, i) for i, r in enumerate(doc))
    return DetectionSet(dets, width, height)


def detections_to_records(dset: Iterable[Detection]) -> list[dict]:
    return [detection_to_record(d) for d in dset]


def serialize_detections(dset: DetectionSet, with_header: bool = False, indent: int | None = None) -> str:
    records = detections_to_records(dset)
    if with_header:
        doc: Any = {
            "image_width": dset.image_width,
            "image_height": dset.image_height,
            "detections": records,
        }
    else:
        doc = records
    return json.dumps(doc, indent=indent, ensure_ascii=False)


def rounded_center(bbox: BBox) -> Point:
    """Bbox midpoint rounded to 0.1 px, the precision detectors report locations at."""
    c = center_of(bbox)
    return Point(round(c.x, 1), round(c.y, 1))


@dataclass
class _Groups:
    parent: list[int] = field(default_factory=list)

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the earliest index as root so group order follows input order
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


def colocated_groups(boxes: Sequence[BBox], iou_threshold: float) -> list[list[int]]:
    """Transitive-closure groups of indices whose pairwise IoU reaches the threshold."""
    n = len(boxes)
    g = _Groups(list(range(n)))
    for i in range(n):
        for j in range(i + 1, n):
            if iou(boxes[i], boxes[j]) >= iou_threshold:
                g.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(g.find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


def merge_colocated(dset: DetectionSet, iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> DetectionSet:
    """Merge atomic attribute detections that share (almost) the same box.

    Each group keeps its first member's box; labels are the deduplicated
    union in input order. Singletons pass through untouched, which makes the
    operation idempotent.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    dets = dset.detections
    merged: list[Detection] = []
    for group in colocated_groups([d.bbox for d in dets], iou_threshold):
        if len(group) == 1:
            merged.append(dets[group[0]])
            continue
        first = dets[group[0]]
        labels: dict[str, None] = {}
        for i in group:
            labels.update(dict.fromkeys(dets[i].labels))
        confs = [dets[i].confidence for i in group if dets[i].confidence is not None]
        merged.append(
            Detection(
                labels=tuple(labels),
                bbox=first.bbox,
                center=rounded_center(first.bbox),
                confidence=min(confs) if confs else None,
            )
        )
    return replace(dset, detections=tuple(merged))


def split_labels(labels: Iterable[str]) -> tuple[list[str], list[str], list[str]]:
    """Partition labels into (shapes, colors, towards); unknown tokens are ignored."""
    onto = default_ontology()
    shapes, colors, towards = [], [], []
    for t in labels:
        kind = onto.kind_of(t)
        if kind is None:
            continue
        {"shape": shapes, "color": colors, "toward": towards}[kind.value].append(t)
    return shapes, colors, towards
