"""Synthetic scenes with templated questions, checked by an independent brute-force solver.

Scenes stand in for crawled challenge images: objects are placed as labelled
boxes, the detector output is the exact ground truth (optionally degraded),
and every emitted question is checked to have exactly one answer.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import NoUniqueQuestion, PlacementFailure, UnparseableQuestion
from .harness import Challenge, GroundTruthRegion
from .ontology import CompoundLabel, default_ontology
from .perception import BBox, Detection, DetectionSet, Point, detections_to_records
from .qie import ParsedQuery, QueryRecord, Role, parse_question

QTYPES = ("Direct", "Spatial", "Comparative")
PROBE_DELTA = 80.0
MIN_GAP = 1.0
AREA_MARGIN = 1.0
POSITION_MARGIN = 1.0


@dataclass(frozen=True)
class PlacedObject:
    label: CompoundLabel
    bbox: BBox

    @property
    def center(self) -> Point:
        return Point((self.bbox.x1 + self.bbox.x2) / 2, (self.bbox.y1 + self.bbox.y2) / 2)

    def to_wire(self) -> dict:
        return {
            "shape": self.label.shape,
            "color": self.label.color,
            "toward": self.label.toward,
            "bbox": self.bbox.as_list(),
        }

    @classmethod
    def from_wire(cls, rec: dict) -> "PlacedObject":
        return cls(CompoundLabel(rec["shape"], rec.get("color"), rec.get("toward")), BBox(*rec["bbox"]))


@dataclass(frozen=True)
class SceneSpec:
    width: float = 680.0
    height: float = 460.0
    count_min: int = 10
    count_max: int = 20
    shapes: tuple[str, ...] = ()
    colors: tuple[str, ...] = ()
    towards: tuple[str, ...] = ()
    overlap: str = "disjoint"
    max_iou: float = 0.25
    size_min: float = 36.0
    size_max: float = 64.0
    qtypes: tuple[str, ...] = QTYPES
    seed: int | str = 0
    drop_rate: float = 0.0
    corrupt_rate: float = 0.0
    noise_seed: int | str | None = None
    wire: str = "atomic"
    name: str = "custom"

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("scene dimensions must be positive")
        if not 1 <= self.count_min <= self.count_max:
            raise ValueError("need 1 <= count_min <= count_max")
        if "Spatial" in self.qtypes and self.count_min < 2:
            raise ValueError("spatial scenes need at least two objects")
        if self.overlap not in ("disjoint", "stacked"):
            raise ValueError(f"unknown overlap policy {self.overlap!r}")
        if not 0 < self.size_min <= self.size_max or self.size_max > min(self.width, self.height):
            raise ValueError("object size range does not fit the scene")
        if not (0 <= self.drop_rate <= 1 and 0 <= self.corrupt_rate <= 1):
            raise ValueError("noise rates must lie in [0, 1]")
        if self.wire not in ("atomic", "compound"):
            raise ValueError(f"unknown wire form {self.wire!r}")
        unknown = set(self.qtypes) - set(QTYPES)
        if unknown:
            raise ValueError(f"unknown question types {sorted(unknown)}")

    def pools(self) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
        onto = default_ontology()
        return (self.shapes or onto.shapes, self.colors or onto.colors, self.towards or onto.towards)


def _shapes_in(*categories: str) -> tuple[str, ...]:
    onto = default_ontology()
    return tuple(s for s in onto.shapes if onto.category_of(s) in categories)


def profile(name: str, **overrides) -> SceneSpec:
    """Scene presets modelled on the object counts and content of six providers."""
    presets = {
        "vtt": dict(width=680, height=460, count_min=10, count_max=20,
                    shapes=_shapes_in("3D object", "letter", "number")),
        "xiaodun": dict(width=480, height=320, count_min=12, count_max=14, overlap="stacked", max_iou=0.25,
                        size_min=34, size_max=56, shapes=_shapes_in("2D shape", "letter", "number")),
        "geetest": dict(width=400, height=300, count_min=7, count_max=10, overlap="stacked", max_iou=0.15,
                        size_min=36, size_max=60, shapes=_shapes_in("3D object")),
        "netease": dict(width=480, height=240, count_min=5, count_max=7, size_min=36, size_max=60,
                        shapes=_shapes_in("3D object", "2D shape", "letter", "number")),
        "dingxiang": dict(width=400, height=200, count_min=5, count_max=5, size_min=36, size_max=56,
                          shapes=_shapes_in("2D shape", "3D object", "letter"), qtypes=("Direct", "Spatial")),
        "shumei": dict(width=400, height=200, count_min=6, count_max=6, size_min=30, size_max=60,
                       shapes=_shapes_in("3D object"), qtypes=("Direct", "Comparative")),
    }
    if name not in presets:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(presets)}")
    return SceneSpec(name=name, **{**presets[name], **overrides})


PROFILES = ("vtt", "xiaodun", "geetest", "netease", "dingxiang", "shumei")


# ---------------------------------------------------------------- placement

def _overlap_area(a: BBox, b: BBox) -> float:
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    return ix * iy if ix > 0 and iy > 0 else 0.0


def _box_iou(a: BBox, b: BBox) -> float:
    inter = _overlap_area(a, b)
    return inter / (a.area + b.area - inter) if inter else 0.0


def _separated(a: BBox, b: BBox, gap: float) -> bool:
    return a.x2 + gap <= b.x1 or b.x2 + gap <= a.x1 or a.y2 + gap <= b.y1 or b.y2 + gap <= a.y1


def _compatible(box: BBox, placed: Iterable[BBox], spec: SceneSpec) -> bool:
    if spec.overlap == "disjoint":
        return all(_separated(box, p, MIN_GAP) for p in placed)
    return all(_box_iou(box, p) <= spec.max_iou for p in placed)


def _r2(v: float) -> float:
    return round(v, 2)


def _random_box(rng: random.Random, spec: SceneSpec) -> BBox:
    w = rng.uniform(spec.size_min, spec.size_max)
    h = rng.uniform(spec.size_min, spec.size_max)
    x1 = rng.uniform(0, spec.width - w)
    y1 = rng.uniform(0, spec.height - h)
    return BBox(_r2(x1), _r2(y1), _r2(min(x1 + w, spec.width)), _r2(min(y1 + h, spec.height)))


_UNIT = {"left_of": (-1, 0), "right_of": (1, 0), "above": (0, -1), "below": (0, 1)}


def _probe(box: BBox, relation: str, delta: float = PROBE_DELTA) -> Point:
    ux, uy = _UNIT[relation]
    return Point((box.x1 + box.x2) / 2 + delta * ux, (box.y1 + box.y2) / 2 + delta * uy)


def _inside(p: Point, b: BBox) -> bool:
    return b.x1 <= p.x <= b.x2 and b.y1 <= p.y <= b.y2


def _probe_partner(rng: random.Random, spec: SceneSpec, ref: BBox, relation: str) -> BBox | None:
    """A box strictly on the ``relation`` side of ``ref`` that contains its probe point."""
    p = _probe(ref, relation)
    if not (0 <= p.x <= spec.width and 0 <= p.y <= spec.height):
        return None
    w = rng.uniform(spec.size_min, spec.size_max)
    h = rng.uniform(spec.size_min, spec.size_max)
    if relation in ("above", "below"):
        x1 = rng.uniform(p.x - w + 1, p.x - 1)
        if relation == "below":
            lo, hi = ref.y2 + MIN_GAP + 0.5, p.y - 1
            if lo > hi:
                return None
            y1 = rng.uniform(lo, hi)
        else:
            lo, hi = p.y + 1, ref.y1 - MIN_GAP - 0.5
            if lo > hi:
                return None
            y1 = rng.uniform(lo, hi) - h
    else:
        y1 = rng.uniform(p.y - h + 1, p.y - 1)
        if relation == "right_of":
            lo, hi = ref.x2 + MIN_GAP + 0.5, p.x - 1
            if lo > hi:
                return None
            x1 = rng.uniform(lo, hi)
        else:
            lo, hi = p.x + 1, ref.x1 - MIN_GAP - 0.5
            if lo > hi:
                return None
            x1 = rng.uniform(lo, hi) - w
    if x1 < 0 or y1 < 0 or x1 + w > spec.width or y1 + h > spec.height:
        return None
    box = BBox(_r2(x1), _r2(y1), _r2(x1 + w), _r2(y1 + h))
    return box if _inside(p, box) and _separated(box, ref, MIN_GAP) else None


def _random_label(rng: random.Random, spec: SceneSpec) -> CompoundLabel:
    shapes, colors, towards = spec.pools()
    return CompoundLabel(rng.choice(shapes), rng.choice(colors), rng.choice(towards))


def place_objects(spec: SceneSpec, attempts: int = 200) -> list[PlacedObject]:
    """Seeded rejection sampling. When spatial questions are enabled, the first
    two boxes form a probe-reachable pair so a spatial question always exists."""
    rng = random.Random(f"{spec.seed}:place")
    count = rng.randint(spec.count_min, spec.count_max)
    for _ in range(attempts):
        boxes: list[BBox] = []
        if "Spatial" in spec.qtypes and count >= 2:
            relation = rng.choice(sorted(_UNIT))
            ref = _random_box(rng, spec)
            partner = None
            for _ in range(20):
                partner = _probe_partner(rng, spec, ref, relation)
                if partner:
                    break
            if partner is None:
                continue
            boxes = [ref, partner]
        tries = 0
        while len(boxes) < count and tries < attempts * 5:
            tries += 1
            box = _random_box(rng, spec)
            if _compatible(box, boxes, spec):
                boxes.append(box)
        if len(boxes) == count:
            rng.shuffle(boxes)
            return [PlacedObject(_random_label(rng, spec), b) for b in boxes]
    raise PlacementFailure(f"could not place {count} objects under the {spec.overlap} policy")


# ---------------------------------------------------------------- detections

def _jitter(rng: random.Random, box: BBox, frac: float = 0.015) -> BBox:
    dx, dy = box.width * frac, box.height * frac
    x1 = box.x1 + rng.uniform(-dx, dx)
    y1 = box.y1 + rng.uniform(-dy, dy)
    x2 = box.x2 + rng.uniform(-dx, dx)
    y2 = box.y2 + rng.uniform(-dy, dy)
    return BBox(round(x1, 4), round(y1, 4), round(x2, 4), round(y2, 4))


def _detection(labels: Sequence[str], box: BBox) -> Detection:
    c = Point(round((box.x1 + box.x2) / 2, 1), round((box.y1 + box.y2) / 2, 1))
    return Detection(tuple(labels), box, c, confidence=1.0)


def _corrupt(rng: random.Random, token: str, spec: SceneSpec) -> str:
    onto = default_ontology()
    shapes, colors, towards = spec.pools()
    pool = {"shape": shapes, "color": colors, "toward": towards}[onto.kind_of(token).value]
    others = [t for t in pool if t != token]
    return rng.choice(others) if others else token


def emit_detections(objects: Sequence[PlacedObject], spec: SceneSpec) -> DetectionSet:
    """Detector output for a scene, with optional drop/corruption noise.

    Drops remove whole objects; corruption replaces individual labels.
    In the atomic form each attribute gets its own near-coincident record,
    the shape record first with the exact box.
    """
    wire_rng = random.Random(f"{spec.seed}:wire")
    noise_seed = spec.seed if spec.noise_seed is None else spec.noise_seed
    noise_rng = random.Random(f"{noise_seed}:noise")
    keyed: list[tuple[float, int, Detection]] = []
    n = len(objects)
    serial = 0
    for i, obj in enumerate(objects):
        dropped = noise_rng.random() < spec.drop_rate
        tokens = [
            _corrupt(noise_rng, t, spec) if noise_rng.random() < spec.corrupt_rate else t
            for t in obj.label.tokens()
        ]
        if spec.wire == "compound":
            recs = [(float(i), _detection(tokens, obj.bbox))]
        else:
            recs = [(float(i), _detection([tokens[0]], obj.bbox))]
            for t in tokens[1:]:
                recs.append((wire_rng.uniform(i, n), _detection([t], _jitter(wire_rng, obj.bbox))))
        if dropped:
            continue
        for key, det in recs:
            keyed.append((key, serial, det))
            serial += 1
    keyed.sort(key=lambda k: (k[0], k[1]))
    return DetectionSet(tuple(d for _, _, d in keyed), spec.width, spec.height)


def generate_scene(spec: SceneSpec) -> tuple[list[PlacedObject], DetectionSet]:
    objects = place_objects(spec)
    return objects, emit_detections(objects, spec)


# ---------------------------------------------------------------- brute-force oracle

def _shape_ok(field_value: str | None, shape: str) -> bool:
    if field_value is None:
        return True
    onto = default_ontology()
    if onto.is_category(field_value):
        return shape in onto.expand_category(field_value)
    return field_value == shape


def _fits(obj: PlacedObject, rec: QueryRecord | None) -> bool:
    if rec is None:
        return True
    return (
        _shape_ok(rec.shape, obj.label.shape)
        and (rec.color is None or rec.color == obj.label.color)
        and (rec.orientation is None or rec.orientation == obj.label.toward)
    )


def _attr(obj: PlacedObject, attr: str) -> str | None:
    return {"color": obj.label.color, "toward": obj.label.toward, "shape": obj.label.shape}[attr]


def _relation(t: BBox, r: BBox, relation: str, directly: bool) -> bool:
    """Plain relations need strict box separation; aligned ones need the target
    center past the reference's far edge and the target span to cover the
    reference center, so partially stacked pairs still qualify."""
    rx, ry = (r.x1 + r.x2) / 2, (r.y1 + r.y2) / 2
    tx, ty = (t.x1 + t.x2) / 2, (t.y1 + t.y2) / 2
    if relation == "left_of":
        return (tx < r.x1 and t.y1 <= ry <= t.y2) if directly else t.x2 < r.x1
    if relation == "right_of":
        return (tx > r.x2 and t.y1 <= ry <= t.y2) if directly else t.x1 > r.x2
    if relation == "above":
        return (ty < r.y1 and t.x1 <= rx <= t.x2) if directly else t.y2 < r.y1
    if relation == "below":
        return (ty > r.y2 and t.x1 <= rx <= t.x2) if directly else t.y1 > r.y2
    raise ValueError(relation)


def _comparative_value(obj: PlacedObject, comparator: str) -> float:
    b = obj.bbox
    return {
        "largest": -b.area,
        "smallest": b.area,
        "leftmost": (b.x1 + b.x2) / 2,
        "rightmost": -(b.x1 + b.x2) / 2,
        "topmost": (b.y1 + b.y2) / 2,
        "bottommost": -(b.y1 + b.y2) / 2,
    }[comparator]


def brute_force_solve(objects: Sequence[PlacedObject], query: ParsedQuery) -> list[PlacedObject]:
    """Exact solution set by exhaustive enumeration over ground-truth objects.

    Returned in scene order; a unique answer is a one-element list.
    """
    objs = list(objects)
    recs = {role: [r for r in query.records if r.role is role] for role in Role}
    target = recs[Role.TARGET][0] if recs[Role.TARGET] else None
    ref = recs[Role.REFERENCE][0] if recs[Role.REFERENCE] else None
    anchor = recs[Role.ANCHOR][0] if recs[Role.ANCHOR] else None

    if query.comparator is not None:
        pool = [o for o in objs if _fits(o, target)]
        if not pool:
            return []
        best = min(_comparative_value(o, query.comparator.value) for o in pool)
        return [o for o in pool if _comparative_value(o, query.comparator.value) == best]

    if query.relation is not None:
        refs = [o for o in objs if _fits(o, ref)]
        if anchor is not None:
            anchors = [a for a in objs if _fits(a, anchor) and any(
                a is not r and _relation(a.bbox, r.bbox, query.relation, query.directly) for r in refs)]
            return _sharing(objs, target, anchors)
        return [t for t in objs if _fits(t, target) and any(
            t is not r and _relation(t.bbox, r.bbox, query.relation, query.directly) for r in refs)]

    if target is not None and target.same_as:
        return _sharing(objs, target, [o for o in objs if _fits(o, ref)])
    return [o for o in objs if _fits(o, target)]


def _sharing(objs: list[PlacedObject], target: QueryRecord, sources: list[PlacedObject]) -> list[PlacedObject]:
    values = {_attr(s, target.same_as) for s in sources}
    return [
        o for o in objs
        if _fits(o, target) and all(o is not s for s in sources) and _attr(o, target.same_as) in values
    ]


def truth_region(obj: PlacedObject, width: float, height: float) -> GroundTruthRegion:
    b = obj.bbox
    return GroundTruthRegion(b.x1 / width, b.x2 / width, b.y1 / height, b.y2 / height)


# ---------------------------------------------------------------- question templates

LEADS = ("Please click on", "Click on", "Please select", "Please tap on")
RELATION_PHRASES = {
    ("left_of", False): "to the left of",
    ("left_of", True): "directly to the left of",
    ("right_of", False): "to the right of",
    ("right_of", True): "directly to the right of",
    ("above", False): "above",
    ("above", True): "directly above",
    ("below", False): "below",
    ("below", True): "directly below",
}
SAME_AS_PHRASES = {
    "color": "that has the same color as",
    "toward": "that faces the same direction as",
    "shape": "that has the same shape as",
}
COMPARATORS = ("largest", "smallest", "leftmost", "rightmost", "topmost", "bottommost")


def shape_phrase(shape: str | None) -> str:
    onto = default_ontology()
    if shape is None:
        return "object"
    if onto.is_category(shape):
        return shape
    cat = onto.category_of(shape)
    if cat == "letter":
        return f"letter '{shape}'"
    if cat == "number":
        return f"number '{shape}'"
    return shape


def describe(shape: str | None, color: str | None, toward: str | None) -> str:
    words = []
    if toward:
        words.append(f"{toward}-facing")
    if color:
        words.append(color)
    words.append(shape_phrase(shape))
    return " ".join(words)


def _descriptions(obj: PlacedObject, rng: random.Random, allow_empty: bool) -> list[tuple]:
    onto = default_ontology()
    shape_opts = [obj.label.shape, onto.category_of(obj.label.shape), None]
    out = [
        (s, c, t)
        for s, c, t in itertools.product(shape_opts, (obj.label.color, None), (obj.label.toward, None))
        if allow_empty or (s, c, t) != (None, None, None)
    ]
    rng.shuffle(out)
    return out


def _matches_desc(obj: PlacedObject, desc: tuple) -> bool:
    s, c, t = desc
    return _shape_ok(s, obj.label.shape) and c in (None, obj.label.color) and t in (None, obj.label.toward)


def _unique_desc(obj: PlacedObject, objects: Sequence[PlacedObject], rng: random.Random) -> tuple | None:
    for d in _descriptions(obj, rng, allow_empty=False):
        if sum(_matches_desc(o, d) for o in objects) == 1:
            return d
    return None


def _solves_to(text: str, objects: Sequence[PlacedObject], answer: PlacedObject) -> bool:
    try:
        q = parse_question(text)
    except UnparseableQuestion:
        return False
    sol = brute_force_solve(objects, q)
    return len(sol) == 1 and sol[0] is answer


def _probe_lands_only_in(ref: PlacedObject, answer: PlacedObject, relation: str,
                         objects: Sequence[PlacedObject], width: float, height: float) -> bool:
    p = _probe(ref.bbox, relation)
    if not (0 <= p.x <= width and 0 <= p.y <= height):
        return False
    hits = [o for o in objects if _inside(p, o.bbox)]
    return len(hits) == 1 and hits[0] is answer


def _direct(objects, rng, width, height):
    order = list(objects)
    rng.shuffle(order)
    lead = rng.choice(LEADS)
    use_same = rng.random() < 0.3
    for answer in order:
        if use_same:
            for source in [o for o in order if o is not answer]:
                rdesc = _unique_desc(source, objects, rng)
                if rdesc is None:
                    continue
                for attr in rng.sample(sorted(SAME_AS_PHRASES), 3):
                    if _attr(source, attr) != _attr(answer, attr):
                        continue
                    for d in _descriptions(answer, rng, allow_empty=True):
                        text = f"{lead} the {describe(*d)} {SAME_AS_PHRASES[attr]} the {describe(*rdesc)}"
                        if _solves_to(text, objects, answer):
                            return text, answer
        for d in _descriptions(answer, rng, allow_empty=False):
            text = f"{lead} the {describe(*d)}"
            if _solves_to(text, objects, answer):
                return text, answer
    return None


def _spatial(objects, rng, width, height):
    lead = rng.choice(LEADS)
    triples = [
        (r, t, rel)
        for r in objects for t in objects for rel in sorted(_UNIT)
        if r is not t and _probe_lands_only_in(r, t, rel, objects, width, height)
    ]
    rng.shuffle(triples)
    for ref, answer, relation in triples:
        rdesc = _unique_desc(ref, objects, rng)
        if rdesc is None:
            continue
        for directly in rng.sample([True, False], 2):
            phrase = RELATION_PHRASES[(relation, directly)]
            for d in _descriptions(answer, rng, allow_empty=True):
                text = f"{lead} the {describe(*d)} {phrase} the {describe(*rdesc)}"
                if _solves_to(text, objects, answer):
                    return text, answer
    return None


def _margin_ok(pool: list[PlacedObject], comparator: str) -> bool:
    vals = sorted(_comparative_value(o, comparator) for o in pool)
    if len(vals) < 2:
        return True
    margin = AREA_MARGIN if comparator in ("largest", "smallest") else POSITION_MARGIN
    return vals[1] - vals[0] >= margin


def _comparative(objects, rng, width, height):
    lead = rng.choice(LEADS)
    options = []
    for comp in COMPARATORS:
        for obj in objects:
            for d in _descriptions(obj, rng, allow_empty=True):
                options.append((comp, d))
    rng.shuffle(options)
    seen = set()
    for comp, d in options:
        if (comp, d) in seen:
            continue
        seen.add((comp, d))
        pool = [o for o in objects if _matches_desc(o, d)]
        if len(pool) < 2 or not _margin_ok(pool, comp):
            continue
        answer = min(pool, key=lambda o: _comparative_value(o, comp))
        text = f"{lead} the {comp} {describe(*d)}"
        if _solves_to(text, objects, answer):
            return text, answer
    return None


_BUILDERS = {"Direct": _direct, "Spatial": _spatial, "Comparative": _comparative}


def generate_question(
    objects: Sequence[PlacedObject], qtype: str, seed: int | str, width: float, height: float
) -> tuple[str, GroundTruthRegion]:
    """A templated question with exactly one answer (checked by the oracle)."""
    if qtype not in _BUILDERS:
        raise ValueError(f"unknown question type {qtype!r}")
    rng = random.Random(f"{seed}:{qtype}:question")
    found = _BUILDERS[qtype](list(objects), rng, width, height)
    if found is None:
        raise NoUniqueQuestion(f"no {qtype} question has a unique answer in this scene")
    text, answer = found
    return text, truth_region(answer, width, height)


# ---------------------------------------------------------------- corpora

def generate_corpus(
    spec: SceneSpec,
    count: int,
    seed: int | str = 0,
    qtypes: Sequence[str] | None = None,
    max_attempts: int = 50,
) -> list[Challenge]:
    """``count`` challenges cycling through ``qtypes``; unlucky scenes are resampled.

    Noise settings on ``spec`` only affect the detection records, so a clean
    and a noisy corpus built with the same seed share scenes and questions.
    """
    qtypes = tuple(qtypes or spec.qtypes)
    out = []
    for i in range(count):
        qtype = qtypes[i % len(qtypes)]
        for attempt in range(max_attempts):
            scene_seed = f"{seed}:{spec.name}:{i}:{attempt}"
            noise_seed = None if spec.noise_seed is None else f"{spec.noise_seed}:{i}"
            sspec = replace(spec, seed=scene_seed, qtypes=(qtype,), noise_seed=noise_seed)
            try:
                objects = place_objects(sspec)
                text, truth = generate_question(objects, qtype, scene_seed, spec.width, spec.height)
            except (PlacementFailure, NoUniqueQuestion):
                continue
            dets = emit_detections(objects, sspec)
            out.append(Challenge(
                id=f"{spec.name}-{seed}-{i:05d}",
                question=text,
                detections=detections_to_records(dets),
                image_width=spec.width,
                image_height=spec.height,
                truth=truth,
                platform=spec.name,
                reasoning=qtype,
                meta={"objects": [o.to_wire() for o in objects], "scene_seed": scene_seed},
            ))
            break
        else:
            raise NoUniqueQuestion(f"challenge {i}: no {qtype} question after {max_attempts} scenes")
    return out


def challenge_objects(challenge: Challenge) -> list[PlacedObject]:
    """Ground-truth objects stored with a generated challenge."""
    if "objects" not in challenge.meta:
        raise KeyError(f"challenge {challenge.id} carries no ground-truth objects")
    return [PlacedObject.from_wire(o) for o in challenge.meta["objects"]]


def with_noise(challenge: Challenge, drop: float, corrupt: float = 0.0, noise_seed: int | str = 0,
               base: SceneSpec | None = None) -> Challenge:
    """Re-emit a generated challenge's detections under drop/corruption noise.

    Scene, question and truth are unchanged; with both rates at zero the
    original detection records are reproduced exactly.
    """
    objects = challenge_objects(challenge)
    if base is None:
        base = SceneSpec(
            width=challenge.image_width, height=challenge.image_height, count_min=1, count_max=1,
            size_min=1.0, size_max=min(challenge.image_width, challenge.image_height), qtypes=("Direct",),
        )
    spec = replace(base, seed=challenge.meta["scene_seed"], drop_rate=drop, corrupt_rate=corrupt,
                   noise_seed=f"{noise_seed}:{challenge.id}")
    return replace(challenge, detections=detections_to_records(emit_detections(objects, spec)))


def render_scene(objects: Sequence[PlacedObject], width: float, height: float, path: str) -> None:
    """Draw labelled boxes for human inspection (not consumed by any stage)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Rectangle

    fig, ax = plt.subplots(figsize=(width / 100, height / 100), dpi=100)
    ax.set_xlim(0, width)
    ax.set_ylim(height, 0)
    ax.set_aspect("equal")
    for obj in objects:
        b = obj.bbox
        color = obj.label.color if obj.label.color in ("yellow", "green", "gray", "blue", "red") else "black"
        ax.add_patch(Rectangle((b.x1, b.y1), b.width, b.height, fill=False, edgecolor=color, linewidth=1.5))
        ax.text(b.x1 + 2, b.y1 + 10, f"{obj.label.shape}/{obj.label.toward}", fontsize=6)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
