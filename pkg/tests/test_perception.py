from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.samples import DUMP_RECORDS, T_CANDIDATES, VISIBLE_DETECTIONS
from vrcsolve.errors import GeometryError, MalformedRecord, UnknownToken
from vrcsolve.perception import (
    BBox,
    Detection,
    DetectionSet,
    Point,
    center_of,
    detections_to_records,
    iou,
    merge_colocated,
    parse_detections,
    rounded_center,
    serialize_detections,
    split_labels,
)


def test_single_token_record():
    dset = parse_detections(json.dumps(DUMP_RECORDS[:1]))
    det = dset[0]
    assert det.labels == ("cylinder",)
    assert det.center == Point(366.9, 165.7)
    assert det.confidence is None and det.score == 1.0


def test_attribute_list_record():
    det = parse_detections([T_CANDIDATES[0]])[0]
    assert det.labels == ("T", "blue", "side")


def test_inverted_box_is_a_geometry_error():
    with pytest.raises(GeometryError):
        parse_detections([{"Object": "cube", "location": [7.5, 15], "bbox": [10, 10, 5, 20]}])


def test_non_finite_box():
    with pytest.raises(GeometryError):
        BBox(0, 0, math.inf, 1)


@pytest.mark.parametrize(
    "record",
    [
        {"Object": "cube", "location": [1, 1]},
        {"Object": "cube", "location": [1, 1, 1], "bbox": [0, 0, 2, 2]},
        {"Object": "cube", "location": [1, 1], "bbox": [0, 0, 2]},
        {"Object": [], "location": [1, 1], "bbox": [0, 0, 2, 2]},
        {"Object": "cube", "location": ["1", 1], "bbox": [0, 0, 2, 2]},
        {"object": "cube", "location": [1, 1], "bbox": [0, 0, 2, 2]},
    ],
)
def test_malformed_records(record):
    with pytest.raises(MalformedRecord):
        parse_detections([record])


def test_unknown_label_propagates():
    with pytest.raises(UnknownToken):
        parse_detections([{"Object": "teal", "location": [1, 1], "bbox": [0, 0, 2, 2]}])


def test_location_must_be_the_midpoint():
    with pytest.raises(GeometryError):
        parse_detections([{"Object": "cube", "location": [5, 5], "bbox": [0, 0, 2, 2]}])


def test_invalid_json():
    with pytest.raises(MalformedRecord):
        parse_detections("[{")


def test_header_form_carries_image_size():
    doc = {"image_width": 680, "image_height": 460, "detections": DUMP_RECORDS}
    dset = parse_detections(json.dumps(doc).encode())
    assert (dset.image_width, dset.image_height) == (680, 460)
    assert json.loads(serialize_detections(dset, with_header=True)) == doc


def test_center_of_worked_example_box():
    c = center_of(BBox(394.7731, 101.0462, 490.2843, 235.4473))
    assert c.x == pytest.approx(442.5287, abs=1e-4)
    assert c.y == pytest.approx(168.24675, abs=1e-4)
    assert rounded_center(BBox(394.7731, 101.0462, 490.2843, 235.4473)) == Point(442.5, 168.2)


def test_center_of_trivial_boxes():
    assert center_of(BBox(0, 0, 2, 2)) == Point(1, 1)
    assert center_of(BBox(5, 5, 5, 5)) == Point(5, 5)


def test_detector_dump_round_trip_is_exact():
    assert json.loads(serialize_detections(parse_detections(DUMP_RECORDS))) == DUMP_RECORDS
    assert json.loads(serialize_detections(parse_detections(VISIBLE_DETECTIONS))) == VISIBLE_DETECTIONS


def test_confidence_is_emitted_only_when_present():
    recs = [{"Object": "cube", "location": [1, 1], "bbox": [0, 0, 2, 2], "confidence": 0.5}]
    assert detections_to_records(parse_detections(recs)) == recs


def test_merge_triplet():
    a = BBox(394.7731, 101.0462, 490.2843, 235.4473)
    recs = [
        Detection(("T",), a, rounded_center(a)),
        Detection(("blue",), BBox(395.1, 101.3, 490.0, 235.2), Point(442.6, 168.2)),
        Detection(("side",), BBox(394.5, 100.9, 490.4, 235.6), Point(442.5, 168.2)),
    ]
    merged = merge_colocated(DetectionSet(tuple(recs)))
    assert len(merged) == 1
    assert merged[0].labels == ("T", "blue", "side")
    assert merged[0].bbox == a
    assert merged[0].center == Point(442.5, 168.2)


def test_merge_keeps_disjoint_detections():
    dset = parse_detections(DUMP_RECORDS)
    assert merge_colocated(dset) == dset


def test_merge_empty():
    assert len(merge_colocated(DetectionSet())) == 0


def test_merge_rejects_bad_threshold():
    with pytest.raises(ValueError):
        merge_colocated(DetectionSet(), 0.0)


def test_merge_is_transitive():
    # a~b and b~c at 0.8 even though a and c alone fall short
    boxes = [BBox(0, 0, 100, 100), BBox(5, 0, 105, 100), BBox(10, 0, 110, 100)]
    assert iou(boxes[0], boxes[2]) < 0.85 <= iou(boxes[0], boxes[1])
    dets = [Detection((lab,), b, center_of(b)) for lab, b in zip(("cube", "red", "side"), boxes)]
    merged = merge_colocated(DetectionSet(tuple(dets)), 0.85)
    assert len(merged) == 1 and merged[0].labels == ("cube", "red", "side")


def test_merged_confidence_is_the_minimum():
    b = BBox(0, 0, 10, 10)
    dets = (Detection(("cube",), b, center_of(b), 0.9), Detection(("red",), b, center_of(b), 0.4))
    assert merge_colocated(DetectionSet(dets))[0].confidence == 0.4


def test_split_labels():
    assert split_labels(["T", "blue", "side", "!maybe result"]) == (["T"], ["blue"], ["side"])


# ---------------------------------------------------------------- properties

coords = st.floats(min_value=0, max_value=1000, allow_nan=False, allow_infinity=False)


@st.composite
def boxes(draw):
    x1, x2 = sorted((draw(coords), draw(coords)))
    y1, y2 = sorted((draw(coords), draw(coords)))
    return BBox(x1, y1, x2, y2)


@st.composite
def detection_sets(draw):
    labels = st.sampled_from(["cube", "T", "6", "red", "blue", "side", "front", "sphere"])
    dets = []
    for b in draw(st.lists(boxes(), max_size=8)):
        dets.append(Detection((draw(labels),), b, rounded_center(b)))
        if draw(st.booleans()):
            dets.append(Detection((draw(labels),), b, rounded_center(b)))
    return DetectionSet(tuple(dets))


@given(boxes())
def test_center_lies_inside_its_box(b):
    c = center_of(b)
    assert b.x1 <= c.x <= b.x2 and b.y1 <= c.y <= b.y2


@given(boxes(), boxes())
def test_iou_is_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0


@settings(max_examples=200)
@given(detection_sets())
def test_merge_is_idempotent(dset):
    once = merge_colocated(dset)
    assert merge_colocated(once) == once


@settings(max_examples=200)
@given(detection_sets())
def test_parse_serialize_parse_is_a_fixed_point(dset):
    text = serialize_detections(dset)
    again = parse_detections(text)
    assert serialize_detections(again) == text
    assert again == dset
