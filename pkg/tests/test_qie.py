from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.samples import EXAMPLE_QUESTION
from vrcsolve.errors import UnparseableQuestion
from vrcsolve.ontology import default_ontology
from vrcsolve.qie import (
    FLIP,
    RELATIONS,
    Comparator,
    ParsedQuery,
    QueryRecord,
    ReasoningType,
    Role,
    extract_spatial_relation,
    flip,
    locate_relation,
    parse_question,
)
from vrcsolve.scenegen import COMPARATORS, LEADS, RELATION_PHRASES, SAME_AS_PHRASES, describe


def test_letter_below_question():
    q = parse_question(EXAMPLE_QUESTION)
    assert q.records == (QueryRecord(shape="T", role=Role.REFERENCE),)
    assert q.relation == "below"
    assert q.reasoning_type is ReasoningType.SPATIAL
    assert q.directly


def test_same_direction_question():
    q = parse_question("Please click on the number that matches the direction of the red cone")
    assert q.reasoning_type is ReasoningType.DIRECT
    assert q.reference == QueryRecord(shape="cone", color="red", role=Role.REFERENCE)
    assert q.target == QueryRecord(shape="number", role=Role.TARGET, same_as="toward")


def test_direct_attribute_question():
    q = parse_question("Click the red cone")
    assert q.records == (QueryRecord(shape="cone", color="red", role=Role.TARGET),)
    assert q.reasoning_type is ReasoningType.DIRECT
    assert q.relation is None and q.comparator is None


def test_comparative_question():
    q = parse_question("Please click on the largest sphere.")
    assert q.comparator is Comparator.LARGEST
    assert q.target == QueryRecord(shape="sphere", role=Role.TARGET)


def test_anchor_question():
    q = parse_question("Click the object with the same color as the cube to the left of the sphere")
    assert q.relation == "left_of"
    assert q.reference == QueryRecord(shape="sphere", role=Role.REFERENCE)
    assert q.anchor == QueryRecord(shape="cube", role=Role.ANCHOR)
    assert q.target.same_as == "color"


def test_wire_form_leaves_unspecified_fields_empty():
    rec = parse_question(EXAMPLE_QUESTION).to_wire()["records"][0]
    assert rec == {"ObjectData": {"shape": "T", "color": "", "orientation": ""}, "role": "Reference"}


@pytest.mark.parametrize(
    "text, expected",
    [
        ("Please click on the object directly below the letter 'T'", "below"),
        ("click the red cone", None),
        ("not to the right of the cube", "left_of"),
        ("the item not above the cube", "below"),
        ("click what is left of the cone", "left_of"),
    ],
)
def test_extract_spatial_relation(text, expected):
    assert extract_spatial_relation(text) == expected


def test_locate_relation_reports_character_span():
    text = "Click the object to the left of the cube"
    start, end, rel, aligned = locate_relation(text)
    assert text[start:end] == "to the left of"
    assert rel == "left_of" and not aligned


@pytest.mark.parametrize("text", ["", "   ", "hello world", "Click the blorp", "Click the"])
def test_unparseable_questions_fail_loudly(text):
    with pytest.raises(UnparseableQuestion):
        parse_question(text)


def test_parsed_query_invariants_are_enforced():
    with pytest.raises(ValueError):
        ParsedQuery(records=(QueryRecord(),), relation="below")
    with pytest.raises(ValueError):
        ParsedQuery(records=(QueryRecord(),), reasoning_type=ReasoningType.COMPARATIVE)


def test_flip_is_an_involution():
    for r in RELATIONS:
        assert flip(flip(r)) == r
        assert FLIP[r] != r


def test_parse_is_deterministic():
    text = "Please select the rightmost front-facing red object"
    assert parse_question(text) == parse_question(text)


# ---------------------------------------------------------------- template round trip

_onto = default_ontology()
_shapes = st.one_of(st.none(), st.sampled_from(sorted(_onto.shapes)), st.sampled_from(
    ["letter", "number", "3D object", "2D shape"]))
_colors = st.one_of(st.none(), st.sampled_from(sorted(_onto.colors)))
_towards = st.one_of(st.none(), st.sampled_from(sorted(_onto.towards)))


def _record(shape, color, toward, role, same_as=None):
    return QueryRecord(shape=shape, color=color, orientation=toward, role=role, same_as=same_as)


@st.composite
def descriptions(draw, allow_empty=True):
    d = (draw(_shapes), draw(_colors), draw(_towards))
    if not allow_empty and d == (None, None, None):
        d = ("cube", None, None)
    return d


@settings(max_examples=300)
@given(st.sampled_from(LEADS), descriptions(allow_empty=False))
def test_direct_round_trip(lead, d):
    q = parse_question(f"{lead} the {describe(*d)}.")
    assert q.reasoning_type is ReasoningType.DIRECT
    assert q.records == (_record(*d, Role.TARGET),)


@settings(max_examples=300)
@given(st.sampled_from(LEADS), st.sampled_from(COMPARATORS), descriptions())
def test_comparative_round_trip(lead, comp, d):
    q = parse_question(f"{lead} the {comp} {describe(*d)}.")
    assert q.comparator is Comparator(comp)
    assert q.records == (_record(*d, Role.TARGET),)


@settings(max_examples=300)
@given(st.sampled_from(LEADS), st.sampled_from(sorted(RELATION_PHRASES)), descriptions(), descriptions(False))
def test_spatial_round_trip(lead, key, target, ref):
    rel, directly = key
    q = parse_question(f"{lead} the {describe(*target)} {RELATION_PHRASES[key]} the {describe(*ref)}.")
    assert q.relation == rel and q.directly == directly
    assert q.reference == _record(*ref, Role.REFERENCE)
    expected_target = _record(*target, Role.TARGET)
    assert (q.target or QueryRecord(role=Role.TARGET)) == expected_target


@settings(max_examples=200)
@given(st.sampled_from(LEADS), st.sampled_from(sorted(SAME_AS_PHRASES)), descriptions(), descriptions(False))
def test_same_as_round_trip(lead, attr, target, ref):
    q = parse_question(f"{lead} the {describe(*target)} {SAME_AS_PHRASES[attr]} the {describe(*ref)}.")
    assert q.reference == _record(*ref, Role.REFERENCE)
    assert q.target == _record(*target, Role.TARGET, same_as=attr)
