from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrcsolve.errors import NoValidAnchor
from vrcsolve.harness import Challenge, GroundTruthRegion
from vrcsolve.qie import extract_spatial_relation, parse_question
from vrcsolve.scenegen import generate_corpus, profile, truth_region
from vrcsolve.tsr import (
    COMBINATIONS,
    SynonymEntry,
    TsrAxes,
    add_indirection,
    apply_axes,
    default_synonyms,
    generate_corpus_variants,
    generate_variants,
    reword_relation,
    scene_objects,
    substitute_synonyms,
    verify_variant,
)

RED_ONLY = (SynonymEntry("red", "red", ("scarlet",)),)


@pytest.fixture(scope="module")
def corpus():
    return generate_corpus(profile("vtt"), 24, seed=5)


def test_red_becomes_scarlet():
    assert substitute_synonyms("click the red cone", 0, RED_ONLY) == "click the scarlet cone"


def test_text_without_entries_is_unchanged():
    assert substitute_synonyms("click the item", 3) == "click the item"


def test_quoted_literals_are_protected():
    assert "'T'" in substitute_synonyms("Click the object below the letter 'T'", 1)


def test_synonyms_keep_the_parse():
    for seed in range(30):
        text = "Please click on the front-facing red cone to the left of the blue cube"
        assert parse_question(substitute_synonyms(text, seed)).semantic_key() == parse_question(text).semantic_key()


def test_every_replacement_is_known_to_the_parser():
    for entry in default_synonyms():
        for rep in entry.replacements:
            base = parse_question(f"Click the {entry.surface}")
            assert parse_question(f"Click the {rep}").semantic_key() == base.semantic_key(), rep


def test_polarity_flip_is_reachable():
    outs = {reword_relation("Click the sphere to the left of the cube", s) for s in range(60)}
    assert "Click the sphere not to the right of the cube" in outs
    outs = {reword_relation("Click the sphere below the letter 'T'", s) for s in range(60)}
    assert "Click the sphere not above the letter 'T'" in outs


@pytest.mark.parametrize("text", [
    "Click the sphere to the left of the cube",
    "Please click on the object directly below the letter 'T'.",
    "Please tap on the cone above the red cube",
    "Click on the blue cube to the right of the sphere",
])
def test_reword_preserves_the_relation(text):
    for seed in range(40):
        out = reword_relation(text, seed)
        assert extract_spatial_relation(out) == extract_spatial_relation(text)
        assert parse_question(out).semantic_key() == parse_question(text).semantic_key()


def test_reword_without_relation_rewords_other_phrasing():
    out = reword_relation("Please tap on the smallest letter", 2)
    assert parse_question(out).semantic_key() == parse_question("Please tap on the smallest letter").semantic_key()


def test_axes_parse():
    assert TsrAxes.parse("s,r") == TsrAxes.parse("S+R") == TsrAxes(S=True, R=True)
    assert TsrAxes.parse("S+R+I").name == "S+R+I"
    with pytest.raises(ValueError):
        TsrAxes.parse("x")
    with pytest.raises(ValueError):
        TsrAxes()


def test_s_plus_r_equals_r_after_s(corpus):
    for ch in corpus:
        base = f"7:{ch.id}"
        expected = reword_relation(substitute_synonyms(ch.question, f"{base}:S"), f"{base}:R")
        assert apply_axes(ch, TsrAxes(S=True, R=True), 7) == expected


def test_variant_generation_is_deterministic(corpus):
    a = generate_corpus_variants(corpus, 9)
    b = generate_corpus_variants(corpus, 9)
    assert a.variants == b.variants and a.skipped == b.skipped


def test_every_variant_solves_to_the_source_truth(corpus):
    report = generate_corpus_variants(corpus, 1)
    assert len(report.variants) + len(report.skipped) == 6 * len(corpus)
    for v in report.variants:
        src = next(c for c in corpus if c.id == v.source_id)
        assert v.text != src.question
        assert verify_variant(src, v.text)
        assert v.to_challenge(src).truth == src.truth


def test_indirection_routes_through_an_anchor(corpus):
    made = 0
    for ch in corpus:
        try:
            text = add_indirection(ch, 0)
        except NoValidAnchor:
            continue
        made += 1
        q = parse_question(text)
        assert q.target.same_as in ("color", "toward", "shape")
        assert verify_variant(ch, text)
    assert made >= len(corpus) // 2


def test_unique_objects_have_no_anchor():
    # Two objects sharing no attribute: nothing can point at the answer indirectly.
    objects = [
        {"shape": "cube", "color": "red", "toward": "front", "bbox": [10, 10, 60, 60]},
        {"shape": "T", "color": "blue", "toward": "side", "bbox": [200, 10, 250, 60]},
    ]
    ch = Challenge("solo", "Click the red cube", [], 400, 200,
                   GroundTruthRegion(10 / 400, 60 / 400, 10 / 200, 60 / 200), meta={"objects": objects})
    with pytest.raises(NoValidAnchor):
        add_indirection(ch, 0)
    rep = generate_variants(ch, 0)
    assert {s.axes for s in rep.skipped} >= {"I", "S+I", "S+R+I"}


def test_scene_objects_fall_back_to_merged_detections(corpus):
    ch = corpus[0]
    bare = Challenge(ch.id, ch.question, ch.detections, ch.image_width, ch.image_height, ch.truth)
    objs = scene_objects(bare)
    assert sorted(o.bbox.as_list() for o in objs) == sorted(o.bbox.as_list() for o in scene_objects(ch))


def test_hundred_scenes_give_at_most_six_hundred_variants():
    chs = generate_corpus(profile("vtt"), 100, seed=0)
    rep = generate_corpus_variants(chs, 0)
    assert len(rep.variants) <= 600
    assert len(rep.variants) + len(rep.skipped) == 600
    assert {v.axes.name for v in rep.variants} == set(COMBINATIONS)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_synonym_substitution_is_seed_deterministic(seed):
    text = "Please click on the largest red cone"
    assert substitute_synonyms(text, seed) == substitute_synonyms(text, seed)
