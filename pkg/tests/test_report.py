from __future__ import annotations

from vrcsolve.harness import RunResult
from vrcsolve.policymaker import Answer
from vrcsolve.report import dump_results, load_results, render_pivot, render_summary, write_report


def _results():
    return [
        RunResult("a", "r3", Answer(1, 2), None, True, 0.5, platform="vtt", reasoning="Direct"),
        RunResult("b", "r3", None, "NoMatch: x", False, 0.7, platform="vtt", reasoning="Spatial"),
        RunResult("c", "r1", Answer(3, 4), None, False, 0.2, platform="geetest", reasoning="Direct"),
    ]


def test_summary_has_header_groups_and_total():
    text = render_summary(_results(), "platform", ["# seed=0"])
    assert text.splitlines() == [
        "# seed=0",
        "group,n,correct,accuracy_pct",
        "geetest,1,0,0.00",
        "vtt,2,1,50.00",
        "all,3,1,33.33",
    ]


def test_text_summary_with_latency():
    lines = render_summary(_results(), "reasoning", (), True, "text").splitlines()
    assert lines[0].split() == ["group", "n", "correct", "accuracy_pct", "latency_mean_s", "latency_sd_s"]
    assert lines[-1].split() == ["all", "3", "1", "33.33", "0.4667", "0.2517"]


def test_pivot():
    lines = render_pivot(_results()).splitlines()
    assert lines[0].split() == ["variant", "geetest", "vtt"]
    assert lines[2].split() == ["r1", "0.00", "-"]
    assert lines[3].split() == ["r3", "-", "50.00"]


def test_results_round_trip(tmp_path):
    path = tmp_path / "r.jsonl"
    path.write_text(dump_results(_results()))
    back = load_results(path)
    assert [r.to_wire() for r in back] == [r.to_wire() for r in _results()]


def test_figures_are_reproducible(tmp_path):
    a = write_report(_results(), tmp_path / "a", "platform")
    b = write_report(_results(), tmp_path / "b", "platform")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    assert [p.name for p in a] == ["summary.csv", "summary.txt", "accuracy.png", "latency.png"]
