from __future__ import annotations

import json

import pytest

from vrcsolve.cli import main
from vrcsolve.config import GlobalConfig, load_config
from vrcsolve.errors import ConfigError
from vrcsolve.harness import dump_corpus, load_corpus


def test_solve_example(capsys):
    assert main(["solve", "--example", "--backend", "oracle"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["(442.2, 267.8)", "correct"]


def test_solve_challenge_file(tmp_path, capsys, example):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(example.to_wire()))
    assert main(["solve", "--challenge", str(path)]) == 0
    assert capsys.readouterr().out.startswith("(442.2, 267.8)")


def test_stage_error_exits_one(tmp_path, capsys, example):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(example.to_wire()))
    assert main(["solve", "--challenge", str(path), "--variant", "r2"]) == 1
    assert "BackendError" in capsys.readouterr().out


def test_usage_errors_exit_two(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["bench", "--no-such-flag"]) == 2
    assert main(["bench", "--delta", "-3", "--count", "2"]) == 2
    assert main(["solve", "--example", "--backend", "remote"]) == 2
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_missing_corpus_exits_two(tmp_path):
    assert main(["bench", "--in", str(tmp_path / "missing.jsonl")]) == 2


def test_bench_generated_corpus(capsys):
    assert main(["bench", "--profile", "netease", "--count", "12", "--seed", "3", "--group-by", "reasoning"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "# command=bench variant=r3"
    assert "# delta=80.0" in lines
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0] == "group,n,correct,accuracy_pct"
    assert body[-1] == "all,12,12,100.00"
    assert not any("latency" in ln for ln in lines)


def test_bench_from_scenegen_output(tmp_path, capsys):
    corpus = tmp_path / "clean.jsonl"
    assert main(["scenegen", "--profile", "dingxiang", "--count", "8", "--seed", "1", "--out", str(corpus)]) == 0
    assert len(load_corpus(corpus)) == 8
    assert main(["bench", "--variant", "r3", "--backend", "oracle", "--in", str(corpus), "--format", "text"]) == 0
    out = capsys.readouterr().out
    assert "100.00" in out.splitlines()[-1]


def test_bench_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["bench", "--count", "10", "--seed", "42", "--workers", "2", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_ablate_reports_structure_checks(capsys):
    assert main(["ablate", "--profile", "shumei", "--count", "4"]) == 0
    out = capsys.readouterr().out
    assert "# check r1 prompts carry no detection records: pass" in out
    assert "# check r2 prompts carry every detection record: pass" in out
    rows = {ln.split()[0]: ln.split()[1:] for ln in out.splitlines() if ln.startswith("r")}
    assert rows["r3"] == ["100.00"] and rows["r2"] == ["0.00"]


def test_scenegen_noise_and_render(tmp_path):
    out = tmp_path / "noisy.jsonl"
    render = tmp_path / "png"
    args = ["scenegen", "--profile", "vtt", "--count", "3", "--noise", "drop=0.5,corrupt=0.1",
            "--noise-seed", "4", "--qtypes", "Direct", "--render", str(render), "--out", str(out)]
    assert main(args) == 0
    assert all(c.reasoning == "Direct" for c in load_corpus(out))
    assert len(list(render.glob("*.png"))) == 3
    assert main(["scenegen", "--noise", "drop=2"]) == 2
    assert main(["scenegen", "--noise", "loud=0.1"]) == 2
    assert main(["scenegen", "--qtypes", "Riddle"]) == 2


def test_tsr_gen(tmp_path):
    src = tmp_path / "src.jsonl"
    assert main(["scenegen", "--count", "5", "--seed", "2", "--out", str(src)]) == 0
    out, skips = tmp_path / "v.jsonl", tmp_path / "skips.tsv"
    assert main(["tsr", "gen", "--axes", "s,r", "--seed", "1", "--in", str(src), "--out", str(out),
                 "--skips", str(skips)]) == 0
    variants = load_corpus(out)
    assert {v.meta["axes"] for v in variants} <= {"S", "R", "S+R"}
    assert len(variants) + len(skips.read_text().splitlines()) == 15
    assert all("~" in v.id for v in variants)


def test_report_writes_tables_and_figures(tmp_path, capsys):
    results = tmp_path / "r.jsonl"
    assert main(["bench", "--count", "6", "--results", str(results), "--with-latency"]) == 0
    capsys.readouterr()
    out_dir = tmp_path / "report"
    assert main(["report", "--in", str(results), "--out-dir", str(out_dir), "--group-by", "reasoning"]) == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == ["accuracy.png", "latency.png", "summary.csv", "summary.txt"]


def test_trace_logging(capsys):
    assert main(["solve", "--example", "--trace"]) == 0
    err = capsys.readouterr().err
    trace = json.loads(err.splitlines()[0])
    assert trace["trace"]["answer"] == [442.2, 267.8]


def test_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# probe settings\ndelta = 50\nseed=3\niou-threshold = 0.7\n")
    cfg = load_config(path, {"delta": 90.0, "seed": None})
    assert (cfg.delta, cfg.seed, cfg.iou_threshold) == (90.0, 3, 0.7)
    assert load_config(None, {}) == GlobalConfig()


@pytest.mark.parametrize("text", ["delta = -1\n", "bogus = 1\n", "just words\n", "workers = many\n"])
def test_bad_config_files(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path, {})


def test_config_file_reaches_the_run(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("delta = 20\n")
    # the T-to-cube window starts near 35 px, so a 20 px probe finds nothing and the fallback fails
    assert main(["solve", "--example", "--config", str(path)]) == 1
    assert "NoMatch" in capsys.readouterr().out
