"""Command-line entry point: solve, bench, ablate, tsr, scenegen and report.

Exit codes: 0 on success, 1 when any challenge ended in a stage error,
2 on configuration, usage or corpus errors. Data goes to standard output
(or ``--out``); logs go to standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from .backends import make_backend
from .config import GlobalConfig, load_config
from .errors import ConfigError, MalformedRecord, VrcError
from .harness import Challenge, RunConfig, dump_corpus, load_corpus, run_many
from .report import dump_results, load_results, render_pivot, render_summary, write_report
from .scenegen import PROFILES, QTYPES, generate_corpus, profile, render_scene, challenge_objects
from .tsr import COMBINATIONS, TsrAxes, generate_corpus_variants

log = logging.getLogger("vrcsolve")

EXAMPLE_NAME = "blue_cube_case.json"


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--backend", choices=("oracle", "remote"))
    p.add_argument("--endpoint", help="HTTP endpoint for the remote backend")
    p.add_argument("--model")
    p.add_argument("--timeout", type=float)
    p.add_argument("--retries", type=int)
    p.add_argument("--max-in-flight", type=int, dest="max_in_flight")
    p.add_argument("--delta", type=float, help="probe offset in pixels")
    p.add_argument("--adaptive", action="store_const", const=True, help="scale the probe offset by box extent")
    p.add_argument("--beta", type=float, help="extent multiplier for the adaptive probe")
    p.add_argument("--iou-threshold", type=float, dest="iou_threshold")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--trace", action="store_true", help="log per-stage traces to standard error")


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="corpus", help="challenge corpus (JSON lines); generated when omitted")
    p.add_argument("--profile", default="vtt", choices=PROFILES, help="scene profile for a generated corpus")
    p.add_argument("--count", type=int, default=60, help="size of a generated corpus")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrcsolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one challenge")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--challenge", help="challenge file (a single JSON record)")
    src.add_argument("--example", action="store_true", help="use the bundled worked example")
    p.add_argument("--variant", choices=("r1", "r2", "r3"), default="r3")
    _add_run_flags(p)

    p = sub.add_parser("bench", help="run a corpus and print the accuracy table")
    p.add_argument("--variant", choices=("r1", "r2", "r3"), default="r3")
    _add_run_flags(p)
    _add_corpus_flags(p)
    p.add_argument("--group-by", default="platform", choices=("platform", "reasoning", "variant"))
    p.add_argument("--format", default="csv", choices=("csv", "text"))
    p.add_argument("--with-latency", action="store_true", help="include (non-deterministic) latency columns")
    p.add_argument("--results", help="also write per-challenge results (JSON lines) here")
    p.add_argument("--out", help="write the report here instead of standard output")

    p = sub.add_parser("ablate", help="run r1, r2 and r3 on one corpus")
    _add_run_flags(p)
    _add_corpus_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("tsr", help="question randomization")
    tsub = p.add_subparsers(dest="tsr_command", required=True)
    g = tsub.add_parser("gen", help="generate verified variants of a corpus")
    g.add_argument("--axes", default="s,r,i", help="axes to draw combinations from, e.g. s,r,i")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--in", dest="corpus", required=True)
    g.add_argument("--out", help="variant corpus (JSON lines)")
    g.add_argument("--skips", help="write the skip report here (default: standard error)")

    p = sub.add_parser("scenegen", help="generate a synthetic challenge corpus")
    p.add_argument("--profile", default="vtt", choices=PROFILES)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", default="", help="e.g. drop=0.2,corrupt=0.1")
    p.add_argument("--noise-seed", type=int, dest="noise_seed")
    p.add_argument("--qtypes", default="", help="comma-separated subset of Direct,Spatial,Comparative")
    p.add_argument("--wire", choices=("atomic", "compound"), default="atomic")
    p.add_argument("--render", help="directory for optional scene drawings")
    p.add_argument("--out")

    p = sub.add_parser("report", help="tables and figures from saved results")
    p.add_argument("--in", dest="results", required=True, help="results written by bench --results")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--group-by", default="platform", choices=("platform", "reasoning", "variant"))
    return parser


# ---------------------------------------------------------------- helpers

def _config(args: argparse.Namespace) -> GlobalConfig:
    keys = ("delta", "iou_threshold", "adaptive", "beta", "backend", "endpoint", "model", "timeout",
            "retries", "max_in_flight", "seed", "workers")
    flags = {k: getattr(args, k, None) for k in keys}
    flags["corpus"] = getattr(args, "corpus", None)
    return load_config(getattr(args, "config", None), flags)


def _run_config(cfg: GlobalConfig, variant: str) -> RunConfig:
    options = {}
    if cfg.backend == "remote":
        options = dict(endpoint=cfg.endpoint, model=cfg.model, timeout=cfg.timeout,
                       retries=cfg.retries, max_in_flight=cfg.max_in_flight)
    return RunConfig(
        variant=variant,
        backend=make_backend(cfg.backend, **options),
        delta=cfg.delta,
        seed=cfg.seed,
        iou_threshold=cfg.iou_threshold,
        adaptive=cfg.adaptive,
        beta=cfg.beta,
    )


def _corpus(cfg: GlobalConfig, args: argparse.Namespace) -> tuple[list[Challenge], list[str]]:
    if cfg.corpus:
        return load_corpus(cfg.corpus), [f"# corpus={cfg.corpus}"]
    if args.count < 1:
        raise ConfigError("--count must be at least 1")
    challenges = generate_corpus(profile(args.profile), args.count, seed=cfg.seed)
    return challenges, [f"# corpus=generated profile={args.profile} count={args.count}"]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)


def _log_traces(results, enabled: bool) -> None:
    if not enabled:
        return
    for r in results:
        log.info(json.dumps({"challenge": r.challenge_id, "trace": r.trace, "stage_times": r.stage_times}))


def _status(results) -> int:
    return 1 if any(r.error for r in results) else 0


# ---------------------------------------------------------------- subcommands

def cmd_solve(args) -> int:
    cfg = _config(args)
    if args.example:
        doc = json.loads(resources.files("vrcsolve").joinpath("data", EXAMPLE_NAME).read_text("utf-8"))
        challenges = [Challenge.from_wire(doc)]
    else:
        challenges = load_corpus(args.challenge)
    results = run_many(challenges, _run_config(cfg, args.variant), workers=cfg.workers)
    _log_traces(results, args.trace)
    for r in results:
        if r.answer is None:
            print(f"{r.challenge_id}: error {r.error}")
        else:
            prefix = f"{r.challenge_id}: " if len(results) > 1 else ""
            print(f"{prefix}({r.answer.x!r}, {r.answer.y!r})")
            print(f"{prefix}{'correct' if r.correct else 'incorrect'}")
    return _status(results)


def cmd_bench(args) -> int:
    cfg = _config(args)
    challenges, corpus_header = _corpus(cfg, args)
    results = run_many(challenges, _run_config(cfg, args.variant), workers=cfg.workers)
    _log_traces(results, args.trace)
    header = [f"# command=bench variant={args.variant}", *corpus_header, *cfg.header_lines()]
    _emit(render_summary(results, args.group_by, header, args.with_latency, args.format), args.out)
    if args.results:
        Path(args.results).write_text(dump_results(results, with_timing=args.with_latency), "utf-8")
    return _status(results)


def cmd_ablate(args) -> int:
    cfg = _config(args)
    challenges, corpus_header = _corpus(cfg, args)
    all_results = []
    checks = []
    for variant in ("r1", "r2", "r3"):
        results = run_many(challenges, _run_config(cfg, variant), workers=cfg.workers)
        _log_traces(results, args.trace)
        all_results.extend(results)
        if variant == "r1":
            ok = all(r.prompt_records == 0 for r in results)
            checks.append(f"# check r1 prompts carry no detection records: {'pass' if ok else 'FAIL'}")
        elif variant == "r2":
            ok = all(r.prompt_records == len(c.detections) for r, c in zip(results, challenges))
            checks.append(f"# check r2 prompts carry every detection record: {'pass' if ok else 'FAIL'}")
    header = ["# command=ablate", *corpus_header, *cfg.header_lines(), *checks]
    text = "".join(f"{h}\n" for h in header) + render_pivot(all_results, "variant", "platform")
    _emit(text, args.out)
    return 0


def cmd_tsr(args) -> int:
    allowed = TsrAxes.parse(args.axes)
    combos = [c for c in COMBINATIONS if all(getattr(allowed, a) for a in c.split("+"))]
    challenges = load_corpus(args.corpus)
    report = generate_corpus_variants(challenges, args.seed, combos)
    by_id = {c.id: c for c in challenges}
    _emit(dump_corpus(v.to_challenge(by_id[v.source_id]) for v in report.variants), args.out)
    skips = "".join(f"{s.source_id}\t{s.axes}\t{s.reason}\n" for s in report.skipped)
    if args.skips:
        Path(args.skips).write_text(skips, "utf-8")
    elif skips:
        sys.stderr.write(skips)
    log.warning("emitted %d variants, skipped %d", len(report.variants), len(report.skipped))
    return 0


def _parse_noise(text: str) -> dict[str, float]:
    out = {"drop": 0.0, "corrupt": 0.0}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ConfigError(f"bad noise setting {part!r}; expected key=value")
        key, value = (s.strip() for s in part.split("=", 1))
        if key not in out:
            raise ConfigError(f"unknown noise knob {key!r}")
        try:
            out[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"noise {key} must be a number") from exc
        if not 0 <= out[key] <= 1:
            raise ConfigError(f"noise {key} must lie in [0, 1]")
    return out


def cmd_scenegen(args) -> int:
    noise = _parse_noise(args.noise)
    qtypes = tuple(q.strip() for q in args.qtypes.split(",") if q.strip()) or None
    if qtypes and set(qtypes) - set(QTYPES):
        raise ConfigError(f"--qtypes must be drawn from {QTYPES}")
    if args.count < 1:
        raise ConfigError("--count must be at least 1")
    spec = profile(args.profile, drop_rate=noise["drop"], corrupt_rate=noise["corrupt"],
                   noise_seed=args.noise_seed, wire=args.wire)
    if qtypes:
        spec = replace(spec, qtypes=qtypes)
    corpus = generate_corpus(spec, args.count, seed=args.seed)
    _emit(dump_corpus(corpus), args.out)
    if args.render:
        Path(args.render).mkdir(parents=True, exist_ok=True)
        for ch in corpus:
            render_scene(challenge_objects(ch), ch.image_width, ch.image_height, str(Path(args.render) / f"{ch.id}.png"))
    return 0


def cmd_report(args) -> int:
    results = load_results(args.results)
    if not results:
        raise ConfigError(f"{args.results} holds no results")
    paths = write_report(results, args.out_dir, args.group_by, [f"# results={args.results}"])
    for p in paths:
        print(p)
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "bench": cmd_bench,
    "ablate": cmd_ablate,
    "tsr": cmd_tsr,
    "scenegen": cmd_scenegen,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if getattr(args, "trace", False) else logging.WARNING,
        format="%(message)s",
        force=True,
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MalformedRecord, ValueError, OSError) as exc:
        log.error("error: %s", exc)
        return 2
    except VrcError as exc:
        log.error("error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
