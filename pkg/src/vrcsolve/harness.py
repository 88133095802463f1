"""End-to-end runs under the R1/R2/R3 configurations, with scoring and aggregation.

R1 sends the question (and image reference) only; R2 appends the unfiltered
detector output; R3 runs the full structured pipeline.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .backends import Backend, BackendRequest, OracleBackend
from .errors import ConfigError, MalformedRecord, VrcError
from .integrator import match, serialize_candidates
from .perception import DEFAULT_IOU_THRESHOLD, detections_to_records, merge_colocated, parse_detections
from .policymaker import (
    Answer,
    build_detector_prompt,
    build_minimal_prompt,
    build_prompt,
    parse_backend_answer,
)
from .qie import ReasoningType, parse_question
from .rpie import DEFAULT_DELTA, ProbeConfig, infer_relative

VARIANTS = ("r1", "r2", "r3")


@dataclass(frozen=True)
class GroundTruthRegion:
    left: float
    right: float
    top: float
    bottom: float

    def __post_init__(self):
        if not (0 <= self.left < self.right <= 1 and 0 <= self.top < self.bottom <= 1):
            raise MalformedRecord(f"invalid truth region {self}")

    def to_wire(self) -> dict:
        return {"left": self.left, "right": self.right, "top": self.top, "bottom": self.bottom}


def score(answer: Answer, truth: GroundTruthRegion, width: float, height: float) -> bool:
    """Normalise the click and test it against the region, all edges inclusive."""
    if width <= 0 or height <= 0:
        raise ValueError("image dimensions must be positive")
    xn, yn = answer.x / width, answer.y / height
    return truth.left <= xn <= truth.right and truth.top <= yn <= truth.bottom


@dataclass
class Challenge:
    id: str
    question: str
    detections: list
    image_width: float
    image_height: float
    truth: GroundTruthRegion
    platform: str | None = None
    image: str | None = None
    reasoning: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.image_width > 0 and self.image_height > 0):
            raise MalformedRecord(f"challenge {self.id}: image dimensions must be positive")

    def to_wire(self) -> dict:
        rec = {
            "id": self.id,
            "question": self.question,
            "detections": self.detections,
            "image_width": self.image_width,
            "image_height": self.image_height,
            "truth": self.truth.to_wire(),
            "platform": self.platform,
            "image": self.image,
            "reasoning": self.reasoning,
        }
        rec.update(self.meta)
        return rec

    @classmethod
    def from_wire(cls, rec: dict) -> "Challenge":
        try:
            known = {"id", "question", "detections", "image_width", "image_height", "truth", "platform", "image", "reasoning"}
            t = rec["truth"]
            return cls(
                id=str(rec["id"]),
                question=rec["question"],
                detections=rec["detections"],
                image_width=rec["image_width"],
                image_height=rec["image_height"],
                truth=GroundTruthRegion(t["left"], t["right"], t["top"], t["bottom"]),
                platform=rec.get("platform"),
                image=rec.get("image"),
                reasoning=rec.get("reasoning"),
                meta={k: v for k, v in rec.items() if k not in known},
            )
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(f"bad challenge record: {exc}") from exc


def load_corpus(path: str | Path) -> list[Challenge]:
    """Read a JSON-lines corpus, a JSON array, or a single challenge object."""
    text = Path(path).read_text("utf-8")
    stripped = text.lstrip()
    try:
        if stripped.startswith("["):
            docs = json.loads(text)
        elif stripped.startswith("{") and "\n{" not in stripped.rstrip():
            docs = [json.loads(text)]
        else:
            docs = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not a challenge corpus ({exc})") from exc
    return [Challenge.from_wire(d) for d in docs]


def dump_corpus(challenges: Iterable[Challenge]) -> str:
    return "".join(json.dumps(c.to_wire(), ensure_ascii=False) + "\n" for c in challenges)


@dataclass(frozen=True)
class RunConfig:
    variant: str = "r3"
    backend: Backend = field(default_factory=OracleBackend)
    delta: float = DEFAULT_DELTA
    seed: int = 0
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    adaptive: bool = False
    beta: float = 1.0
    include_image: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ConfigError(f"delta must be finite and positive, got {self.delta}")
        if not 0 < self.iou_threshold <= 1:
            raise ConfigError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")

    @property
    def probe(self) -> ProbeConfig:
        return ProbeConfig(self.delta, self.adaptive, self.beta)


@dataclass
class RunResult:
    challenge_id: str
    variant: str
    answer: Answer | None
    error: str | None
    correct: bool
    latency: float
    backend_first_latency: float = 0.0
    backend_total_latency: float = 0.0
    stage_times: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    prompt_records: int | None = None
    platform: str | None = None
    reasoning: str | None = None

    def to_wire(self, with_timing: bool = True) -> dict:
        rec = {
            "id": self.challenge_id,
            "variant": self.variant,
            "platform": self.platform,
            "reasoning": self.reasoning,
            "answer": [self.answer.x, self.answer.y] if self.answer else None,
            "error": self.error,
            "correct": self.correct,
            "prompt_records": self.prompt_records,
        }
        if with_timing:
            rec["latency"] = self.latency
            rec["backend_first_latency"] = self.backend_first_latency
            rec["backend_total_latency"] = self.backend_total_latency
            rec["stage_times"] = self.stage_times
        return rec

    @classmethod
    def from_wire(cls, rec: dict) -> "RunResult":
        ans = rec.get("answer")
        return cls(
            challenge_id=rec["id"],
            variant=rec.get("variant", "r3"),
            answer=Answer(*ans) if ans else None,
            error=rec.get("error"),
            correct=bool(rec["correct"]),
            latency=float(rec.get("latency", 0.0)),
            backend_first_latency=float(rec.get("backend_first_latency", 0.0)),
            backend_total_latency=float(rec.get("backend_total_latency", 0.0)),
            stage_times=rec.get("stage_times", {}),
            prompt_records=rec.get("prompt_records"),
            platform=rec.get("platform"),
            reasoning=rec.get("reasoning"),
        )


class _Stages:
    def __init__(self):
        self.times: dict[str, float] = {}
        self.trace: dict[str, Any] = {}

    def run(self, name: str, fn: Callable, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        self.times[name] = time.perf_counter() - t0
        return out


def run_pipeline(challenge: Challenge, cfg: RunConfig) -> RunResult:
    """Solve one challenge; stage errors are recorded and count as incorrect."""
    st = _Stages()
    t0 = time.perf_counter()
    answer = None
    error = None
    prompt_records = None
    reply = None
    try:
        dets = st.run("parse_detections", parse_detections, challenge.detections)
        dets = dets.with_size(challenge.image_width, challenge.image_height)
        st.trace["detections"] = detections_to_records(dets)
        image = challenge.image if (cfg.include_image or cfg.variant == "r1") else None
        if cfg.variant == "r3":
            merged = st.run("merge", merge_colocated, dets, cfg.iou_threshold)
            st.trace["merged"] = detections_to_records(merged)
            query = st.run("parse_question", parse_question, challenge.question)
            st.trace["query"] = query.to_wire()
            cands = st.run("match", match, merged, query)
            st.trace["candidates"] = json.loads(serialize_candidates(cands))
            if query.reasoning_type is ReasoningType.SPATIAL:
                cands = st.run("infer_relative", infer_relative, query, cands, merged, cfg.probe)
                st.trace["augmented"] = json.loads(serialize_candidates(cands, with_bbox=False))
            prompt = st.run("build_prompt", build_prompt, query, cands)
            request = BackendRequest(prompt, cands, query, image)
        elif cfg.variant == "r2":
            prompt = st.run("build_prompt", build_detector_prompt, challenge.question, dets.detections)
            request = BackendRequest(prompt, None, None, image)
        else:
            prompt = st.run("build_prompt", build_minimal_prompt, challenge.question)
            request = BackendRequest(prompt, None, None, image)
        prompt_records = prompt.record_count
        st.trace["prompt"] = prompt.body
        reply = st.run("backend", cfg.backend.invoke, request)
        st.trace["response"] = reply.text
        answer = st.run("parse_answer", parse_backend_answer, reply.text)
        st.trace["answer"] = [answer.x, answer.y]
    except VrcError as exc:
        error = f"{type(exc).__name__}: {exc}"
        st.trace["error"] = error
    correct = answer is not None and score(answer, challenge.truth, challenge.image_width, challenge.image_height)
    st.trace["correct"] = correct
    return RunResult(
        challenge_id=challenge.id,
        variant=cfg.variant,
        answer=answer,
        error=error,
        correct=correct,
        latency=time.perf_counter() - t0,
        backend_first_latency=reply.first_latency if reply else 0.0,
        backend_total_latency=reply.total_latency if reply else 0.0,
        stage_times=st.times,
        trace=st.trace,
        prompt_records=prompt_records,
        platform=challenge.platform,
        reasoning=challenge.reasoning,
    )


def run_many(challenges: Sequence[Challenge], cfg: RunConfig, workers: int = 1) -> list[RunResult]:
    """Run challenges (optionally concurrently); output order follows the input."""
    if workers <= 1:
        return [run_pipeline(c, cfg) for c in challenges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run_pipeline(c, cfg), challenges))


# ---------------------------------------------------------------- aggregation

@dataclass(frozen=True)
class SummaryRow:
    group: str
    n: int
    correct: int
    accuracy: float
    latency_mean: float
    latency_sd: float | None


def _group_fn(key: str | Callable[[RunResult], Any] | None) -> Callable[[RunResult], str]:
    if key is None:
        return lambda r: "all"
    if callable(key):
        return lambda r: str(key(r))
    return lambda r: str(getattr(r, key) if getattr(r, key) is not None else "-")


def aggregate(results: Sequence[RunResult], key: str | Callable | None = None) -> list[SummaryRow]:
    """Per-group accuracy (%) and latency mean / sample standard deviation."""
    if not results:
        raise ValueError("no results to aggregate")
    group_of = _group_fn(key)
    groups: dict[str, list[RunResult]] = {}
    for r in sorted(results, key=lambda r: r.challenge_id):
        groups.setdefault(group_of(r), []).append(r)
    rows = []
    for g in sorted(groups):
        rs = groups[g]
        lat = [r.latency for r in rs]
        n_ok = sum(r.correct for r in rs)
        rows.append(SummaryRow(
            group=g,
            n=len(rs),
            correct=n_ok,
            accuracy=100.0 * n_ok / len(rs),
            latency_mean=statistics.fmean(lat),
            latency_sd=statistics.stdev(lat) if len(lat) > 1 else None,
        ))
    return rows


def pivot_accuracy(results: Sequence[RunResult], row_key: str, col_key: str) -> tuple[list[str], list[str], dict]:
    """Accuracy matrix: rows (e.g. variant) by columns (e.g. platform)."""
    cells: dict[tuple[str, str], list[bool]] = {}
    for r in results:
        cells.setdefault((str(getattr(r, row_key)), str(getattr(r, col_key))), []).append(r.correct)
    rows = sorted({k[0] for k in cells})
    cols = sorted({k[1] for k in cells})
    table = {k: 100.0 * sum(v) / len(v) for k, v in cells.items()}
    return rows, cols, table


def _fmt(v: float | None, digits: int) -> str:
    return "-" if v is None else f"{v:.{digits}f}"


def summary_columns(with_latency: bool) -> list[str]:
    cols = ["group", "n", "correct", "accuracy_pct"]
    if with_latency:
        cols += ["latency_mean_s", "latency_sd_s"]
    return cols


def summary_cells(row: SummaryRow, with_latency: bool) -> list[str]:
    cells = [row.group, str(row.n), str(row.correct), f"{row.accuracy:.2f}"]
    if with_latency:
        cells += [_fmt(row.latency_mean, 4), _fmt(row.latency_sd, 4)]
    return cells


def summary_csv(rows: Sequence[SummaryRow], with_latency: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(summary_columns(with_latency))
    for r in rows:
        w.writerow(summary_cells(r, with_latency))
    return buf.getvalue()


def text_table(header: Sequence[str], body: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(str(c).rjust(w) if i else str(c).ljust(w) for i, (c, w) in enumerate(zip(row, widths))))
    return "\n".join(lines) + "\n"


def summary_text(rows: Sequence[SummaryRow], with_latency: bool = False) -> str:
    return text_table(summary_columns(with_latency), [summary_cells(r, with_latency) for r in rows])
