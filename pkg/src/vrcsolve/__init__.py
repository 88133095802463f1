"""Structured-perception solver and evaluation toolkit for visual reasoning CAPTCHAs."""
from __future__ import annotations

from .harness import Challenge, GroundTruthRegion, RunConfig, RunResult, aggregate, run_pipeline, score
from .integrator import match
from .perception import merge_colocated, parse_detections, serialize_detections
from .policymaker import build_prompt, parse_backend_answer, resolve
from .qie import parse_question
from .rpie import infer_relative

__version__ = "0.1.0"

__all__ = [
    "Challenge",
    "GroundTruthRegion",
    "RunConfig",
    "RunResult",
    "aggregate",
    "build_prompt",
    "infer_relative",
    "match",
    "merge_colocated",
    "parse_backend_answer",
    "parse_detections",
    "parse_question",
    "resolve",
    "run_pipeline",
    "score",
    "serialize_detections",
]
