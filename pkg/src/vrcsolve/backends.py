"""Answer-only backends: the deterministic rule oracle and a generic HTTP adapter."""
from __future__ import annotations

import base64
import json
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .errors import BackendError, VrcError
from .integrator import CandidateSet
from .policymaker import Prompt, candidate_records, format_answer, resolve
from .qie import ParsedQuery


@dataclass(frozen=True)
class BackendRequest:
    prompt: Prompt
    candidates: CandidateSet | None = None
    query: ParsedQuery | None = None
    image: str | None = None


@dataclass(frozen=True)
class BackendReply:
    text: str
    attempts: int = 1
    first_latency: float = 0.0
    total_latency: float = 0.0


class Backend(Protocol):
    name: str

    def invoke(self, request: BackendRequest) -> BackendReply: ...


class OracleBackend:
    """Applies the explicit decision rules to the structured query; image-free."""

    name = "oracle"

    def invoke(self, request: BackendRequest) -> BackendReply:
        if request.query is None or request.candidates is None:
            raise BackendError("the oracle backend needs a parsed query and a candidate set")
        t0 = time.perf_counter()
        text = format_answer(resolve(request.query, request.candidates))
        dt = time.perf_counter() - t0
        return BackendReply(text, 1, dt, dt)


class RemoteBackend:
    """Single-pass text completion over HTTP.

    POSTs ``{"model", "prompt", "candidates", "image"}`` as JSON and reads the
    reply text from a ``text`` (or ``content``/``answer``) field, or the raw
    body when it is not JSON. Failed attempts are retried up to ``retries``
    times; concurrent calls are capped at ``max_in_flight``.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        timeout: float = 60.0,
        retries: int = 2,
        max_in_flight: int = 4,
        api_key: str | None = None,
        name: str = "remote",
    ):
        if timeout <= 0 or retries < 0 or max_in_flight < 1:
            raise ValueError("timeout > 0, retries >= 0 and max_in_flight >= 1 required")
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.api_key = api_key
        self.name = name
        self._gate = threading.BoundedSemaphore(max_in_flight)

    def _payload(self, request: BackendRequest) -> bytes:
        image = None
        if request.image:
            path = Path(request.image)
            image = base64.b64encode(path.read_bytes()).decode("ascii") if path.is_file() else request.image
        body = {
            "model": self.model,
            "prompt": request.prompt.body,
            "candidates": candidate_records(request.candidates) if request.candidates is not None else None,
            "image": image,
        }
        return json.dumps(body).encode("utf-8")

    def _post(self, data: bytes) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        req = urllib.request.Request(self.endpoint, data=data, headers=headers, method="POST")
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            raw = resp.read().decode("utf-8")
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError:
            return raw
        if isinstance(doc, dict):
            for key in ("text", "content", "answer"):
                if isinstance(doc.get(key), str):
                    return doc[key]
        if isinstance(doc, str):
            return doc
        raise BackendError(f"unrecognised response body: {raw[:200]!r}")

    def invoke(self, request: BackendRequest) -> BackendReply:
        data = self._payload(request)
        first = None
        start = time.perf_counter()
        last_exc: Exception | None = None
        with self._gate:
            for attempt in range(1, self.retries + 2):
                t0 = time.perf_counter()
                try:
                    text = self._post(data)
                except (urllib.error.URLError, TimeoutError, OSError, BackendError) as exc:
                    last_exc = exc
                    if first is None:
                        first = time.perf_counter() - t0
                    continue
                if first is None:
                    first = time.perf_counter() - t0
                return BackendReply(text, attempt, first, time.perf_counter() - start)
        raise BackendError(f"{self.name}: all {self.retries + 1} attempts failed: {last_exc}")


def make_backend(name: str, **options) -> Backend:
    if name == "oracle":
        return OracleBackend()
    if name == "remote":
        endpoint = options.pop("endpoint", None)
        if not endpoint:
            raise VrcError("the remote backend requires an endpoint")
        return RemoteBackend(endpoint, **options)
    raise VrcError(f"unknown backend {name!r}")
