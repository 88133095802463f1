from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from vrcsolve.backends import BackendRequest, OracleBackend, RemoteBackend, make_backend
from vrcsolve.errors import BackendError, VrcError
from vrcsolve.policymaker import build_minimal_prompt, parse_backend_answer


class _Server:
    """Local endpoint that fails the first ``failures`` requests, then answers."""

    def __init__(self, failures: int = 0, body: str = '{"text": "Answer: (12.5, 40)"}'):
        self.failures = failures
        self.body = body
        self.requests: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                doc = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                outer.requests.append({"body": doc, "auth": self.headers.get("Authorization")})
                if len(outer.requests) <= outer.failures:
                    self.send_response(503)
                    self.end_headers()
                    return
                payload = outer.body.encode()
                self.send_response(200)
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}/complete"
        threading.Thread(target=self.httpd.serve_forever, daemon=True).start()

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def server_factory():
    made = []

    def make(**kw):
        s = _Server(**kw)
        made.append(s)
        return s

    yield make
    for s in made:
        s.close()


def _request() -> BackendRequest:
    return BackendRequest(build_minimal_prompt("Click the red cone"))


def test_remote_backend_posts_the_prompt(server_factory):
    srv = server_factory()
    reply = RemoteBackend(srv.url, model="m1", api_key="k").invoke(_request())
    assert parse_backend_answer(reply.text).as_point().as_list() == [12.5, 40.0]
    assert reply.attempts == 1
    assert 0 <= reply.first_latency <= reply.total_latency
    sent = srv.requests[0]
    assert sent["body"]["model"] == "m1" and "Click the red cone" in sent["body"]["prompt"]
    assert sent["body"]["candidates"] is None and sent["body"]["image"] is None
    assert sent["auth"] == "Bearer k"


def test_remote_backend_retries(server_factory):
    srv = server_factory(failures=2)
    reply = RemoteBackend(srv.url, retries=2, timeout=5).invoke(_request())
    assert reply.attempts == 3 and len(srv.requests) == 3


def test_remote_backend_gives_up(server_factory):
    srv = server_factory(failures=5)
    with pytest.raises(BackendError):
        RemoteBackend(srv.url, retries=1, timeout=5).invoke(_request())
    assert len(srv.requests) == 2


def test_plain_text_body(server_factory):
    srv = server_factory(body="(1, 2)")
    assert RemoteBackend(srv.url).invoke(_request()).text == "(1, 2)"


def test_oracle_needs_structure():
    with pytest.raises(BackendError):
        OracleBackend().invoke(_request())


def test_make_backend():
    assert make_backend("oracle").name == "oracle"
    with pytest.raises(VrcError):
        make_backend("remote")
    with pytest.raises(VrcError):
        make_backend("nope")


def test_remote_rejects_bad_limits():
    with pytest.raises(ValueError):
        RemoteBackend("http://x", max_in_flight=0)
