import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest
from hypothesis import settings

from cutoffprobe import MonthStamp, TimeSpanCorpus, VersionedDoc

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


def make_corpus(texts: dict[tuple[str, str], str]) -> TimeSpanCorpus:
    """Corpus from {(topic, "YYYY-MM"): text}."""
    docs = [
        VersionedDoc(topic_id=t, month=MonthStamp.parse(m), text=text)
        for (t, m), text in texts.items()
    ]
    return TimeSpanCorpus.from_docs(docs)


@pytest.fixture
def tiny_corpus() -> TimeSpanCorpus:
    return make_corpus(
        {
            ("alpha", "2019-01"): "alpha january text",
            ("alpha", "2019-02"): "alpha february text",
            ("alpha", "2019-03"): "alpha march text",
            ("beta", "2019-01"): "beta january text",
            ("beta", "2019-02"): "beta february text",
            ("beta", "2019-03"): "beta march text",
        }
    )


class _StubState:
    """Mutable behavior shared between a stub server and its test."""

    def __init__(self):
        self.revisions: dict[str, list[tuple[str, str]]] = {}
        self.fail_first: dict[str, int] = {}
        self.error_titles: set[str] = set()
        self.requests: list[dict] = []


class _WikiHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output clean
        pass

    def do_GET(self):
        state: _StubState = self.server.state  # type: ignore[attr-defined]
        qs = parse_qs(urlparse(self.path).query)
        title = qs.get("titles", [""])[0]
        rvstart = qs.get("rvstart", [""])[0]
        state.requests.append({"title": title, "rvstart": rvstart})
        if state.fail_first.get(title, 0) > 0:
            state.fail_first[title] -= 1
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"transient backend failure")
            return
        if title in state.error_titles:
            body = {"error": {"code": "badtitle", "info": f"cannot query {title}"}}
        else:
            revs = [r for r in state.revisions.get(title, []) if r[0] <= rvstart]
            page: dict = {"pageid": 1, "title": title}
            if revs:
                ts, text = max(revs)
                page["revisions"] = [{"timestamp": ts, "slots": {"main": {"*": text}}}]
            body = {"query": {"pages": {"1": page}}}
        payload = json.dumps(body).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


@pytest.fixture
def wiki_stub():
    """(base_url, state) for a canned MediaWiki revisions endpoint."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _WikiHandler)
    server.state = _StubState()  # type: ignore[attr-defined]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}/w/api.php", server.state
    finally:
        server.shutdown()
        thread.join(timeout=5)


class _LogprobHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        server = self.server
        if self.path != "/v1/logprobs":
            self.send_response(404)
            self.end_headers()
            return
        if getattr(server, "fail_next", 0) > 0:
            server.fail_next -= 1
            self.send_response(503)
            self.end_headers()
            self.wfile.write(b"warming up")
            return
        length = int(self.headers.get("Content-Length", 0))
        req = json.loads(self.rfile.read(length))
        tokens = req["text"].split()[: req["max_tokens"]]
        # Deterministic toy scores: logprob depends only on the token length.
        logprobs = [-len(t) / 10 for t in tokens]
        if getattr(server, "drop_first_logprob", False):
            logprobs = logprobs[1:]
        payload = json.dumps({"tokens": tokens, "logprobs": logprobs}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


@pytest.fixture
def logprob_stub():
    """Base URL of a deterministic toy scoring service."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _LogprobHandler)
    server.fail_next = 0  # type: ignore[attr-defined]
    server.drop_first_logprob = False  # type: ignore[attr-defined]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", server
    finally:
        server.shutdown()
        thread.join(timeout=5)
