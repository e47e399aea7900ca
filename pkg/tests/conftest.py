from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from langacq import bundled_language

FIXTURES = Path(__file__).parent / "fixtures"

# Seeds whose first draw lands on a given Tinkatongue conversation (1-based).
SEED_CONV_1 = 31
SEED_CONV_3 = 32
SEED_CONV_25 = 23


@pytest.fixture(scope="session")
def tinka():
    return bundled_language("tinkatongue")


@pytest.fixture(scope="session")
def zinga():
    return bundled_language("zingaloom")


class StubServer:
    """Local HTTP server replaying canned (status, body) responses and recording requests."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers.get("content-length", 0)))
                stub.requests.append({"path": self.path, "headers": dict(self.headers), "body": body})
                status, payload = stub.responses.pop(0) if stub.responses else (500, {"error": "exhausted"})
                data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("content-type", "application/json")
                self.send_header("content-length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}"
        self._thread = threading.Thread(target=self.httpd.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_server():
    return StubServer
