"""Shared fixtures: sample data and a scriptable fake generation server."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from types import SimpleNamespace

import pytest

from page.dataset import EarsCategory, RequirementRecord


@pytest.fixture
def tiny_records():
    """Six records, at least one per category plus one duplicate class."""
    rows = [
        ("The system shall notify the admin when the server restarts.",
         EarsCategory.EVENT_DRIVEN,
         "When the server restarts, the system shall notify the admin."),
        ("The system shall enable voice control where the device supports it.",
         EarsCategory.OPTIONAL,
         "Where the device supports it, the system shall enable voice control."),
        ("The system shall block new logins while maintenance mode is active.",
         EarsCategory.STATE_DRIVEN,
         "While maintenance mode is active, the system shall block new logins."),
        ("The system shall log all transactions.",
         EarsCategory.UBIQUITOUS,
         "The system shall always log all transactions."),
        ("The system shall display a warning if unauthorized access is detected.",
         EarsCategory.UNWANTED_BEHAVIOR,
         "If unauthorized access is detected, the system shall display a warning."),
        ("The application shall send a receipt when a purchase is completed.",
         EarsCategory.EVENT_DRIVEN,
         "When a purchase is completed, the application shall send a receipt."),
    ]
    return [RequirementRecord(i, nat, cat, ears)
            for i, (nat, cat, ears) in enumerate(rows)]


class _FakeHandler(BaseHTTPRequestHandler):
    """Replays scripted actions; records every request it saw.

    Script entries: ("ok", text) replies {"response": text};
    ("status", code, body) replies that HTTP status; ("raw", body)
    replies 200 with the body verbatim; ("drop",) closes the socket
    without answering. An empty script acts like ("ok", "fallback").
    """

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else None
        self.server.seen.append({"path": self.path, "body": body})
        action = (self.server.script.pop(0) if self.server.script
                  else ("ok", "fallback"))
        if action[0] == "drop":
            self.connection.close()
            return
        if action[0] == "status":
            data = action[2].encode()
            self.send_response(action[1])
        elif action[0] == "raw":
            data = action[1].encode()
            self.send_response(200)
        else:
            data = json.dumps({"response": action[1]}).encode()
            self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):
        pass


@pytest.fixture
def fake_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _FakeHandler)
    server.script = []
    server.seen = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield SimpleNamespace(
        url=f"http://127.0.0.1:{server.server_address[1]}",
        script=server.script,
        seen=server.seen,
    )
    server.shutdown()
    server.server_close()
