from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from agentmt.agents import AgentSpec, pilot_agent_set
from agentmt.corpus import Document

SAMPLE_CONTRACT = (
    "This Agreement is entered into by the Parties.\n\n"
    "The Licensee shall pay USD 1,000,000 upon signature.\n"
)


class StubServer:
    """Chat-completions stub; ``plan`` is a list of (status, body) served in order, last repeating."""

    def __init__(self) -> None:
        self.plan: list[tuple[int, dict]] = [(200, {"choices": [{"message": {"content": "ok"}}]})]
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:
                length = int(self.headers.get("Content-Length", 0))
                stub.requests.append(json.loads(self.rfile.read(length)))
                stub.headers.append(dict(self.headers))
                status, body = stub.plan[min(len(stub.requests) - 1, len(stub.plan) - 1)]
                payload = json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args) -> None:
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}/v1"


@pytest.fixture
def stub_server():
    stub = StubServer()
    stub.thread.start()
    yield stub
    stub.server.shutdown()
    stub.server.server_close()


@pytest.fixture
def doc() -> Document:
    return Document.from_text(SAMPLE_CONTRACT, "en", "es", id="contract")


@pytest.fixture
def pilot_agents() -> list[AgentSpec]:
    return pilot_agent_set("Big13_05")


# --------------------------------------------------------------------------- acceptance report

_ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_configure(config) -> None:
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    ok = report.passed and _ACCEPTANCE.get(number, (title, True))[1]
    if report.when == "setup" and report.passed:
        return
    _ACCEPTANCE[number] = (title, ok)


def pytest_terminal_summary(terminalreporter) -> None:
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}")
