from __future__ import annotations

import pytest

from cloudbridge.mock import MockServer, ServiceScenario, default_scenario, serve
from cloudbridge.workflow import reset_output_channels


@pytest.fixture()
def mock_server():
    server = serve(default_scenario())
    yield server
    server.shutdown()


@pytest.fixture()
def server_factory():
    servers: list[MockServer] = []

    def _make(scenario: ServiceScenario | None = None) -> MockServer:
        server = serve(scenario or default_scenario())
        servers.append(server)
        return server

    yield _make
    for server in servers:
        server.shutdown()


@pytest.fixture(autouse=True)
def _fresh_channels():
    reset_output_channels()
    yield
    reset_output_channels()


@pytest.fixture(autouse=True)
def _no_ambient_password(monkeypatch):
    monkeypatch.delenv("CLOUDBRIDGE_PASSWORD", raising=False)


# ---------------------------------------------------------------------------
# Acceptance reporting: one pass/fail line per criterion at the end of the run.
# ---------------------------------------------------------------------------

_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance_results.append((name, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in _acceptance_results:
        terminalreporter.write_line(f"  [{outcome}] {name}")
