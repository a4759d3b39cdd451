"""Session lifecycle, capability negotiation, navigation, command transport."""

from __future__ import annotations

import random
import socket

import pytest

from cloudbridge import wire
from cloudbridge.errors import (
    InvalidUrlError,
    SessionClosedError,
    SessionNotCreatedError,
    TransportError,
)
from cloudbridge.mock import ServiceScenario
from cloudbridge.wire import SessionCapabilities, SessionState, WireCommand

from helpers import assert_strict_alternation, open_session, session_log_streams


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def _headless_args(cap_payload: dict) -> list[str]:
    return cap_payload.get("goog:chromeOptions", {}).get("args", [])


class TestNewSession:
    def test_headless_flag_lands_in_capability_payload(self, mock_server):
        session = open_session(mock_server, headless=True)
        assert session.is_open
        assert session.session_id
        recorded = mock_server.dump_state()["capabilities"]
        assert len(recorded) == 1
        assert "--headless" in _headless_args(recorded[0])
        wire.delete_session(session)

    def test_headed_payload_has_no_headless_argument(self, mock_server):
        session = open_session(mock_server, headless=False, implicit_wait_ms=0)
        recorded = mock_server.dump_state()["capabilities"][0]
        assert "--headless" not in _headless_args(recorded)
        detail = mock_server.dump_state()["sessions_detail"][session.session_id]
        assert detail["implicit_wait_ms"] == 0
        wire.delete_session(session)

    def test_implicit_wait_registered_server_side(self, mock_server):
        session = open_session(mock_server, implicit_wait_ms=1234)
        detail = mock_server.dump_state()["sessions_detail"][session.session_id]
        assert detail["implicit_wait_ms"] == 1234
        wire.delete_session(session)

    def test_unreachable_endpoint_is_connection_refused(self):
        endpoint = f"http://127.0.0.1:{_free_port()}"
        with pytest.raises(TransportError):
            wire.new_session(endpoint, SessionCapabilities())

    def test_rejected_capabilities_raise_session_not_created(self, mock_server):
        probe = open_session(mock_server)
        resp = wire.execute_raw(probe, "POST", "/session",
                                {"capabilities": {"alwaysMatch": {}}})
        assert resp.status == 500
        assert resp.error["error"] == "session not created"
        with pytest.raises(SessionNotCreatedError):
            resp.raise_for_error()
        wire.delete_session(probe)

    def test_capability_fidelity_round_trip(self, mock_server):
        for headless in (True, False):
            session = open_session(mock_server, headless=headless)
            recorded = mock_server.dump_state()["capabilities"][-1]
            assert ("--headless" in _headless_args(recorded)) == headless
            assert recorded["browserName"] == "mock"
            wire.delete_session(session)


class TestExecuteCommand:
    def test_status_endpoint_reports_ready(self, mock_server):
        session = open_session(mock_server)
        resp = wire.execute_command(session, WireCommand("GET", "/status"))
        assert resp.status == 200
        assert resp.value["ready"] is True
        wire.delete_session(session)

    def test_closed_session_rejected_before_any_network_io(self, mock_server):
        session = open_session(mock_server)
        wire.delete_session(session)
        before = len(mock_server.dump_state()["request_log"])
        with pytest.raises(SessionClosedError):
            wire.execute_command(session, WireCommand("GET", "/status"))
        assert len(mock_server.dump_state()["request_log"]) == before

    def test_unresolved_template_rejected_locally(self, mock_server):
        session = open_session(mock_server)
        before = len(mock_server.dump_state()["request_log"])
        cmd = WireCommand("GET", "/session/{session_id}/url")
        with pytest.raises(Exception):
            wire.execute_command(session, cmd)
        assert len(mock_server.dump_state()["request_log"]) == before
        resolved = cmd.resolve(session_id=session.session_id)
        wire.navigate(session, mock_server.base_url)
        assert wire.execute_command(session, resolved).status == 200
        wire.delete_session(session)

    def test_back_to_back_commands_do_not_pipeline(self, mock_server):
        session = open_session(mock_server)
        wire.navigate(session, mock_server.base_url)
        wire.current_url(session)
        log = mock_server.dump_state()["request_log"]
        stream = session_log_streams(log)[session.session_id]
        nav_response = next(e for e in stream
                            if e["kind"] == "response" and e["path"].endswith("/url")
                            and e["method"] == "POST")
        url_request = next(e for e in stream
                           if e["kind"] == "request" and e["method"] == "GET"
                           and e["path"].endswith("/url"))
        assert nav_response["ts_ns"] < url_request["ts_ns"]
        wire.delete_session(session)

    def test_randomized_commands_never_interleave(self, mock_server):
        session = open_session(mock_server)
        rng = random.Random(0xC0FFEE)
        commands = [
            WireCommand("GET", "/status"),
            WireCommand("GET", session.path("/url")),
            WireCommand("POST", session.path("/url"), {"url": mock_server.base_url}),
            WireCommand("POST", session.path("/timeouts"), {"implicit": 0}),
        ]
        for _ in range(40):
            wire.execute_command(session, rng.choice(commands))
        streams = session_log_streams(mock_server.dump_state()["request_log"])
        for entries in streams.values():
            assert_strict_alternation(entries)
        wire.delete_session(session)


class TestNavigate:
    def test_navigate_reaches_login_page(self, mock_server):
        session = open_session(mock_server)
        wire.navigate(session, mock_server.base_url)
        assert wire.current_url(session) == f"{mock_server.base_url}/login"
        wire.delete_session(session)

    def test_ssl_failure_lands_on_interstitial(self, server_factory):
        server = server_factory(ServiceScenario(ssl_fail=True))
        session = open_session(server)
        wire.navigate(session, server.base_url)
        detail = server.dump_state()["sessions_detail"][session.session_id]
        assert detail["page"]["name"] == "interstitial"
        assert set(detail["page"]["elements"]) == {"advanced", "proceed"}
        wire.delete_session(session)

    def test_invalid_url_rejected_with_no_state_change(self, mock_server):
        session = open_session(mock_server)
        wire.navigate(session, mock_server.base_url)
        before_log = len(mock_server.dump_state()["request_log"])
        with pytest.raises(InvalidUrlError):
            wire.navigate(session, "not a url at all")
        assert wire.current_url(session) == f"{mock_server.base_url}/login"
        log = mock_server.dump_state()["request_log"]
        # Only the current-url check hit the wire; the bad navigate never did.
        assert len(log) == before_log + 2
        wire.delete_session(session)


class TestDeleteSession:
    def test_delete_removes_session_from_mock_table(self, mock_server):
        session = open_session(mock_server)
        assert mock_server.dump_state()["sessions"] == [session.session_id]
        wire.delete_session(session)
        assert session.state is SessionState.CLOSED
        assert mock_server.dump_state()["sessions"] == []

    def test_second_delete_is_a_noop(self, mock_server):
        session = open_session(mock_server)
        wire.delete_session(session)
        before = len(mock_server.dump_state()["request_log"])
        wire.delete_session(session)
        assert len(mock_server.dump_state()["request_log"]) == before

    def test_transport_failure_still_closes_locally(self, server_factory):
        server = server_factory()
        session = open_session(server)
        server.shutdown()
        with pytest.raises(TransportError):
            wire.delete_session(session)
        assert session.state is SessionState.CLOSED

    def test_close_safety_no_network_after_delete(self, mock_server):
        session = open_session(mock_server)
        wire.navigate(session, mock_server.base_url)
        wire.delete_session(session)
        before = len(mock_server.dump_state()["request_log"])
        for call in (
            lambda: wire.navigate(session, mock_server.base_url),
            lambda: wire.current_url(session),
            lambda: wire.execute_command(session, WireCommand("GET", "/status")),
            lambda: wire.execute_raw(session, "PUT", "/mock/state"),
        ):
            with pytest.raises(SessionClosedError):
                call()
        assert len(mock_server.dump_state()["request_log"]) == before
