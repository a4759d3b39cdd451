"""REST pull client: fetch, auth modes, workspace writes."""

from __future__ import annotations

import logging
import random

import pytest
from hypothesis import given, settings, strategies as st

from cloudbridge.errors import NotFoundError, TransportError, UnauthorizedError
from cloudbridge.mock import (
    DEFAULT_ACCOUNT,
    DEFAULT_LAB,
    DEFAULT_PASSWORD,
    SEED_SOURCE,
    ServiceScenario,
)
from cloudbridge.pull import AuthContext, SourceDocument, fetch_program, write_workspace

from helpers import random_source


def _auth() -> AuthContext:
    return AuthContext(account=DEFAULT_ACCOUNT, password=DEFAULT_PASSWORD)


class TestFetchProgram:
    def test_fetches_seeded_skeleton_byte_exact(self, mock_server):
        doc = fetch_program(mock_server.base_url, _auth(), DEFAULT_LAB)
        assert doc.content == SEED_SOURCE
        assert doc.lab_id == DEFAULT_LAB
        assert doc.fetched_at is not None

    def test_unknown_lab_is_not_found(self, mock_server):
        with pytest.raises(NotFoundError):
            fetch_program(mock_server.base_url, _auth(), "zzz")

    def test_bad_credentials_are_unauthorized(self, mock_server):
        bad = AuthContext(account=DEFAULT_ACCOUNT, password="wrong")
        with pytest.raises(UnauthorizedError):
            fetch_program(mock_server.base_url, bad, DEFAULT_LAB)

    def test_session_token_header_is_accepted(self, server_factory):
        scenario = ServiceScenario(api_tokens={"tok-123": DEFAULT_ACCOUNT})
        server = server_factory(scenario)
        auth = AuthContext(account=DEFAULT_ACCOUNT, password="ignored", session_token="tok-123")
        assert fetch_program(server.base_url, auth, DEFAULT_LAB).content == SEED_SOURCE
        stale = AuthContext(account=DEFAULT_ACCOUNT, password="ignored", session_token="nope")
        with pytest.raises(UnauthorizedError):
            fetch_program(server.base_url, stale, DEFAULT_LAB)

    def test_dead_service_is_a_transport_error(self, server_factory):
        server = server_factory()
        url = server.base_url
        server.shutdown()
        with pytest.raises(TransportError):
            fetch_program(url, _auth(), DEFAULT_LAB)

    def test_stored_text_round_trips_with_tabs_crlf_unicode(self, server_factory):
        rng = random.Random(7)
        sources = [random_source(rng, min_len=0) for _ in range(30)]
        sources += ["", "\r\n", "\t", "汉\r\n字\t✨"]
        for text in sources:
            server = None
            scenario = ServiceScenario(program_store={DEFAULT_LAB: text})
            server = server_factory(scenario)
            doc = fetch_program(server.base_url, _auth(), DEFAULT_LAB)
            assert doc.content == text
            server.shutdown()

    def test_password_never_reaches_logs(self, mock_server, caplog):
        with caplog.at_level(logging.DEBUG):
            fetch_program(mock_server.base_url, _auth(), DEFAULT_LAB)
        assert DEFAULT_PASSWORD not in caplog.text
        assert DEFAULT_PASSWORD not in repr(_auth())


class TestWriteWorkspace:
    def test_writes_fresh_file(self, tmp_path):
        doc = SourceDocument(DEFAULT_LAB, "abc", fetched_at=None)
        target = tmp_path / "program.cu"
        write_workspace(doc, target)
        assert target.read_bytes() == b"abc"

    def test_overwrites_previous_content(self, tmp_path):
        target = tmp_path / "program.cu"
        target.write_text("old")
        write_workspace(SourceDocument(DEFAULT_LAB, "abc", None), target)
        assert target.read_bytes() == b"abc"

    def test_large_document_round_trips_byte_exact(self, tmp_path):
        rng = random.Random(11)
        content = "\n".join(random_source(rng, 10, 60) for _ in range(10_000))
        target = tmp_path / "big.cu"
        write_workspace(SourceDocument(DEFAULT_LAB, content, None), target)
        assert target.read_bytes() == content.encode("utf-8")

    def test_missing_parent_directory_is_an_io_error(self, tmp_path):
        doc = SourceDocument(DEFAULT_LAB, "abc", None)
        with pytest.raises(OSError):
            write_workspace(doc, tmp_path / "nope" / "program.cu")

    def test_no_temp_droppings_left_behind(self, tmp_path):
        target = tmp_path / "program.cu"
        write_workspace(SourceDocument(DEFAULT_LAB, "abc", None), target)
        assert [p.name for p in tmp_path.iterdir()] == ["program.cu"]

    @settings(max_examples=40, deadline=None)
    @given(st.text(alphabet=st.characters(codec="utf-8"), max_size=400))
    def test_any_utf8_text_round_trips(self, tmp_path_factory, content):
        tmp = tmp_path_factory.mktemp("ws")
        target = tmp / "file.txt"
        write_workspace(SourceDocument(DEFAULT_LAB, content, None), target)
        assert target.read_bytes().decode("utf-8") == content
