"""The bridge workflow: start, login, pull, push, exit.

A :class:`CloudBridge` moves through a five-phase lifecycle
(``uninitialized -> initialized -> logged_in -> closed``) with pull/push
allowed any number of times while logged in. Every operation validates its
phase first and mutates nothing when called out of order.

Push is the interesting one: the local file content is staged on the
remote session's paste buffer, then a single atomic action batch clicks
the editor, selects all, pastes, saves and triggers the compile-and-run
buttons. Completion is detected by polling a status marker element, and
the report text is assembled from configured output elements with the
page's code-echo region deliberately excluded, so a report never quotes
the program back at you.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO

from . import elements, pull as rest_pull, wire
from .config import RemoteConfig
from .elements import ActionSequence, ElementRef, Locator, WaitPolicy
from .errors import (
    BadCredentialsError,
    BridgeError,
    IllegalStateError,
    InterstitialBypassError,
    LabNotFoundError,
    ProtocolError,
    SessionCreationError,
    TransportError,
)
from .pull import AuthContext, SourceDocument
from .wire import Session, SessionCapabilities

logger = logging.getLogger(__name__)

DEFAULT_CHANNEL_NAME = "WebGPU"

# Marker the status element shows once a compile run has finished.
COMPLETION_MARKER = "DONE"

# Element locators used against the site; every entry can be overridden from
# configuration. The defaults match the bundled service simulator.
DEFAULT_XPATHS: dict[str, str] = {
    "login_username": "//input[@id='username']",
    "login_password": "//input[@id='password']",
    "login_submit": "//button[@id='login']",
    "login_error": "//*[@id='login-error']",
    "interstitial_advanced": "//a[@id='advanced-link']",
    "interstitial_proceed": "//a[@id='proceed-link']",
    "editor": "//*[@id='editor']",
    "compile_button": "//button[@id='compile']",
    "all_datasets_button": "//button[@id='all-tests']",
    "output_region": "//*[@id='output']",
    "code_echo": "//*[@id='code-echo']",
    "status_marker": "//*[@id='compile-status']",
    "result_marker": "//*[@id='compile-result']",
}


class WorkflowPhase(str, Enum):
    UNINITIALIZED = "uninitialized"
    INITIALIZED = "initialized"
    LOGGED_IN = "logged_in"
    CLOSED = "closed"


class CompileStatus(str, Enum):
    SUCCESS = "success"
    COMPILE_ERROR = "compile_error"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class CompileReport:
    """Filtered outcome of one push: status, message blocks, duration."""

    status: CompileStatus
    messages: tuple[str, ...]
    elapsed_ms: int

    def as_dict(self) -> dict:
        return {
            "status": self.status.value,
            "messages": list(self.messages),
            "elapsed_ms": self.elapsed_ms,
        }


class OutputChannel:
    """Append-only, order-preserving message sink with a registry by name."""

    def __init__(self, name: str, echo: IO[str] | None = None) -> None:
        self.name = name
        self.echo = echo
        self._lines: list[str] = []

    def append(self, text: str) -> None:
        self._lines.append(text)
        if self.echo is not None:
            self.echo.write(text + "\n")

    @property
    def lines(self) -> tuple[str, ...]:
        return tuple(self._lines)


_channels: dict[str, OutputChannel] = {}


def get_output_channel(name: str, echo: IO[str] | None = None) -> OutputChannel:
    """Return the channel registered under ``name``, creating it on first use."""
    channel = _channels.get(name)
    if channel is None:
        channel = OutputChannel(name, echo)
        _channels[name] = channel
    return channel


def reset_output_channels() -> None:
    _channels.clear()


class CloudBridge:
    """One bridge lifecycle against one configured remote."""

    def __init__(self, config: RemoteConfig) -> None:
        self.config = config
        self.phase = WorkflowPhase.UNINITIALIZED
        self.session: Session | None = None
        self.output: OutputChannel = get_output_channel(DEFAULT_CHANNEL_NAME)
        self._xpaths = {**DEFAULT_XPATHS, **config.xpath_overrides}

    # -- helpers -------------------------------------------------------------

    def _require(self, operation: str, *allowed: WorkflowPhase) -> None:
        if self.phase not in allowed:
            raise IllegalStateError(operation, self.phase.value)

    def _locator(self, name: str) -> Locator:
        return Locator.xpath(self._xpaths[name])

    def _wait(self) -> WaitPolicy:
        return WaitPolicy.explicit(
            self.config.command_timeout_ms, self.config.explicit_poll_ms
        )

    def _find(self, name: str) -> ElementRef:
        assert self.session is not None
        return elements.find_element(self.session, self._locator(name), self._wait())

    @property
    def _base_url(self) -> str:
        return self.config.base_url.rstrip("/")

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "CloudBridge":
        """Validate config, create the output channel, open the session."""
        self._require("start", WorkflowPhase.UNINITIALIZED)
        self.config.validate()
        self.output = get_output_channel(DEFAULT_CHANNEL_NAME)
        caps = SessionCapabilities(
            browser_name=self.config.browser,
            headless=self.config.headless,
            implicit_wait_ms=self.config.implicit_wait_ms,
        )
        try:
            session = wire.new_session(
                self.config.automation_endpoint, caps, self.config.command_timeout_ms
            )
        except BridgeError as exc:
            raise SessionCreationError(f"could not open automation session: {exc}") from exc
        self.session = session
        self.phase = WorkflowPhase.INITIALIZED
        self.output.append(f"[start] session {session.session_id} on {session.endpoint}")
        return self

    def login(self) -> None:
        """Reach the configured lab page as the configured account.

        Navigates to the main site, dismisses a certificate interstitial if
        one appears (exactly two link clicks), submits the credentials and
        opens the lab page.
        """
        self._require("login", WorkflowPhase.INITIALIZED)
        assert self.session is not None
        session = self.session

        wire.navigate(session, self._base_url)
        self._bypass_interstitial_if_present()

        username = self._find("login_username")
        elements.send_keys_to_element(session, username, self.config.account)
        password = self._find("login_password")
        elements.send_keys_to_element(session, password, self.config.password)
        elements.click(session, self._find("login_submit"))

        landed = wire.current_url(session)
        if landed.rstrip("/") == f"{self._base_url}/login":
            reason = self._read_optional_text("login_error") or "login rejected"
            raise BadCredentialsError(reason)

        lab_url = f"{self._base_url}/labs/{self.config.lab_id}"
        wire.navigate(session, lab_url)
        if wire.current_url(session).rstrip("/") != lab_url:
            raise LabNotFoundError(f"lab {self.config.lab_id!r} not reachable on the site")

        self.phase = WorkflowPhase.LOGGED_IN
        self.output.append(
            f"[login] account {self.config.account} on lab {self.config.lab_id}"
        )

    def _bypass_interstitial_if_present(self) -> None:
        assert self.session is not None
        advanced = elements.probe_element(self.session, self._locator("interstitial_advanced"))
        if advanced is None:
            return
        try:
            elements.click(self.session, advanced)
            proceed = elements.find_element(
                self.session, self._locator("interstitial_proceed"), self._wait()
            )
            elements.click(self.session, proceed)
        except BridgeError as exc:
            raise InterstitialBypassError(f"could not dismiss certificate warning: {exc}") from exc
        self.output.append("[login] certificate warning bypassed")

    def _read_optional_text(self, name: str) -> str:
        assert self.session is not None
        ref = elements.probe_element(self.session, self._locator(name))
        if ref is None:
            return ""
        return elements.get_text(self.session, ref)

    def pull(self) -> SourceDocument:
        """Fetch the server-side source and write it over the workspace file."""
        self._require("pull", WorkflowPhase.LOGGED_IN)
        auth = AuthContext(
            account=self.config.account,
            password=self.config.password,
            session_token=self.config.session_token,
        )
        doc = rest_pull.fetch_program(
            self._base_url, auth, self.config.lab_id, self.config.command_timeout_ms
        )
        rest_pull.write_workspace(doc, self.config.workspace_file)
        self.output.append(
            f"[pull] lab {doc.lab_id}: {len(doc.content.encode('utf-8'))} bytes"
            f" -> {self.config.workspace_file}"
        )
        return doc

    def push(self, source_path: str | Path) -> CompileReport:
        """Paste the local file into the remote editor, run it, fetch the report."""
        self._require("push", WorkflowPhase.LOGGED_IN)
        assert self.session is not None
        session = self.session
        started = time.monotonic()
        # Bytes, not text mode: universal newlines would quietly rewrite CRLF.
        source = Path(source_path).read_bytes().decode("utf-8")

        # Stage the text on the session's paste buffer, then replay the whole
        # gesture as one atomic batch: focus editor, select all, paste, save,
        # compile, run on all datasets.
        wire.execute_raw(
            session, "PUT", f"/mock/session/{session.session_id}/clipboard", {"text": source}
        ).raise_for_error()

        editor = self._find("editor")
        compile_button = self._find("compile_button")
        all_button = self._find("all_datasets_button")
        status_marker = self._find("status_marker")

        modifier = self.config.modifier_key
        train = (
            ActionSequence()
            .click(editor)
            .key_down(modifier)
            .type_text("a")
            .type_text("v")
            .type_text("s")
            .key_up(modifier)
            .click(compile_button)
            .click(all_button)
        )
        elements.perform_actions(session, train)

        status = self._poll_for_completion(status_marker, started)
        if status is None:
            elapsed_ms = int((time.monotonic() - started) * 1000)
            report = CompileReport(
                status=CompileStatus.TIMEOUT,
                messages=(
                    f"compile did not finish within {self.config.compile_timeout_ms} ms",
                ),
                elapsed_ms=elapsed_ms,
            )
        else:
            result_word = elements.get_text(session, self._find("result_marker"))
            try:
                outcome = CompileStatus(result_word)
            except ValueError:
                raise ProtocolError(f"unrecognized compile result {result_word!r}") from None
            output_text = elements.get_text(session, self._find("output_region"))
            blocks = tuple(b.strip("\n") for b in output_text.split("\n\n") if b.strip())
            report = CompileReport(
                status=outcome,
                messages=blocks,
                elapsed_ms=int((time.monotonic() - started) * 1000),
            )

        self.output.append(
            f"[push] lab {self.config.lab_id}: {report.status.value}"
            f" in {report.elapsed_ms} ms"
        )
        for block in report.messages:
            self.output.append(block)
        return report

    def _poll_for_completion(self, status_marker: ElementRef, started: float) -> str | None:
        """Poll the status element until the completion marker or timeout."""
        assert self.session is not None
        deadline = started + self.config.compile_timeout_ms / 1000.0
        while True:
            text = elements.get_text(self.session, status_marker)
            if text == COMPLETION_MARKER:
                return text
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            time.sleep(min(self.config.explicit_poll_ms / 1000.0, remaining))

    def exit(self) -> None:
        """Tear the session down. Legal in every phase; repeat calls no-op."""
        if self.phase is WorkflowPhase.CLOSED:
            return
        if self.session is not None:
            try:
                wire.delete_session(self.session)
            except TransportError as exc:
                self.output.append(f"[exit] session cleanup failed: {exc}")
            self.session = None
        self.phase = WorkflowPhase.CLOSED
        self.output.append("[exit] closed")


def start(config: RemoteConfig) -> CloudBridge:
    """Build a bridge from config and run its start phase."""
    return CloudBridge(config).start()


def run_cycle(config: RemoteConfig, source_path: str | Path) -> CompileReport:
    """start -> login -> push -> exit, tearing down even when a step fails."""
    bridge = CloudBridge(config)
    try:
        bridge.start()
        bridge.login()
        return bridge.push(source_path)
    finally:
        bridge.exit()
