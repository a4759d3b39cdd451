"""HTTP/JSON client for driving a remote browser-automation server.

Speaks the W3C WebDriver dialect over a small endpoint subset: session
lifecycle, capability negotiation, navigation, timeouts and raw command
transport. The transport is strictly blocking: a command returns only once
its HTTP exchange has fully completed, so a single session never has two
commands in flight and the server observes a clean request/response
alternation.

Commands are never retried here. A click or key dispatch is not idempotent,
so retry policy belongs to whoever orchestrates the session, not to the
transport.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any
from urllib.parse import urlsplit

import requests

from .errors import (
    CommandTimeoutError,
    InvalidUrlError,
    ProtocolError,
    SessionClosedError,
    TransportError,
    remote_error,
)

logger = logging.getLogger(__name__)

DEFAULT_COMMAND_TIMEOUT_MS = 30_000

# W3C element identifier key used in find-element responses and action origins.
ELEMENT_KEY = "element-6066-11e4-a52e-4f735466cecf"

_METHODS = ("GET", "POST", "DELETE")


class SessionState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True)
class SessionCapabilities:
    """Requested session configuration, serialized into the new-session payload.

    The serialized payload carries a ``--headless`` browser argument exactly
    when ``headless`` is true; a headed request contains no headless argument
    at all.
    """

    browser_name: str = "mock"
    headless: bool = False
    implicit_wait_ms: int = 0
    accept_insecure_certs: bool = False

    def __post_init__(self) -> None:
        if not self.browser_name:
            raise ValueError("browser_name must be non-empty")
        if self.implicit_wait_ms < 0:
            raise ValueError("implicit_wait_ms must be >= 0")

    def to_new_session_payload(self) -> dict[str, Any]:
        always_match: dict[str, Any] = {
            "browserName": self.browser_name,
            "acceptInsecureCerts": self.accept_insecure_certs,
            "timeouts": {"implicit": self.implicit_wait_ms},
        }
        if self.headless:
            always_match["goog:chromeOptions"] = {"args": ["--headless"]}
        return {"capabilities": {"alwaysMatch": always_match}}


@dataclass(frozen=True)
class WireCommand:
    """One protocol command: method, server-root-relative path, JSON body.

    Paths may be written as templates with ``{session_id}`` / ``{element_id}``
    placeholders and must be resolved before they are sent.
    """

    method: str
    path: str
    body: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if not self.path.startswith("/"):
            raise ValueError("path must start with '/'")

    def resolve(self, **params: str) -> "WireCommand":
        return WireCommand(self.method, self.path.format(**params), self.body)


@dataclass(frozen=True)
class WireResponse:
    """Outcome of one command: HTTP status plus either a value or an error.

    ``error`` is the remote error descriptor (``{"error", "message", ...}``)
    and is set exactly when the response carried one; otherwise ``value``
    holds the success payload (which may legitimately be ``None``).
    """

    status: int
    value: Any = None
    error: dict[str, Any] | None = None

    @property
    def is_error(self) -> bool:
        return self.error is not None

    def raise_for_error(self) -> "WireResponse":
        if self.error is not None:
            raise remote_error(
                str(self.error.get("error", "unknown error")),
                str(self.error.get("message", "")),
                self.status,
            )
        return self


class Session:
    """A live session against one automation server.

    Owns the HTTP connection and the locally tracked lifecycle state. A
    session is single-task: callers must not issue two operations on it
    concurrently (it may be handed between threads, just not shared).
    """

    def __init__(
        self,
        endpoint: str,
        session_id: str,
        capabilities: SessionCapabilities,
        command_timeout_ms: int = DEFAULT_COMMAND_TIMEOUT_MS,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.session_id = session_id
        self.capabilities = capabilities
        self.command_timeout_ms = command_timeout_ms
        self.state = SessionState.OPEN
        # Mirrors the implicit wait currently registered server-side; element
        # waits toggle it and need to know what to restore.
        self.registered_implicit_wait_ms = capabilities.implicit_wait_ms
        self._http = requests.Session()

    @property
    def is_open(self) -> bool:
        return self.state is SessionState.OPEN

    def path(self, suffix: str = "") -> str:
        return f"/session/{self.session_id}{suffix}"

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Session({self.session_id!r}, state={self.state.value})"


def _http_exchange(
    http: requests.Session,
    endpoint: str,
    method: str,
    path: str,
    body: dict[str, Any] | None,
    timeout_ms: int,
) -> WireResponse:
    """Perform one blocking HTTP exchange and parse the W3C response shape."""
    url = endpoint.rstrip("/") + path
    kwargs: dict[str, Any] = {"timeout": timeout_ms / 1000.0}
    if method in ("POST", "PUT"):
        kwargs["json"] = body if body is not None else {}
    try:
        raw = http.request(method, url, **kwargs)
    except requests.exceptions.Timeout as exc:
        raise CommandTimeoutError(f"{method} {path}: no answer within {timeout_ms} ms") from exc
    except requests.exceptions.RequestException as exc:
        raise TransportError(f"{method} {path}: {exc}") from exc

    try:
        payload = raw.json()
    except ValueError as exc:
        raise ProtocolError(f"{method} {path}: response is not JSON") from exc
    if not isinstance(payload, dict) or "value" not in payload:
        raise ProtocolError(f"{method} {path}: response lacks a top-level 'value' member")

    value = payload["value"]
    if raw.status_code >= 400:
        if not isinstance(value, dict) or "error" not in value:
            raise ProtocolError(f"{method} {path}: error response lacks an error descriptor")
        return WireResponse(status=raw.status_code, value=None, error=value)
    return WireResponse(status=raw.status_code, value=value, error=None)


def new_session(
    endpoint: str,
    caps: SessionCapabilities,
    command_timeout_ms: int = DEFAULT_COMMAND_TIMEOUT_MS,
) -> Session:
    """Open a session on the automation server and register its implicit wait.

    Raises ``TransportError`` when the server is not running and
    ``SessionNotCreatedError`` when it rejects the capabilities.
    """
    http = requests.Session()
    try:
        resp = _http_exchange(
            http, endpoint, "POST", "/session", caps.to_new_session_payload(), command_timeout_ms
        )
        resp.raise_for_error()
    except BaseException:
        http.close()
        raise
    value = resp.value
    if not isinstance(value, dict) or not value.get("sessionId"):
        http.close()
        raise ProtocolError("new-session response lacks a sessionId")
    session = Session(endpoint, str(value["sessionId"]), caps, command_timeout_ms)
    session._http = http
    logger.debug("session %s opened against %s", session.session_id, endpoint)
    return session


def execute_command(session: Session, cmd: WireCommand) -> WireResponse:
    """Send one command on the session and block until its response arrives.

    Rejects closed sessions and unresolved path templates locally, before any
    network I/O happens. Remote protocol errors are returned in the
    ``WireResponse``, not raised; transport failures raise.
    """
    if not session.is_open:
        raise SessionClosedError(f"session {session.session_id} is closed")
    if "{" in cmd.path or "}" in cmd.path:
        raise ProtocolError(f"command path {cmd.path!r} has unresolved placeholders")
    return _http_exchange(
        session._http, session.endpoint, cmd.method, cmd.path, cmd.body, session.command_timeout_ms
    )


def execute_raw(
    session: Session, method: str, path: str, body: dict[str, Any] | None = None
) -> WireResponse:
    """Escape hatch for non-core endpoints (e.g. service control routes).

    Same guards and blocking semantics as ``execute_command`` but accepts any
    HTTP method, which the core command set deliberately does not.
    """
    if not session.is_open:
        raise SessionClosedError(f"session {session.session_id} is closed")
    return _http_exchange(
        session._http, session.endpoint, method, path, body, session.command_timeout_ms
    )


def navigate(session: Session, url: str) -> None:
    """Point the remote browser at ``url`` and wait for load acknowledgement.

    Syntactically invalid URLs are rejected locally with no state change.
    The remote may land on a redirect target (or an interstitial page when
    the site has certificate trouble); callers decide what to do about that.
    """
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise InvalidUrlError(f"not an absolute http(s) URL: {url!r}")
    execute_command(
        session, WireCommand("POST", session.path("/url"), {"url": url})
    ).raise_for_error()


def current_url(session: Session) -> str:
    resp = execute_command(session, WireCommand("GET", session.path("/url"))).raise_for_error()
    if not isinstance(resp.value, str):
        raise ProtocolError("current-url response value is not a string")
    return resp.value


def set_implicit_wait(session: Session, implicit_ms: int) -> None:
    """Re-register the session-wide implicit wait on the server."""
    if implicit_ms < 0:
        raise ValueError("implicit_ms must be >= 0")
    execute_command(
        session, WireCommand("POST", session.path("/timeouts"), {"implicit": implicit_ms})
    ).raise_for_error()
    session.registered_implicit_wait_ms = implicit_ms


def delete_session(session: Session) -> None:
    """Close the session, releasing remote resources.

    Idempotent: a second call is a local no-op. A transport failure still
    transitions the local state to closed (there is nothing useful left to
    do with the session) and is then re-raised for the caller to log.
    """
    if not session.is_open:
        return
    try:
        resp = _http_exchange(
            session._http, session.endpoint, "DELETE", session.path(), None,
            session.command_timeout_ms,
        )
    except TransportError:
        session.state = SessionState.CLOSED
        session._http.close()
        raise
    session.state = SessionState.CLOSED
    session._http.close()
    if resp.is_error:
        # The remote already lost the session; deletion goals are met.
        logger.debug("delete_session: remote reported %s", resp.error)
