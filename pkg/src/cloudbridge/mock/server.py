"""HTTP face of the simulated service.

One server answers three surfaces:

* the automation wire protocol under ``/session`` (plus ``GET /status``),
  speaking W3C-shaped JSON (every response body has a top-level ``value``);
* the site's REST pull endpoint ``GET /api/labs/{lab}/program``;
* control routes under ``/mock/`` (scenario load, state dump, per-session
  clipboard) that exist only for tests and tooling.

Protocol and REST traffic is recorded in an append-only request log with
strictly increasing timestamps; a response entry is always appended before
its bytes hit the socket, so log order proves request/response sequencing.
Control traffic is deliberately not logged. Bodies are stored as digests,
never verbatim, so the log can be dumped without leaking credentials.
"""

from __future__ import annotations

import base64
import copy
import hashlib
import json
import logging
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from ..errors import BindFailureError
from .machine import BrowserSessionState, SiteError, SiteModel
from .model import ServiceScenario, default_scenario

logger = logging.getLogger(__name__)

# W3C element identifier key (duplicated from the client on purpose: the mock
# is the oracle and must not borrow the implementation's constants).
ELEMENT_KEY = "element-6066-11e4-a52e-4f735466cecf"

_KEYCODE_TO_NAME = {
    "": "META",
    "": "CONTROL",
    "": "SHIFT",
    "": "ALT",
    "": "ENTER",
}

_ERROR_HTTP_STATUS = {
    "invalid argument": 400,
    "invalid element state": 400,
    "element not interactable": 400,
    "no such element": 404,
    "stale element reference": 404,
    "invalid session id": 404,
    "unknown command": 404,
    "session not created": 500,
    "unknown error": 500,
}


def _digest(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()[:16]


class _ServiceState:
    """Mutable server state; every access happens under ``lock``."""

    def __init__(self, scenario: ServiceScenario, base_url: str) -> None:
        self.lock = threading.RLock()
        self.reset(scenario, base_url)

    def reset(self, scenario: ServiceScenario, base_url: str) -> None:
        self.scenario = scenario
        self.site = SiteModel(scenario, base_url)
        self.sessions: dict[str, BrowserSessionState] = {}
        self.session_counter = 0
        self.request_log: list[dict[str, Any]] = []
        self.actions_log: list[dict[str, Any]] = []
        self.capabilities_log: list[dict[str, Any]] = []
        self._last_ts_ns = 0

    def next_ts_ns(self) -> int:
        ts = time.monotonic_ns()
        if ts <= self._last_ts_ns:
            ts = self._last_ts_ns + 1
        self._last_ts_ns = ts
        return ts

    def log_request(self, method: str, path: str, body: bytes, session: str | None) -> None:
        self.request_log.append({
            "ts_ns": self.next_ts_ns(),
            "kind": "request",
            "method": method,
            "path": path,
            "session": session,
            "digest": _digest(body),
        })

    def log_response(self, method: str, path: str, status: int, body: bytes,
                     session: str | None) -> None:
        self.request_log.append({
            "ts_ns": self.next_ts_ns(),
            "kind": "response",
            "method": method,
            "path": path,
            "status": status,
            "session": session,
            "digest": _digest(body),
        })


def _decode_actions(payload: Any) -> list[dict[str, Any]]:
    """Decode a W3C actions payload into the serial step list it encodes.

    The dialect accepted here is one key source plus one pointer source,
    tick-aligned so that every tick carries at most one non-pause action;
    that is exactly how an ordered 'everything in one request' batch is
    expressed with two input sources.
    """
    if not isinstance(payload, dict) or not isinstance(payload.get("actions"), list):
        raise SiteError("invalid argument", "actions payload must contain an actions list")
    key_items: list[dict[str, Any]] = []
    pointer_items: list[dict[str, Any]] = []
    seen_key = seen_pointer = False
    for source in payload["actions"]:
        if not isinstance(source, dict):
            raise SiteError("invalid argument", "action source must be an object")
        stype = source.get("type")
        items = source.get("actions", [])
        if stype == "key":
            if seen_key:
                raise SiteError("invalid argument", "more than one key input source")
            seen_key, key_items = True, list(items)
        elif stype == "pointer":
            if seen_pointer:
                raise SiteError("invalid argument", "more than one pointer input source")
            seen_pointer, pointer_items = True, list(items)
        elif stype == "none":
            continue
        else:
            raise SiteError("invalid argument", f"unknown input source type {stype!r}")

    steps: list[dict[str, Any]] = []
    move_target: str | None = None
    pointer_down = False
    pending_char: str | None = None

    def non_pause(item: dict[str, Any] | None) -> dict[str, Any] | None:
        if item is None or item.get("type") == "pause":
            return None
        return item

    ticks = max(len(key_items), len(pointer_items))
    for i in range(ticks):
        key_item = non_pause(key_items[i] if i < len(key_items) else None)
        ptr_item = non_pause(pointer_items[i] if i < len(pointer_items) else None)
        if key_item is not None and ptr_item is not None:
            raise SiteError("invalid argument", "tick carries two simultaneous actions")

        if ptr_item is not None:
            ptype = ptr_item.get("type")
            if ptype == "pointerMove":
                origin = ptr_item.get("origin")
                if not isinstance(origin, dict) or ELEMENT_KEY not in origin:
                    raise SiteError("invalid argument", "pointerMove origin must be an element")
                move_target = str(origin[ELEMENT_KEY])
            elif ptype == "pointerDown":
                if move_target is None:
                    raise SiteError("invalid argument", "pointerDown with no prior pointerMove")
                pointer_down = True
            elif ptype == "pointerUp":
                if not pointer_down or move_target is None:
                    raise SiteError("invalid argument", "pointerUp with no pressed pointer")
                steps.append({"action": "pointer_click", "target": move_target})
                pointer_down = False
            else:
                raise SiteError("invalid argument", f"unknown pointer action {ptype!r}")
            continue

        if key_item is not None:
            ktype = key_item.get("type")
            value = key_item.get("value")
            if not isinstance(value, str) or not value:
                raise SiteError("invalid argument", "key action lacks a value")
            name = _KEYCODE_TO_NAME.get(value)
            if ktype == "keyDown":
                if pending_char is not None:
                    raise SiteError("invalid argument", "keyDown while a character is held")
                if name in ("META", "CONTROL", "SHIFT", "ALT"):
                    steps.append({"action": "key_down", "key": name})
                elif name == "ENTER":
                    pending_char = "\n"
                elif len(value) == 1:
                    pending_char = value
                else:
                    raise SiteError("invalid argument", f"unknown key value {value!r}")
            elif ktype == "keyUp":
                if name in ("META", "CONTROL", "SHIFT", "ALT"):
                    if pending_char is not None:
                        raise SiteError("invalid argument", "modifier keyUp while a character is held")
                    steps.append({"action": "key_up", "key": name})
                else:
                    char = "\n" if name == "ENTER" else value
                    if pending_char != char:
                        raise SiteError("invalid argument", "keyUp does not match held character")
                    steps.append({"action": "type_text", "text": char})
                    pending_char = None
            else:
                raise SiteError("invalid argument", f"unknown key action {ktype!r}")

    if pending_char is not None:
        raise SiteError("invalid argument", "character key never released")
    if pointer_down:
        raise SiteError("invalid argument", "pointer never released")
    return steps


_ROUTES: list[tuple[str, re.Pattern[str], str]] = [
    ("GET", re.compile(r"^/status$"), "status"),
    ("POST", re.compile(r"^/session$"), "new_session"),
    ("DELETE", re.compile(r"^/session/([^/]+)$"), "delete_session"),
    ("POST", re.compile(r"^/session/([^/]+)/url$"), "navigate"),
    ("GET", re.compile(r"^/session/([^/]+)/url$"), "get_url"),
    ("POST", re.compile(r"^/session/([^/]+)/timeouts$"), "set_timeouts"),
    ("POST", re.compile(r"^/session/([^/]+)/element$"), "find_element"),
    ("POST", re.compile(r"^/session/([^/]+)/element/([^/]+)/click$"), "click"),
    ("POST", re.compile(r"^/session/([^/]+)/element/([^/]+)/value$"), "send_keys"),
    ("GET", re.compile(r"^/session/([^/]+)/element/([^/]+)/text$"), "get_text"),
    ("POST", re.compile(r"^/session/([^/]+)/actions$"), "actions"),
    ("GET", re.compile(r"^/api/labs/([^/]+)/program$"), "rest_pull"),
    ("PUT", re.compile(r"^/mock/session/([^/]+)/clipboard$"), "mock_clipboard"),
    ("GET", re.compile(r"^/mock/state$"), "mock_state"),
    ("POST", re.compile(r"^/mock/scenario$"), "mock_scenario"),
]


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "MockHTTPServer"

    # Silence the default per-request stderr chatter.
    def log_message(self, fmt: str, *args: Any) -> None:  # pragma: no cover
        logger.debug("mock http: " + fmt, *args)

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_DELETE(self) -> None:
        self._dispatch("DELETE")

    def do_PUT(self) -> None:
        self._dispatch("PUT")

    # -- plumbing -----------------------------------------------------------

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _write_json(self, status: int, obj: Any, *, method: str, path: str,
                    session: str | None, logged: bool) -> None:
        body = json.dumps(obj).encode("utf-8")
        state = self.server.state
        if logged:
            with state.lock:
                state.log_response(method, path, status, body, session)
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        # One connection per exchange: a stopped server must actually be gone,
        # not lingering behind a kept-alive handler thread.
        self.send_header("Connection", "close")
        self.close_connection = True
        self.end_headers()
        self.wfile.write(body)

    def _dispatch(self, method: str) -> None:
        path = self.path.split("?", 1)[0]
        body_bytes = self._read_body()
        state = self.server.state

        handler_name, groups = None, ()
        for route_method, pattern, name in _ROUTES:
            if route_method != method:
                continue
            match = pattern.match(path)
            if match:
                handler_name, groups = name, match.groups()
                break

        logged = not path.startswith("/mock/")
        session_hint = groups[0] if groups and path.startswith("/session/") else None
        if logged:
            with state.lock:
                state.log_request(method, path, body_bytes, session_hint)

        if handler_name is None:
            self._write_json(
                404,
                {"value": {"error": "unknown command", "message": f"{method} {path}", "stacktrace": ""}},
                method=method, path=path, session=session_hint, logged=logged,
            )
            return

        try:
            body = json.loads(body_bytes.decode("utf-8")) if body_bytes else {}
        except ValueError:
            body = None

        try:
            status, payload = getattr(self, f"_op_{handler_name}")(groups, body)
        except SiteError as exc:
            status = _ERROR_HTTP_STATUS.get(exc.code, 500)
            payload = {"value": {"error": exc.code, "message": exc.message, "stacktrace": ""}}
        self._write_json(status, payload, method=method, path=path,
                         session=session_hint, logged=logged)

    def _session(self, sid: str) -> BrowserSessionState:
        sess = self.server.state.sessions.get(sid)
        if sess is None:
            raise SiteError("invalid session id", f"session {sid!r} is not active")
        return sess

    # -- wire protocol ------------------------------------------------------

    def _op_status(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        return 200, {"value": {"ready": True, "message": "mock grading service ready"}}

    def _op_new_session(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        if not isinstance(body, dict):
            raise SiteError("session not created", "request body is not a JSON object")
        caps = body.get("capabilities")
        always = caps.get("alwaysMatch") if isinstance(caps, dict) else None
        if not isinstance(always, dict) or not always.get("browserName"):
            raise SiteError("session not created", "capabilities lack a browserName")
        timeouts = always.get("timeouts", {})
        implicit = timeouts.get("implicit", 0) if isinstance(timeouts, dict) else 0
        if not isinstance(implicit, int) or implicit < 0:
            raise SiteError("session not created", "implicit timeout must be a non-negative integer")
        state = self.server.state
        with state.lock:
            state.session_counter += 1
            sid = f"s{state.session_counter:04d}"
            state.sessions[sid] = BrowserSessionState(
                session_id=sid,
                capability_payload=copy.deepcopy(always),
                implicit_wait_ms=implicit,
            )
            state.capabilities_log.append(copy.deepcopy(always))
        return 200, {"value": {"sessionId": sid, "capabilities": always}}

    def _op_delete_session(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        sid = groups[0]
        state = self.server.state
        with state.lock:
            self._session(sid)
            del state.sessions[sid]
        return 200, {"value": None}

    def _op_navigate(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        sid = groups[0]
        if not isinstance(body, dict) or not isinstance(body.get("url"), str):
            raise SiteError("invalid argument", "navigation body must carry a url string")
        state = self.server.state
        with state.lock:
            sess = self._session(sid)
            state.site.navigate(sess, body["url"])
        return 200, {"value": None}

    def _op_get_url(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            return 200, {"value": state.site.current_url(sess)}

    def _op_set_timeouts(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        if not isinstance(body, dict):
            raise SiteError("invalid argument", "timeouts body must be a JSON object")
        implicit = body.get("implicit")
        if implicit is not None and (not isinstance(implicit, int) or implicit < 0):
            raise SiteError("invalid argument", "implicit timeout must be a non-negative integer")
        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            if implicit is not None:
                sess.implicit_wait_ms = implicit
        return 200, {"value": None}

    def _op_find_element(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        if not isinstance(body, dict):
            raise SiteError("invalid argument", "find body must be a JSON object")
        using, expression = body.get("using"), body.get("value")
        if using not in ("xpath", "css selector") or not isinstance(expression, str) or not expression:
            raise SiteError("invalid argument", "find requires a locator strategy and expression")

        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            found = state.site.find(sess, using, expression)
            implicit_ms = sess.implicit_wait_ms
            page = sess.page
            wake_ns = None
            if found is None and implicit_ms > 0 and page is not None:
                # The session-wide wait resolves after general page readiness:
                # hold the lookup until every scheduled element has loaded (or
                # the implicit budget runs out), then locate exactly once.
                wake_ns = min(page.ready_at_ns(), time.monotonic_ns() + implicit_ms * 1_000_000)

        if found is None and wake_ns is not None:
            delay = (wake_ns - time.monotonic_ns()) / 1e9
            if delay > 0:
                time.sleep(delay)
            with state.lock:
                sess = self._session(groups[0])
                found = state.site.find(sess, using, expression)

        if found is None:
            raise SiteError("no such element", f"nothing matches {using} {expression!r}")
        return 200, {"value": {ELEMENT_KEY: found}}

    def _op_click(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            state.site.click(sess, groups[1])
        return 200, {"value": None}

    def _op_send_keys(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise SiteError("invalid argument", "value body must carry a text string")
        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            state.site.send_element_keys(sess, groups[1], body["text"])
        return 200, {"value": None}

    def _op_get_text(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            return 200, {"value": state.site.element_text(sess, groups[1])}

    def _op_actions(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        steps = _decode_actions(body)
        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            state.actions_log.append({"session": sess.session_id,
                                      "steps": copy.deepcopy(steps)})
            state.site.apply_steps(sess, steps)
        return 200, {"value": None}

    # -- REST pull ----------------------------------------------------------

    def _op_rest_pull(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        lab_id = groups[0]
        token = self.headers.get("X-Session-Token")
        account = password = None
        auth = self.headers.get("Authorization", "")
        if auth.startswith("Basic "):
            try:
                decoded = base64.b64decode(auth[6:]).decode("utf-8")
                account, _, password = decoded.partition(":")
            except Exception:
                account = password = None
        state = self.server.state
        with state.lock:
            if not state.site.check_rest_auth(account, password, token):
                return 401, {"error": "unauthorized"}
            source = state.site.pull_source(lab_id)
        if source is None:
            return 404, {"error": "not found"}
        return 200, {"code": source}

    # -- control plane ------------------------------------------------------

    def _op_mock_clipboard(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise SiteError("invalid argument", "clipboard body must carry a text string")
        state = self.server.state
        with state.lock:
            sess = self._session(groups[0])
            sess.clipboard = body["text"]
        return 200, {"value": None}

    def _op_mock_state(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        return 200, {"value": self.server.state_snapshot()}

    def _op_mock_scenario(self, groups: tuple[str, ...], body: Any) -> tuple[int, Any]:
        if not isinstance(body, dict):
            raise SiteError("invalid argument", "scenario body must be a JSON object")
        try:
            scenario = ServiceScenario.from_json_dict(body)
        except (ValueError, TypeError, KeyError) as exc:
            raise SiteError("invalid argument", f"bad scenario: {exc}") from exc
        state = self.server.state
        with state.lock:
            state.reset(scenario, state.site.base_url)
        return 200, {"value": None}


class MockHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = False

    def __init__(self, addr: tuple[str, int], scenario: ServiceScenario) -> None:
        super().__init__(addr, _Handler)
        host, port = self.server_address[:2]
        self.base_url = f"http://{host}:{port}"
        self.state = _ServiceState(scenario, self.base_url)

    def state_snapshot(self) -> dict[str, Any]:
        """Consistent, JSON-safe, secret-redacted snapshot of everything."""
        state = self.state
        with state.lock:
            sessions_detail = {}
            for sid, sess in state.sessions.items():
                page = sess.page
                page_detail = None
                if page is not None:
                    state.site._refresh_compile(page)
                    page_detail = {
                        "name": page.page.name,
                        "url": page.url,
                        "generation": page.generation,
                        "elements": {
                            name: ("***" if st.element.masked else st.value)
                            for name, st in page.states.items()
                        },
                    }
                sessions_detail[sid] = {
                    "logged_in": sess.logged_in,
                    "account": sess.account,
                    "implicit_wait_ms": sess.implicit_wait_ms,
                    "clipboard": sess.clipboard,
                    "focused": sess.focused,
                    "page": page_detail,
                }
            return {
                "sessions": sorted(state.sessions),
                "sessions_detail": sessions_detail,
                "request_log": copy.deepcopy(state.request_log),
                "events": copy.deepcopy(state.site.events),
                "actions_requests": copy.deepcopy(state.actions_log),
                "capabilities": copy.deepcopy(state.capabilities_log),
                "program_store": dict(state.site.program_store),
                "scenario": {
                    **state.scenario.to_json_dict(),
                    "login_table": {a: "***" for a in state.scenario.login_table},
                    "api_tokens": {"***": a for a in state.scenario.api_tokens.values()},
                },
            }


class MockServer:
    """Handle for a running simulated service."""

    def __init__(self, scenario: ServiceScenario, host: str = "127.0.0.1", port: int = 0) -> None:
        try:
            self._httpd = MockHTTPServer((host, port), scenario)
        except OSError as exc:
            raise BindFailureError(f"cannot bind {host}:{port}: {exc}") from exc
        self._thread = threading.Thread(
            target=lambda: self._httpd.serve_forever(poll_interval=0.05),
            name="mock-grading-service",
            daemon=True,
        )

    def start(self) -> "MockServer":
        self._thread.start()
        return self

    @property
    def base_url(self) -> str:
        return self._httpd.base_url

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def dump_state(self) -> dict[str, Any]:
        return self._httpd.state_snapshot()

    def load_scenario(self, scenario: ServiceScenario) -> None:
        state = self._httpd.state
        with state.lock:
            state.reset(scenario, self.base_url)

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._thread.join(timeout=5)
        self._httpd.server_close()

    def __enter__(self) -> "MockServer":
        return self

    def __exit__(self, *_: object) -> None:
        self.shutdown()


def serve(scenario: ServiceScenario | None = None, host: str = "127.0.0.1",
          port: int = 0) -> MockServer:
    """Start the simulated service and return its handle.

    ``port=0`` picks a free ephemeral port; a taken explicit port raises
    ``BindFailureError``.
    """
    return MockServer(scenario or default_scenario(), host, port).start()
