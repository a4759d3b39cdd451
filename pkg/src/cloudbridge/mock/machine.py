"""Virtual-site state machine: routing, element lookup, interaction semantics.

This module is pure state-machine logic with no HTTP in it; the server layer
translates requests into calls here. One :class:`SiteModel` instance holds the
state shared by every browser session (program store, event log); each wire
session gets its own :class:`BrowserSessionState` with its own current page,
focus, clipboard and held modifiers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

from .model import (
    CLICKABLE_KINDS,
    COMPILE_DONE_MARKER,
    FOCUS_TYPING_KINDS,
    KEYABLE_KINDS,
    ElementKind,
    ServiceScenario,
    VirtualElement,
    VirtualPage,
    fake_compile,
)

MODIFIER_KEYS = frozenset({"META", "CONTROL", "SHIFT", "ALT"})

LOGIN_PATH = "/login"
HOME_PATH = "/home"
NOT_FOUND_PATH = "/404"

LOGIN_FAILED_TEXT = "Invalid account or password."


class SiteError(Exception):
    """Protocol-level failure, carrying the wire error code to report."""

    def __init__(self, code: str, message: str) -> None:
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}")


def _now_ns() -> int:
    return time.monotonic_ns()


# ---------------------------------------------------------------------------
# Page construction
# ---------------------------------------------------------------------------

def build_login_page() -> VirtualPage:
    return VirtualPage(
        name="login",
        url_path=LOGIN_PATH,
        elements=[
            VirtualElement("username", "//input[@id='username']", ElementKind.INPUT,
                           css="#username", focusable=True),
            VirtualElement("password", "//input[@id='password']", ElementKind.INPUT,
                           css="#password", focusable=True, masked=True),
            VirtualElement("login", "//button[@id='login']", ElementKind.BUTTON, css="#login"),
            VirtualElement("login_error", "//*[@id='login-error']", ElementKind.TEXT,
                           css="#login-error"),
        ],
    )


def build_interstitial_page() -> VirtualPage:
    # The proceed link is revealed by clicking "advanced", the way real
    # certificate warnings behave; dismissing the page therefore takes
    # exactly two clicks.
    return VirtualPage(
        name="interstitial",
        url_path="",  # keeps the URL that was being navigated to
        elements=[
            VirtualElement("advanced", "//a[@id='advanced-link']", ElementKind.BUTTON,
                           css="#advanced-link"),
            VirtualElement("proceed", "//a[@id='proceed-link']", ElementKind.BUTTON,
                           css="#proceed-link"),
        ],
    )


def build_home_page() -> VirtualPage:
    return VirtualPage(
        name="home",
        url_path=HOME_PATH,
        elements=[
            VirtualElement("welcome", "//*[@id='welcome']", ElementKind.TEXT,
                           css="#welcome", value="Signed in."),
        ],
    )


def build_lab_page(lab_id: str, source: str) -> VirtualPage:
    return VirtualPage(
        name="lab",
        url_path=f"/labs/{lab_id}",
        elements=[
            VirtualElement("editor", "//*[@id='editor']", ElementKind.CODE_VIEW,
                           css="#editor", value=source, focusable=True),
            VirtualElement("compile", "//button[@id='compile']", ElementKind.BUTTON,
                           css="#compile"),
            VirtualElement("all_tests", "//button[@id='all-tests']", ElementKind.BUTTON,
                           css="#all-tests"),
            VirtualElement("output", "//*[@id='output']", ElementKind.TEXT, css="#output"),
            VirtualElement("code_echo", "//*[@id='code-echo']", ElementKind.TEXT,
                           css="#code-echo"),
            VirtualElement("compile_status", "//*[@id='compile-status']", ElementKind.TEXT,
                           css="#compile-status"),
            VirtualElement("compile_result", "//*[@id='compile-result']", ElementKind.TEXT,
                           css="#compile-result"),
        ],
    )


def build_not_found_page() -> VirtualPage:
    return VirtualPage(
        name="not_found",
        url_path=NOT_FOUND_PATH,
        elements=[
            VirtualElement("message", "//*[@id='not-found']", ElementKind.TEXT,
                           css="#not-found", value="No such page."),
        ],
    )


# ---------------------------------------------------------------------------
# Live state
# ---------------------------------------------------------------------------

@dataclass
class ElementState:
    element: VirtualElement
    value: str
    selected: bool = False


@dataclass
class PageInstance:
    """A page as one session currently sees it."""

    page: VirtualPage
    url: str
    generation: int
    navigated_at_ns: int
    schedule: dict[str, int]
    states: dict[str, ElementState]
    lab_id: str | None = None
    advanced_clicked: bool = False
    compile_started_at_ns: int | None = None
    compile_pending: tuple[str, str] | None = None
    compile_source: str = ""
    compile_applied: bool = False

    def ready_at_ns(self) -> int:
        """Instant at which every scheduled element has materialized."""
        worst = max(self.schedule.values(), default=0)
        return self.navigated_at_ns + worst * 1_000_000

    def element_available(self, name: str, now_ns: int) -> bool:
        if name not in self.states:
            return False
        if self.page.name == "interstitial" and name == "proceed" and not self.advanced_clicked:
            return False
        delay_ms = self.schedule.get(name, 0)
        return now_ns - self.navigated_at_ns >= delay_ms * 1_000_000


@dataclass
class BrowserSessionState:
    """Mock-side state of one wire session."""

    session_id: str
    capability_payload: dict[str, Any]
    implicit_wait_ms: int = 0
    logged_in: bool = False
    account: str | None = None
    ssl_bypassed: bool = False
    page: PageInstance | None = None
    clipboard: str = ""
    focused: str | None = None
    held_modifiers: set[str] = field(default_factory=set)
    generation_counter: int = 0


class SiteModel:
    """Deterministic model of the whole site, shared across sessions.

    All methods must be called with the owning server's state lock held;
    nothing here blocks or sleeps.
    """

    def __init__(self, scenario: ServiceScenario, base_url: str) -> None:
        self.scenario = scenario
        self.base_url = base_url.rstrip("/")
        self.program_store: dict[str, str] = dict(scenario.program_store)
        self.events: list[dict[str, Any]] = []

    # -- observability ------------------------------------------------------

    def record(self, kind: str, **fields: Any) -> None:
        self.events.append({"kind": kind, **fields})

    # -- navigation ---------------------------------------------------------

    def navigate(self, s: BrowserSessionState, url: str) -> None:
        """Route a navigation request to the page it deterministically lands on."""
        self.record("navigate", session=s.session_id, url=url)
        if not url.startswith(self.base_url):
            self._enter(s, build_not_found_page(), self.base_url + NOT_FOUND_PATH)
            return
        path = url[len(self.base_url):] or "/"
        path = path.split("?", 1)[0].rstrip("/") or "/"

        if self.scenario.ssl_fail and not s.ssl_bypassed:
            self._enter(s, build_interstitial_page(), url)
            return

        if path in ("/", LOGIN_PATH):
            if s.logged_in:
                self._enter_landing(s)
            else:
                self._enter(s, build_login_page(), self.base_url + LOGIN_PATH)
        elif path == HOME_PATH:
            if s.logged_in:
                self._enter(s, build_home_page(), self.base_url + HOME_PATH)
            else:
                self._enter(s, build_login_page(), self.base_url + LOGIN_PATH)
        elif path.startswith("/labs/"):
            lab_id = path[len("/labs/"):]
            if not s.logged_in:
                self._enter(s, build_login_page(), self.base_url + LOGIN_PATH)
            elif lab_id not in self.program_store:
                self._enter(s, build_not_found_page(), self.base_url + NOT_FOUND_PATH)
            else:
                page = build_lab_page(lab_id, self.program_store[lab_id])
                self._enter(s, page, self.base_url + page.url_path, lab_id=lab_id)
        else:
            self._enter(s, build_not_found_page(), self.base_url + NOT_FOUND_PATH)

    def _enter_landing(self, s: BrowserSessionState) -> None:
        """Post-login landing: the site drops you straight on your first lab."""
        if self.program_store:
            lab_id = next(iter(self.program_store))
            page = build_lab_page(lab_id, self.program_store[lab_id])
            self._enter(s, page, self.base_url + page.url_path, lab_id=lab_id)
        else:
            self._enter(s, build_home_page(), self.base_url + HOME_PATH)

    def _enter(self, s: BrowserSessionState, page: VirtualPage, url: str,
               lab_id: str | None = None) -> None:
        s.generation_counter += 1
        schedule = dict(self.scenario.latency_schedule.get(page.name, {}))
        states = {e.name: ElementState(element=e, value=e.value) for e in page.elements}
        s.page = PageInstance(
            page=page,
            url=url,
            generation=s.generation_counter,
            navigated_at_ns=_now_ns(),
            schedule=schedule,
            states=states,
            lab_id=lab_id,
        )
        s.focused = None
        s.held_modifiers.clear()

    def current_url(self, s: BrowserSessionState) -> str:
        if s.page is None:
            return "about:blank"
        return s.page.url

    # -- element lookup -----------------------------------------------------

    def find(self, s: BrowserSessionState, using: str, expression: str) -> str | None:
        """Locate an element on the current page, honouring load delays.

        Returns the element id, or ``None`` when nothing (yet) matches. The
        first matching element in document order wins.
        """
        if s.page is None:
            return None
        self._refresh_compile(s.page)
        now = _now_ns()
        for element in s.page.page.elements:
            if using == "xpath":
                hit = element.xpath == expression
            elif using == "css selector":
                hit = element.css == expression
            else:
                raise SiteError("invalid argument", f"unsupported locator strategy {using!r}")
            if hit and s.page.element_available(element.name, now):
                return f"{element.name}:g{s.page.generation}"
        return None

    def _resolve(self, s: BrowserSessionState, element_id: str) -> ElementState:
        name, sep, gen = element_id.partition(":g")
        if not sep or s.page is None:
            raise SiteError("stale element reference", f"unknown element id {element_id!r}")
        if not gen.isdigit() or int(gen) != s.page.generation or name not in s.page.states:
            raise SiteError("stale element reference",
                            f"element {name!r} does not belong to the current page")
        self._refresh_compile(s.page)
        return s.page.states[name]

    # -- element interaction ------------------------------------------------

    def click(self, s: BrowserSessionState, element_id: str) -> None:
        state = self._resolve(s, element_id)
        element = state.element
        if element.kind not in CLICKABLE_KINDS:
            raise SiteError("element not interactable",
                            f"cannot click a {element.kind.value} element")
        assert s.page is not None
        self.record("click", session=s.session_id, page=s.page.page.name, target=element.name)
        if element.focusable:
            s.focused = element.name
        self._apply_click_transition(s, element.name)

    def _apply_click_transition(self, s: BrowserSessionState, name: str) -> None:
        assert s.page is not None
        page_name = s.page.page.name
        if page_name == "interstitial":
            if name == "advanced":
                s.page.advanced_clicked = True
            elif name == "proceed":
                s.ssl_bypassed = True
                self.navigate(s, self.base_url + "/")
        elif page_name == "login" and name == "login":
            account = s.page.states["username"].value
            password = s.page.states["password"].value
            ok = self.scenario.login_table.get(account) == password
            self.record("login_attempt", session=s.session_id, account=account, ok=ok)
            if ok:
                s.logged_in = True
                s.account = account
                self._enter_landing(s)
            else:
                s.page.states["login_error"].value = LOGIN_FAILED_TEXT
        elif page_name == "lab":
            if name == "compile":
                self._start_compile(s)
            elif name == "all_tests":
                self.record("run_all_click", session=s.session_id, lab=s.page.lab_id)

    def _start_compile(self, s: BrowserSessionState) -> None:
        assert s.page is not None and s.page.lab_id is not None
        source = self.program_store[s.page.lab_id]
        status, output = fake_compile(source, self.scenario.compiler_table)
        page = s.page
        page.compile_started_at_ns = _now_ns()
        page.compile_pending = (status, output)
        page.compile_source = source
        page.compile_applied = False
        for name in ("output", "code_echo", "compile_status", "compile_result"):
            page.states[name].value = ""
        self.record("compile_click", session=s.session_id, lab=page.lab_id)

    def _refresh_compile(self, page: PageInstance) -> None:
        """Lazily surface compile results once the configured duration elapsed."""
        if page.compile_started_at_ns is None or page.compile_applied:
            return
        duration_ns = self.scenario.compile_duration_ms * 1_000_000
        if _now_ns() - page.compile_started_at_ns < duration_ns:
            return
        assert page.compile_pending is not None
        status, output = page.compile_pending
        page.states["output"].value = output
        page.states["code_echo"].value = page.compile_source
        page.states["compile_status"].value = COMPILE_DONE_MARKER
        page.states["compile_result"].value = status
        page.compile_applied = True

    def send_element_keys(self, s: BrowserSessionState, element_id: str, text: str) -> None:
        state = self._resolve(s, element_id)
        element = state.element
        if element.kind not in KEYABLE_KINDS:
            raise SiteError("element not interactable",
                            f"cannot send keys to a {element.kind.value} element")
        state.value += text
        assert s.page is not None
        self.record(
            "send_keys",
            session=s.session_id,
            page=s.page.page.name,
            target=element.name,
            text="***" if element.masked else text,
        )

    def element_text(self, s: BrowserSessionState, element_id: str) -> str:
        return self._resolve(s, element_id).value

    # -- browser-level action batches ----------------------------------------

    def apply_steps(self, s: BrowserSessionState, steps: list[dict[str, Any]]) -> None:
        """Apply one decoded action batch, in order, with focused key routing."""
        for step in steps:
            action = step["action"]
            if action == "pointer_click":
                self.click(s, step["target"])
            elif action == "key_down":
                key = step["key"]
                if key not in MODIFIER_KEYS:
                    raise SiteError("invalid argument", f"cannot hold non-modifier key {key!r}")
                s.held_modifiers.add(key)
            elif action == "key_up":
                key = step["key"]
                if key not in s.held_modifiers:
                    raise SiteError("invalid argument", f"key {key!r} released but never held")
                s.held_modifiers.discard(key)
            elif action == "type_text":
                self._type_focused(s, step["text"])
            else:
                raise SiteError("invalid argument", f"unknown action {action!r}")

    def _type_focused(self, s: BrowserSessionState, char: str) -> None:
        if s.page is None or s.focused is None or s.focused not in s.page.states:
            raise SiteError("invalid element state", "no focused element to receive keys")
        state = s.page.states[s.focused]
        if state.element.kind not in FOCUS_TYPING_KINDS:
            raise SiteError("invalid element state",
                            f"focused {state.element.kind.value} element ignores keys")
        chorded = bool(s.held_modifiers & {"META", "CONTROL"})
        if chorded:
            if char == "a":
                state.selected = True
                self.record("select_all", session=s.session_id, target=s.focused)
            elif char == "v":
                if state.selected:
                    state.value = s.clipboard
                else:
                    state.value += s.clipboard
                state.selected = False
                self.record("paste", session=s.session_id, target=s.focused,
                            chars=len(s.clipboard))
            elif char == "s":
                self._save_document(s)
            # Other chords are accepted and ignored, like a real page would.
        else:
            if state.selected:
                state.value = char
                state.selected = False
            else:
                state.value += char

    def _save_document(self, s: BrowserSessionState) -> None:
        assert s.page is not None
        if s.page.page.name == "lab" and s.page.lab_id is not None:
            self.program_store[s.page.lab_id] = s.page.states["editor"].value
            self.record("save", session=s.session_id, lab=s.page.lab_id)
        else:
            self.record("save_ignored", session=s.session_id, page=s.page.page.name)

    # -- REST pull -----------------------------------------------------------

    def pull_source(self, lab_id: str) -> str | None:
        return self.program_store.get(lab_id)

    def check_rest_auth(self, account: str | None, password: str | None,
                        token: str | None) -> bool:
        if token is not None:
            return token in self.scenario.api_tokens
        if account is None or password is None:
            return False
        return self.scenario.login_table.get(account) == password
