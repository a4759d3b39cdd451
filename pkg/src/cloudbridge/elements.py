"""Element location, waits, element interaction and atomic action batches.

Two wait styles exist and they are not the same thing:

* explicit — this client polls for one specific element and returns the
  moment it exists, regardless of what else on the page is still loading;
* implicit — a single lookup is sent and the remote applies its session-wide
  grace period, which resolves only after general page readiness.

Explicit waiting is the fast path, implicit the safe one. Mixing them is a
classic footgun (a non-zero implicit wait would slow every explicit probe
down), so explicit waits temporarily register a zero implicit timeout and
restore the original afterwards.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .errors import (
    ActionSequenceError,
    ElementWaitTimeout,
    NoSuchElementError,
    ProtocolError,
)
from .wire import ELEMENT_KEY, Session, WireCommand, execute_command, set_implicit_wait

DEFAULT_POLL_INTERVAL_MS = 100

MODIFIER_KEYS = frozenset({"META", "CONTROL", "SHIFT", "ALT"})
NAMED_KEYS = MODIFIER_KEYS | {"ENTER"}

# W3C keyboard codepoints for the named keys this client exposes.
KEY_CODEPOINTS = {
    "META": "",
    "CONTROL": "",
    "SHIFT": "",
    "ALT": "",
    "ENTER": "",
}

_STRATEGY_WIRE_NAMES = {"xpath": "xpath", "css": "css selector"}


class WaitMode(str, Enum):
    IMPLICIT = "implicit"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class Locator:
    """How to find an element: strategy plus selector expression."""

    strategy: str
    expression: str

    def __post_init__(self) -> None:
        if self.strategy not in _STRATEGY_WIRE_NAMES:
            raise ValueError(f"strategy must be one of {sorted(_STRATEGY_WIRE_NAMES)}")
        if not self.expression:
            raise ValueError("locator expression must be non-empty")

    @classmethod
    def xpath(cls, expression: str) -> "Locator":
        return cls("xpath", expression)

    @classmethod
    def css(cls, expression: str) -> "Locator":
        return cls("css", expression)

    def wire_using(self) -> str:
        return _STRATEGY_WIRE_NAMES[self.strategy]


@dataclass(frozen=True)
class WaitPolicy:
    """How long (and how) to wait for an element."""

    mode: WaitMode
    timeout_ms: int
    poll_interval_ms: int = DEFAULT_POLL_INTERVAL_MS

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.poll_interval_ms <= 0:
            raise ValueError("poll_interval_ms must be positive")
        if self.mode is WaitMode.EXPLICIT and self.poll_interval_ms > self.timeout_ms:
            raise ValueError("poll_interval_ms must not exceed timeout_ms")

    @classmethod
    def explicit(cls, timeout_ms: int, poll_interval_ms: int = DEFAULT_POLL_INTERVAL_MS) -> "WaitPolicy":
        return cls(WaitMode.EXPLICIT, timeout_ms, poll_interval_ms)

    @classmethod
    def implicit(cls, timeout_ms: int) -> "WaitPolicy":
        return cls(WaitMode.IMPLICIT, timeout_ms)


@dataclass(frozen=True)
class ElementRef:
    """Opaque handle to one element, valid only inside its owning session."""

    element_id: str
    session_id: str
    kind_hint: str | None = None

    def __post_init__(self) -> None:
        if not self.element_id:
            raise ValueError("element_id must be non-empty")


# ---------------------------------------------------------------------------
# Action sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointerClick:
    target: ElementRef


@dataclass(frozen=True)
class KeyDown:
    key: str


@dataclass(frozen=True)
class KeyUp:
    key: str


@dataclass(frozen=True)
class TypeText:
    text: str


ActionStep = Union[PointerClick, KeyDown, KeyUp, TypeText]


@dataclass
class ActionSequence:
    """Ordered batch of browser-level input primitives, sent as one payload.

    Keys typed here go to whatever element currently has focus, not to a
    named element; a leading click is how a sequence aims its keys. The
    builder chains so a batch reads like the gesture it performs::

        ActionSequence().click(editor).key_down("META").type_text("a") \\
            .type_text("v").type_text("s").key_up("META").click(run)
    """

    steps: list[ActionStep] = field(default_factory=list)

    def click(self, target: ElementRef) -> "ActionSequence":
        self.steps.append(PointerClick(target))
        return self

    def key_down(self, key: str) -> "ActionSequence":
        self.steps.append(KeyDown(key))
        return self

    def key_up(self, key: str) -> "ActionSequence":
        self.steps.append(KeyUp(key))
        return self

    def type_text(self, text: str) -> "ActionSequence":
        self.steps.append(TypeText(text))
        return self

    def validate(self) -> None:
        """Reject malformed batches locally, before anything hits the wire."""
        held: list[str] = []
        for step in self.steps:
            if isinstance(step, (KeyDown, KeyUp)):
                key = step.key
                if key not in NAMED_KEYS:
                    raise ActionSequenceError(f"unknown key {key!r}")
                if key not in MODIFIER_KEYS:
                    raise ActionSequenceError(f"{key!r} cannot be held; use type_text")
                if isinstance(step, KeyDown):
                    if key in held:
                        raise ActionSequenceError(f"modifier {key!r} pressed twice")
                    held.append(key)
                else:
                    if key not in held:
                        raise ActionSequenceError(f"modifier {key!r} released but never pressed")
                    held.remove(key)
            elif isinstance(step, TypeText):
                for char in step.text:
                    if char in KEY_CODEPOINTS.values():
                        raise ActionSequenceError("type_text must not contain raw key codepoints")
        if held:
            raise ActionSequenceError(f"modifiers never released: {held}")

    def canonical_steps(self) -> list[dict[str, object]]:
        """Flatten to single-character primitives; the payload ordering oracle."""
        out: list[dict[str, object]] = []
        for step in self.steps:
            if isinstance(step, PointerClick):
                out.append({"action": "pointer_click", "target": step.target.element_id})
            elif isinstance(step, KeyDown):
                out.append({"action": "key_down", "key": step.key})
            elif isinstance(step, KeyUp):
                out.append({"action": "key_up", "key": step.key})
            else:
                for char in step.text:
                    out.append({"action": "type_text", "text": char})
        return out

    def to_wire_payload(self) -> dict[str, object]:
        """Encode as one key source plus one pointer source, tick-aligned.

        Every tick carries exactly one non-pause action, which is how a
        strictly serial batch is expressed across two W3C input sources.
        """
        pause = {"type": "pause", "duration": 0}
        key_actions: list[dict[str, object]] = []
        pointer_actions: list[dict[str, object]] = []

        def key_tick(item: dict[str, object]) -> None:
            key_actions.append(item)
            pointer_actions.append(dict(pause))

        def pointer_tick(item: dict[str, object]) -> None:
            pointer_actions.append(item)
            key_actions.append(dict(pause))

        for step in self.canonical_steps():
            if step["action"] == "pointer_click":
                pointer_tick({
                    "type": "pointerMove",
                    "duration": 0,
                    "origin": {ELEMENT_KEY: step["target"]},
                })
                pointer_tick({"type": "pointerDown", "button": 0})
                pointer_tick({"type": "pointerUp", "button": 0})
            elif step["action"] in ("key_down", "key_up"):
                code = KEY_CODEPOINTS[str(step["key"])]
                kind = "keyDown" if step["action"] == "key_down" else "keyUp"
                key_tick({"type": kind, "value": code})
            else:
                char = str(step["text"])
                value = KEY_CODEPOINTS["ENTER"] if char == "\n" else char
                key_tick({"type": "keyDown", "value": value})
                key_tick({"type": "keyUp", "value": value})

        return {
            "actions": [
                {"type": "key", "id": "default keyboard", "actions": key_actions},
                {
                    "type": "pointer",
                    "id": "default mouse",
                    "parameters": {"pointerType": "mouse"},
                    "actions": pointer_actions,
                },
            ]
        }


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _wire_find(session: Session, locator: Locator) -> ElementRef | None:
    resp = execute_command(session, WireCommand(
        "POST", session.path("/element"),
        {"using": locator.wire_using(), "value": locator.expression},
    ))
    if resp.is_error:
        assert resp.error is not None
        if resp.error.get("error") == "no such element":
            return None
        resp.raise_for_error()
    value = resp.value
    if not isinstance(value, dict) or ELEMENT_KEY not in value:
        raise ProtocolError("find-element response lacks the element identifier")
    return ElementRef(element_id=str(value[ELEMENT_KEY]), session_id=session.session_id)


def probe_element(session: Session, locator: Locator) -> ElementRef | None:
    """Single immediate lookup: the element as the page stands right now."""
    restore = session.registered_implicit_wait_ms
    if restore != 0:
        set_implicit_wait(session, 0)
    try:
        return _wire_find(session, locator)
    finally:
        if restore != 0:
            set_implicit_wait(session, restore)


def find_element(session: Session, locator: Locator, wait: WaitPolicy) -> ElementRef:
    """Locate one element under the given wait policy.

    Explicit mode polls and returns as soon as the element exists in the
    remote DOM, without requiring unrelated elements to have loaded. Implicit
    mode issues a single lookup and lets the session-wide wait do its thing.
    When several elements match, the first in document order wins.

    Raises ``ElementWaitTimeout`` when the budget runs out.
    """
    if wait.mode is WaitMode.IMPLICIT:
        try:
            found = _wire_find(session, locator)
        except NoSuchElementError:
            found = None
        if found is None:
            raise ElementWaitTimeout(locator, session.registered_implicit_wait_ms)
        return found

    deadline = time.monotonic() + wait.timeout_ms / 1000.0
    restore = session.registered_implicit_wait_ms
    if restore != 0:
        set_implicit_wait(session, 0)
    try:
        while True:
            found = _wire_find(session, locator)
            if found is not None:
                return found
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ElementWaitTimeout(locator, wait.timeout_ms)
            time.sleep(min(wait.poll_interval_ms / 1000.0, remaining))
    finally:
        if restore != 0:
            set_implicit_wait(session, restore)


def click(session: Session, elem: ElementRef) -> None:
    """Click the element; rejected by kinds that do not take clicks."""
    execute_command(session, WireCommand(
        "POST", session.path(f"/element/{elem.element_id}/click"),
    )).raise_for_error()


def send_keys_to_element(session: Session, elem: ElementRef, text: str) -> None:
    """Append ``text`` to an element that accepts per-element keyboard input.

    Only plain input boxes do; buttons and rendered code views raise
    ``ElementNotInteractableError`` (keys for those must travel through an
    action sequence so the browser routes them by focus).
    """
    execute_command(session, WireCommand(
        "POST", session.path(f"/element/{elem.element_id}/value"), {"text": text},
    )).raise_for_error()


def get_text(session: Session, elem: ElementRef) -> str:
    resp = execute_command(session, WireCommand(
        "GET", session.path(f"/element/{elem.element_id}/text"),
    )).raise_for_error()
    if not isinstance(resp.value, str):
        raise ProtocolError("element text response value is not a string")
    return resp.value


def perform_actions(session: Session, seq: ActionSequence) -> None:
    """Deliver the whole sequence in one actions request and apply it in order.

    The batch is validated locally first; an invalid sequence never produces
    network traffic. Returns only after the remote has applied every step.
    """
    seq.validate()
    execute_command(session, WireCommand(
        "POST", session.path("/actions"), seq.to_wire_payload(),
    )).raise_for_error()
