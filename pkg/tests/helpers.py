"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from cloudbridge import elements, wire
from cloudbridge.config import RemoteConfig
from cloudbridge.mock import DEFAULT_ACCOUNT, DEFAULT_LAB, DEFAULT_PASSWORD, MockServer
from cloudbridge.wire import Session, SessionCapabilities


def make_config(server: MockServer, tmp_path: Path, **overrides) -> RemoteConfig:
    values = dict(
        account=DEFAULT_ACCOUNT,
        password=DEFAULT_PASSWORD,
        base_url=server.base_url,
        lab_id=DEFAULT_LAB,
        automation_endpoint=server.base_url,
        workspace_file=tmp_path / "workspace.cu",
        headless=True,
        implicit_wait_ms=5_000,
        explicit_poll_ms=50,
        command_timeout_ms=10_000,
        compile_timeout_ms=10_000,
    )
    values.update(overrides)
    return RemoteConfig(**values)


def open_session(server: MockServer, *, headless: bool = True,
                 implicit_wait_ms: int = 0, browser_name: str = "mock") -> Session:
    caps = SessionCapabilities(
        browser_name=browser_name, headless=headless, implicit_wait_ms=implicit_wait_ms
    )
    return wire.new_session(server.base_url, caps)


def quick_find(session: Session, xpath: str, timeout_ms: int = 2_000) -> elements.ElementRef:
    return elements.find_element(
        session, elements.Locator.xpath(xpath), elements.WaitPolicy.explicit(timeout_ms, 25)
    )


def element_login(session: Session, base_url: str,
                  account: str = DEFAULT_ACCOUNT, password: str = DEFAULT_PASSWORD) -> None:
    """Log in using only wire/element primitives (no workflow layer)."""
    wire.navigate(session, base_url)
    elements.send_keys_to_element(session, quick_find(session, "//input[@id='username']"), account)
    elements.send_keys_to_element(session, quick_find(session, "//input[@id='password']"), password)
    elements.click(session, quick_find(session, "//button[@id='login']"))


def open_lab(session: Session, base_url: str, lab_id: str = DEFAULT_LAB) -> None:
    element_login(session, base_url)
    wire.navigate(session, f"{base_url.rstrip('/')}/labs/{lab_id}")


def session_log_streams(log: list[dict]) -> dict[str | None, list[dict]]:
    streams: dict[str | None, list[dict]] = {}
    for entry in log:
        streams.setdefault(entry.get("session"), []).append(entry)
    return streams


def assert_strict_alternation(entries: list[dict]) -> None:
    """Entries must be request, response, request, response... with rising timestamps."""
    assert entries, "no log entries to check"
    expected = "request"
    last_ts = -1
    for entry in entries:
        assert entry["kind"] == expected, f"expected {expected}, log shows {entry}"
        assert entry["ts_ns"] > last_ts, "timestamps not strictly increasing"
        last_ts = entry["ts_ns"]
        expected = "response" if expected == "request" else "request"
    assert expected == "request", "log ends with an unanswered request"


def random_action_sequence(rng: random.Random, refs) -> elements.ActionSequence:
    """A random valid batch; starts with a focusing click, modifiers balanced."""
    seq = elements.ActionSequence().click(refs[0])
    held: list[str] = []
    for _ in range(rng.randint(0, 10)):
        kind = rng.choice(("click", "type", "mod_down", "mod_up"))
        if kind == "click":
            seq.click(rng.choice(refs))
        elif kind == "type":
            seq.type_text("".join(rng.choice("hello世界\t") for _ in range(rng.randint(1, 3))))
        elif kind == "mod_down":
            candidates = [m for m in ("META", "SHIFT", "ALT") if m not in held]
            if candidates:
                mod = rng.choice(candidates)
                held.append(mod)
                seq.key_down(mod)
        elif kind == "mod_up" and held:
            mod = rng.choice(held)
            held.remove(mod)
            seq.key_up(mod)
    for mod in reversed(held):
        seq.key_up(mod)
    return seq


_UNICODE_POOLS = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789",
    "{}()[];,._=+-*/<>!&|%#:'\"@^~?",
    " \t",
    "αβγδΩλπ",
    "汉字编译运行",
    "éüñßø",
    "🚀✨",
)


def random_source(rng: random.Random, min_len: int = 16, max_len: int = 160) -> str:
    """Printable source text with tabs, CRLF line breaks and unicode mixed in."""
    length = rng.randint(min_len, max_len)
    chars = []
    while len(chars) < length:
        pool = rng.choice(_UNICODE_POOLS)
        chars.append(rng.choice(pool))
        if rng.random() < 0.06:
            chars.append(rng.choice(["\n", "\r\n"]))
    return "".join(chars)
