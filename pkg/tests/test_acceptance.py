"""Acceptance suite: one test per criterion, hermetic against the bundled mock.

The conftest hook prints one PASS/FAIL line per test here at the end of the
run, so this module doubles as the release gate checklist.
"""

from __future__ import annotations

import logging
import random
import time

import pytest

from cloudbridge import elements, wire
from cloudbridge.elements import Locator, WaitPolicy
from cloudbridge.errors import ElementNotInteractableError, IllegalStateError
from cloudbridge.mock import DEFAULT_PASSWORD, ServiceScenario, serve
from cloudbridge.workflow import (
    CloudBridge,
    CompileStatus,
    get_output_channel,
    run_cycle,
)

from helpers import (
    assert_strict_alternation,
    make_config,
    open_lab,
    open_session,
    quick_find,
    random_action_sequence,
    random_source,
    session_log_streams,
)

pytestmark = pytest.mark.acceptance


# ---------------------------------------------------------------------------
# Criterion: full-cycle E2E, 20 times, < 5 s each, no leaked sessions, no flakes
# ---------------------------------------------------------------------------

def test_full_cycle_e2e_20_runs_under_5s_each(tmp_path):
    source = tmp_path / "kernel.cu"
    source.write_bytes(b"__global__ void k() {}\nint main() { return 0; }\n")
    with serve() as server:
        config = make_config(server, tmp_path)
        for run in range(20):
            started = time.monotonic()
            report = run_cycle(config, source)
            elapsed = time.monotonic() - started
            assert report.status is CompileStatus.SUCCESS, f"run {run} failed"
            assert elapsed < 5.0, f"run {run} took {elapsed:.2f}s"
            assert server.dump_state()["sessions"] == [], f"run {run} leaked a session"


# ---------------------------------------------------------------------------
# Criterion: wait semantics — explicit [200, 400] ms, whole-page wait >= 1000 ms
# ---------------------------------------------------------------------------

def test_wait_semantics_explicit_vs_whole_page():
    scenario = ServiceScenario(latency_schedule={"login": {"username": 200, "login": 1000}})
    target = Locator.xpath("//input[@id='username']")

    with serve(scenario) as server:
        session = open_session(server, implicit_wait_ms=0)
        started = time.monotonic()
        wire.navigate(session, server.base_url)
        elements.find_element(session, target, WaitPolicy.explicit(5_000, 50))
        explicit_ms = (time.monotonic() - started) * 1000
        wire.delete_session(session)

        session = open_session(server, implicit_wait_ms=5_000)
        started = time.monotonic()
        wire.navigate(session, server.base_url)
        elements.find_element(session, target, WaitPolicy.implicit(5_000))
        implicit_ms = (time.monotonic() - started) * 1000
        wire.delete_session(session)

    assert 200 <= explicit_ms <= 400, f"explicit wait took {explicit_ms:.0f} ms"
    assert 1000 <= implicit_ms <= 1200, f"whole-page wait took {implicit_ms:.0f} ms"


# ---------------------------------------------------------------------------
# Criterion: train atomicity over 100 randomized action sequences
# ---------------------------------------------------------------------------

def test_train_atomicity_100_randomized_sequences():
    rng = random.Random(777)
    with serve() as server:
        session = open_session(server)
        open_lab(session, server.base_url)
        refs = [
            quick_find(session, "//*[@id='editor']"),
            quick_find(session, "//button[@id='compile']"),
            quick_find(session, "//button[@id='all-tests']"),
        ]
        violations = 0
        for _ in range(100):
            seq = random_action_sequence(rng, refs)
            before = len(server.dump_state()["actions_requests"])
            elements.perform_actions(session, seq)
            actions = server.dump_state()["actions_requests"]
            if len(actions) != before + 1:
                violations += 1
            elif actions[-1]["steps"] != seq.canonical_steps():
                violations += 1
        wire.delete_session(session)
    assert violations == 0


# ---------------------------------------------------------------------------
# Criterion: interactability table, all 8 kind x operation cases
# ---------------------------------------------------------------------------

def test_interactability_table_all_8_cases():
    # kind -> (click accepted, per-element keys accepted)
    table = {
        "input": (False, True),
        "button": (True, False),
        "text": (False, False),
        "code-view": (True, False),
    }
    with serve() as server:
        login_session = open_session(server)
        wire.navigate(login_session, server.base_url)
        lab_session = open_session(server)
        open_lab(lab_session, server.base_url)
        refs = {
            "input": (login_session, quick_find(login_session, "//input[@id='username']")),
            "button": (lab_session, quick_find(lab_session, "//button[@id='all-tests']")),
            "text": (lab_session, quick_find(lab_session, "//*[@id='output']")),
            "code-view": (lab_session, quick_find(lab_session, "//*[@id='editor']")),
        }
        observed = {}
        for kind, (session, ref) in refs.items():
            try:
                elements.click(session, ref)
                click_ok = True
            except ElementNotInteractableError:
                click_ok = False
            try:
                elements.send_keys_to_element(session, ref, "x")
                keys_ok = True
            except ElementNotInteractableError:
                keys_ok = False
            observed[kind] = (click_ok, keys_ok)
        wire.delete_session(login_session)
        wire.delete_session(lab_session)
    assert observed == table
    assert observed["button"][1] is False and observed["code-view"][1] is False


# ---------------------------------------------------------------------------
# Criterion: SSL bypass adds exactly two interstitial clicks
# ---------------------------------------------------------------------------

def test_ssl_bypass_exactly_two_extra_clicks(tmp_path):
    def login_clicks(ssl_fail: bool) -> list[dict]:
        with serve(ServiceScenario(ssl_fail=ssl_fail)) as server:
            bridge = CloudBridge(make_config(server, tmp_path)).start()
            bridge.login()
            bridge.exit()
            return [e for e in server.dump_state()["events"] if e["kind"] == "click"]

    plain = login_clicks(False)
    bypassed = login_clicks(True)
    extra = [e for e in bypassed if e["page"] == "interstitial"]
    assert len(bypassed) == len(plain) + 2
    assert [e["target"] for e in extra] == ["advanced", "proceed"]


# ---------------------------------------------------------------------------
# Criteria: cross-path consistency and echo filtering over 50 random sources
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def fifty_source_runs(tmp_path_factory):
    """Push 50 random sources once; both content criteria read these results."""
    tmp_path = tmp_path_factory.mktemp("sources")
    rng = random.Random(0x5EED)
    sources = [random_source(rng) for _ in range(50)]
    runs = []
    with serve(ServiceScenario(compile_duration_ms=5)) as server:
        config = make_config(server, tmp_path, explicit_poll_ms=20)
        bridge = CloudBridge(config).start()
        bridge.login()
        for i, text in enumerate(sources):
            path = tmp_path / f"src_{i}.cu"
            path.write_bytes(text.encode("utf-8"))
            report = bridge.push(path)
            pulled = bridge.pull()
            echo = server.dump_state()["sessions_detail"][
                bridge.session.session_id]["page"]["elements"]["code_echo"]
            runs.append({
                "source": text,
                "report": report,
                "pulled": pulled.content,
                "echo": echo,
            })
        bridge.exit()
    return runs


def test_cross_path_consistency_50_sources(fifty_source_runs):
    for i, run in enumerate(fifty_source_runs):
        assert run["report"].status is CompileStatus.SUCCESS, f"source {i} did not compile"
        assert run["pulled"] == run["source"], f"source {i} did not round-trip byte-exact"


def test_echo_filtering_50_sources(fifty_source_runs):
    for i, run in enumerate(fifty_source_runs):
        assert run["echo"] == run["source"], f"source {i}: echo element lost the source"
        for message in run["report"].messages:
            assert run["source"] not in message, f"source {i} leaked into the report"


# ---------------------------------------------------------------------------
# Criterion: state-machine legality, exhaustive (phase x operation) grid
# ---------------------------------------------------------------------------

def test_state_machine_legality_exhaustive_grid(tmp_path):
    phases = ("uninitialized", "initialized", "logged_in", "closed")
    operations = ("start", "login", "pull", "push", "exit")
    legal = {
        ("uninitialized", "start"),
        ("initialized", "login"),
        ("logged_in", "pull"),
        ("logged_in", "push"),
    } | {(phase, "exit") for phase in phases}

    source = tmp_path / "grid.cu"
    source.write_bytes(b"grid\n")

    with serve() as server:
        config = make_config(server, tmp_path)

        def bridge_in(phase: str) -> CloudBridge:
            bridge = CloudBridge(config)
            if phase == "uninitialized":
                return bridge
            bridge.start()
            if phase == "initialized":
                return bridge
            if phase == "logged_in":
                bridge.login()
                return bridge
            bridge.exit()
            return bridge

        for phase in phases:
            for op in operations:
                bridge = bridge_in(phase)
                call = {
                    "start": bridge.start,
                    "login": bridge.login,
                    "pull": bridge.pull,
                    "push": lambda b=bridge: b.push(source),
                    "exit": bridge.exit,
                }[op]
                if (phase, op) in legal:
                    call()
                else:
                    before_phase = bridge.phase
                    before = server.dump_state()
                    with pytest.raises(IllegalStateError):
                        call()
                    after = server.dump_state()
                    assert bridge.phase is before_phase, (phase, op)
                    assert len(after["request_log"]) == len(before["request_log"]), (phase, op)
                    assert after["events"] == before["events"], (phase, op)
                    assert after["program_store"] == before["program_store"], (phase, op)
                bridge.exit()
        assert server.dump_state()["sessions"] == []


# ---------------------------------------------------------------------------
# Criterion: strict request/response alternation over a 100-command fuzz run
# ---------------------------------------------------------------------------

def test_sequencing_100_command_fuzz():
    rng = random.Random(0xFADE)
    with serve() as server:
        session = open_session(server)
        wire.navigate(session, server.base_url)
        username = Locator.xpath("//input[@id='username']")
        commands = (
            lambda: wire.current_url(session),
            lambda: wire.navigate(session, server.base_url),
            lambda: elements.probe_element(session, username),
            lambda: wire.execute_command(session, wire.WireCommand("GET", "/status")),
            lambda: wire.execute_command(
                session, wire.WireCommand("POST", session.path("/timeouts"), {"implicit": 0})),
        )
        for _ in range(100):
            rng.choice(commands)()
        wire.delete_session(session)
        log = server.dump_state()["request_log"]
    for entries in session_log_streams(log).values():
        assert_strict_alternation(entries)
    stamps = [e["ts_ns"] for e in log]
    assert stamps == sorted(stamps) and len(set(stamps)) == len(stamps)


# ---------------------------------------------------------------------------
# Criterion: secrecy — the password never surfaces in logs, reports or channel
# ---------------------------------------------------------------------------

def test_secrecy_password_never_surfaces(tmp_path, caplog, capsys):
    source = tmp_path / "quiet.cu"
    source.write_bytes(b"int main() {}\n")
    with serve() as server:
        config = make_config(server, tmp_path)
        with caplog.at_level(logging.DEBUG):
            report = run_cycle(config, source)
            bridge = CloudBridge(config).start()
            bridge.login()
            bridge.pull()
            bridge.exit()
        dump = server.dump_state()

    captured = capsys.readouterr()
    surfaces = [
        caplog.text,
        captured.out,
        captured.err,
        "\n".join(get_output_channel("WebGPU").lines),
        "\n".join(report.messages),
        repr(dump),
        repr(config),
    ]
    for surface in surfaces:
        assert DEFAULT_PASSWORD not in surface
