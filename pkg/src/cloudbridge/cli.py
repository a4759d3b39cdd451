"""Command-line interface for the bridge.

Subcommands mirror the workflow operations::

    cloudbridge login  --config bridge.conf
    cloudbridge pull   --config bridge.conf
    cloudbridge push FILE --config bridge.conf [--format json]
    cloudbridge exit   --config bridge.conf
    cloudbridge run FILE --config bridge.conf
    cloudbridge serve-mock [--port N] [--scenario FILE]

login/pull/push/exit span separate processes, so the live session is kept in
a small state file next to the config (override with --state-file); ``run``
performs a full cycle in one process and needs no state.

Exit codes: 0 success, 1 usage (including out-of-order commands and missing
push files), 2 configuration (including an unknown lab), 3 authentication,
4 compile or runtime error reported by the service, 5 transport/timeout.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
from pathlib import Path

from .config import RemoteConfig, load_config
from .errors import (
    BadCredentialsError,
    BridgeError,
    ConfigError,
    IllegalStateError,
    LabNotFoundError,
    NotFoundError,
    UnauthorizedError,
)
from .mock import ServiceScenario, default_scenario, serve
from .wire import Session, SessionCapabilities
from .workflow import CloudBridge, CompileReport, CompileStatus, WorkflowPhase

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_AUTH = 3
EXIT_COMPILE = 4
EXIT_TRANSPORT = 5


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this CLI documents 1.
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cloudbridge", description="Edit locally, compile on the service.")
    parser.add_argument("--config", default="cloudbridge.conf", help="config file path")
    parser.add_argument("--state-file", default=None,
                        help="session state file (default: <config>.state)")
    parser.add_argument("--format", choices=("text", "json"), default="text",
                        help="report format for push/run")
    parser.add_argument("--verbose", action="store_true", help="debug logging to stderr")

    sub = parser.add_subparsers(dest="command")
    sub.add_parser("login", help="open a session and log in to the site")
    sub.add_parser("pull", help="download the server-side source to the workspace file")
    push = sub.add_parser("push", help="compile and run a local file on the service")
    push.add_argument("file", help="source file to push")
    sub.add_parser("exit", help="close the session")
    run = sub.add_parser("run", help="full cycle: login, push, exit")
    run.add_argument("file", help="source file to push")
    mock = sub.add_parser("serve-mock", help="run the bundled service simulator")
    mock.add_argument("--port", type=int, default=8753)
    mock.add_argument("--host", default="127.0.0.1")
    mock.add_argument("--scenario", default=None, help="scenario JSON file")
    return parser


# ---------------------------------------------------------------------------
# Session state across invocations
# ---------------------------------------------------------------------------

def _state_path(args: argparse.Namespace) -> Path:
    if args.state_file:
        return Path(args.state_file)
    return Path(str(args.config) + ".state")


def _save_state(path: Path, bridge: CloudBridge) -> None:
    assert bridge.session is not None
    payload = {
        "phase": bridge.phase.value,
        "endpoint": bridge.session.endpoint,
        "session_id": bridge.session.session_id,
        "capabilities": {
            "browser_name": bridge.session.capabilities.browser_name,
            "headless": bridge.session.capabilities.headless,
            "implicit_wait_ms": bridge.session.capabilities.implicit_wait_ms,
        },
    }
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")


def _restore_bridge(config: RemoteConfig, path: Path) -> CloudBridge:
    if not path.exists():
        raise IllegalStateError("restore", WorkflowPhase.UNINITIALIZED.value)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        caps = SessionCapabilities(**payload["capabilities"])
        session = Session(payload["endpoint"], payload["session_id"], caps,
                          config.command_timeout_ms)
        phase = WorkflowPhase(payload["phase"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"corrupt state file {path}: {exc}") from exc
    bridge = CloudBridge(config)
    bridge.session = session
    bridge.phase = phase
    return bridge


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def _print_report(report: CompileReport, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report.as_dict()))
        return
    print(f"status: {report.status.value}")
    print(f"elapsed_ms: {report.elapsed_ms}")
    for block in report.messages:
        print()
        print(block)


def _report_exit_code(report: CompileReport) -> int:
    if report.status is CompileStatus.SUCCESS:
        return EXIT_OK
    if report.status is CompileStatus.TIMEOUT:
        return EXIT_TRANSPORT
    return EXIT_COMPILE


def _error_exit_code(exc: BridgeError) -> int:
    if isinstance(exc, (BadCredentialsError, UnauthorizedError)):
        return EXIT_AUTH
    if isinstance(exc, (LabNotFoundError, NotFoundError, ConfigError)):
        return EXIT_CONFIG
    if isinstance(exc, IllegalStateError):
        return EXIT_USAGE
    return EXIT_TRANSPORT


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_login(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    bridge = CloudBridge(config)
    bridge.start()
    try:
        bridge.login()
    except BridgeError:
        bridge.exit()
        raise
    _save_state(_state_path(args), bridge)
    print(f"logged in as {config.account}, lab {config.lab_id}")
    return EXIT_OK


def _cmd_pull(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    bridge = _restore_bridge(config, _state_path(args))
    doc = bridge.pull()
    print(f"pulled {len(doc.content.encode('utf-8'))} bytes into {config.workspace_file}")
    return EXIT_OK


def _cmd_push(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    source = Path(args.file)
    if not source.is_file():
        print(f"no such file: {source}", file=sys.stderr)
        return EXIT_USAGE
    bridge = _restore_bridge(config, _state_path(args))
    report = bridge.push(source)
    _print_report(report, args.format)
    return _report_exit_code(report)


def _cmd_exit(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    state_path = _state_path(args)
    if state_path.exists():
        bridge = _restore_bridge(config, state_path)
        bridge.exit()
        state_path.unlink(missing_ok=True)
    print("session closed")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    from .workflow import run_cycle

    config = load_config(args.config)
    source = Path(args.file)
    if not source.is_file():
        print(f"no such file: {source}", file=sys.stderr)
        return EXIT_USAGE
    report = run_cycle(config, source)
    _print_report(report, args.format)
    return _report_exit_code(report)


def _cmd_serve_mock(args: argparse.Namespace) -> int:
    scenario: ServiceScenario
    if args.scenario:
        data = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
        scenario = ServiceScenario.from_json_dict(data)
    else:
        scenario = default_scenario()
    server = serve(scenario, host=args.host, port=args.port)
    print(f"mock service listening on {server.base_url}", flush=True)
    stop_signals = {signal.SIGINT, signal.SIGTERM}
    try:
        signal.pthread_sigmask(signal.SIG_BLOCK, stop_signals)
        signal.sigwait(stop_signals)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_OK


_COMMANDS = {
    "login": _cmd_login,
    "pull": _cmd_pull,
    "push": _cmd_push,
    "exit": _cmd_exit,
    "run": _cmd_run,
    "serve-mock": _cmd_serve_mock,
}


def cli_main(argv: list[str] | None = None) -> int:
    """Parse arguments, dispatch, and translate errors to documented exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr,
                            format="%(name)s %(levelname)s %(message)s", force=True)

    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IllegalStateError as exc:
        print(f"error: {exc} (run 'login' first?)", file=sys.stderr)
        return EXIT_USAGE
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _error_exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> int:
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
