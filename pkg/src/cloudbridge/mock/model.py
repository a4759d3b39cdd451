"""Data model for the simulated grading service: elements, pages, scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class ElementKind(str, Enum):
    INPUT = "input"
    BUTTON = "button"
    TEXT = "text"
    CODE_VIEW = "code-view"


# Interactability rules, total over kind x operation. Clicks land on buttons
# and on the code view (clicking it focuses the editor); per-element key
# dispatch is accepted by plain inputs only. The code view renders source via
# the site's own machinery and behaves like an anchor, not an input, so keys
# can only reach it through focused browser-level actions.
CLICKABLE_KINDS = frozenset({ElementKind.BUTTON, ElementKind.CODE_VIEW})
KEYABLE_KINDS = frozenset({ElementKind.INPUT})
FOCUS_TYPING_KINDS = frozenset({ElementKind.INPUT, ElementKind.CODE_VIEW})


@dataclass
class VirtualElement:
    """One addressable element of a virtual page.

    ``masked`` marks secret-bearing inputs; their typed text is redacted in
    every observable log and state dump.
    """

    name: str
    xpath: str
    kind: ElementKind
    css: str = ""
    value: str = ""
    focusable: bool = False
    masked: bool = False


@dataclass
class VirtualPage:
    """Template for a page: its elements plus per-element load delays.

    ``load_schedule`` maps element name to the delay (ms after navigation)
    before that element becomes findable. Elements without an entry are
    available immediately.
    """

    name: str
    url_path: str
    elements: list[VirtualElement] = field(default_factory=list)
    load_schedule: dict[str, int] = field(default_factory=dict)

    def element_names(self) -> list[str]:
        return [e.name for e in self.elements]


VALID_COMPILE_STATUSES = ("success", "compile_error", "runtime_error")


@dataclass(frozen=True)
class CompilerRule:
    """One canned-compiler rule: substring pattern -> (status, output).

    ``pattern=None`` is the terminal default rule that matches any source.
    """

    status: str
    output: str
    pattern: str | None = None

    def __post_init__(self) -> None:
        if self.status not in VALID_COMPILE_STATUSES:
            raise ValueError(f"unknown compile status {self.status!r}")

    def matches(self, source: str) -> bool:
        return self.pattern is None or self.pattern in source


def fake_compile(source: str, table: list[CompilerRule]) -> tuple[str, str]:
    """Run the canned compiler: first matching rule wins, deterministically."""
    for rule in table:
        if rule.matches(source):
            return rule.status, rule.output
    raise ValueError("compiler table has no terminal default rule")


DEFAULT_ACCOUNT = "student1"
DEFAULT_PASSWORD = "gpu-lab-pass-7"
DEFAULT_LAB = "mp1"
SEED_SOURCE = "// skeleton\n"

COMPILE_DONE_MARKER = "DONE"

TRIGGER_COMPILE_ERROR = "TRIGGER_COMPILE_ERROR"
TRIGGER_RUNTIME_ERROR = "TRIGGER_RUNTIME_ERROR"

SUCCESS_OUTPUT = (
    "Compilation finished without diagnostics.\n"
    "\n"
    "Correctness check passed on every dataset.\n"
    "Kernel timer total: 42.17 ms"
)
COMPILE_ERROR_OUTPUT = (
    'program.cu(14): error: expected a ";"\n'
    "\n"
    '1 error detected in the compilation of "program.cu".'
)
RUNTIME_ERROR_OUTPUT = (
    "Device error at program.cu:27 (unspecified launch failure)\n"
    "\n"
    "Process exited with a non-zero status."
)


def default_compiler_table() -> list[CompilerRule]:
    return [
        CompilerRule("compile_error", COMPILE_ERROR_OUTPUT, pattern=TRIGGER_COMPILE_ERROR),
        CompilerRule("runtime_error", RUNTIME_ERROR_OUTPUT, pattern=TRIGGER_RUNTIME_ERROR),
        CompilerRule("success", SUCCESS_OUTPUT, pattern=None),
    ]


@dataclass
class ServiceScenario:
    """Everything configurable about one simulated service run.

    ``latency_schedule`` maps page name -> element name -> materialization
    delay in ms. ``api_tokens`` maps opaque REST tokens to account names.
    A huge ``compile_duration_ms`` models a compile that never finishes.
    """

    ssl_fail: bool = False
    login_table: dict[str, str] = field(default_factory=lambda: {DEFAULT_ACCOUNT: DEFAULT_PASSWORD})
    program_store: dict[str, str] = field(default_factory=lambda: {DEFAULT_LAB: SEED_SOURCE})
    compiler_table: list[CompilerRule] = field(default_factory=default_compiler_table)
    latency_schedule: dict[str, dict[str, int]] = field(default_factory=dict)
    compile_duration_ms: int = 25
    api_tokens: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.compiler_table:
            raise ValueError("compiler_table must not be empty")
        if self.compiler_table[-1].pattern is not None:
            raise ValueError("compiler_table must end with a terminal default rule")
        for rule in self.compiler_table[:-1]:
            if rule.pattern is None:
                raise ValueError("only the last compiler rule may be the default rule")
        if self.compile_duration_ms < 0:
            raise ValueError("compile_duration_ms must be >= 0")
        for page, elems in self.latency_schedule.items():
            for elem, delay in elems.items():
                if delay < 0:
                    raise ValueError(f"negative delay for {page}/{elem}")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "ssl_fail": self.ssl_fail,
            "login_table": dict(self.login_table),
            "program_store": dict(self.program_store),
            "compiler_table": [
                {"status": r.status, "output": r.output, "pattern": r.pattern}
                for r in self.compiler_table
            ],
            "latency_schedule": {p: dict(e) for p, e in self.latency_schedule.items()},
            "compile_duration_ms": self.compile_duration_ms,
            "api_tokens": dict(self.api_tokens),
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "ServiceScenario":
        table = [
            CompilerRule(r["status"], r["output"], r.get("pattern"))
            for r in data.get("compiler_table", [])
        ] or default_compiler_table()
        return cls(
            ssl_fail=bool(data.get("ssl_fail", False)),
            login_table=dict(data.get("login_table", {DEFAULT_ACCOUNT: DEFAULT_PASSWORD})),
            program_store=dict(data.get("program_store", {DEFAULT_LAB: SEED_SOURCE})),
            compiler_table=table,
            latency_schedule={
                p: {e: int(d) for e, d in elems.items()}
                for p, elems in data.get("latency_schedule", {}).items()
            },
            compile_duration_ms=int(data.get("compile_duration_ms", 25)),
            api_tokens=dict(data.get("api_tokens", {})),
        )


def default_scenario() -> ServiceScenario:
    """The scenario every test starts from unless it says otherwise."""
    return ServiceScenario()
