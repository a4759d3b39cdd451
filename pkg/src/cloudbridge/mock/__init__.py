"""Hermetic simulator of the remote grading service.

Serves the automation wire protocol, a virtual page model of the site
(login, certificate interstitial, lab editor, compile flow), a canned-rule
compiler, the REST pull endpoint, and latency/fault injection. Everything
tests need to observe is exposed through :func:`MockServer.dump_state`.
"""

from .model import (
    CompilerRule,
    ElementKind,
    ServiceScenario,
    VirtualElement,
    VirtualPage,
    default_scenario,
    fake_compile,
    DEFAULT_ACCOUNT,
    DEFAULT_PASSWORD,
    DEFAULT_LAB,
    SEED_SOURCE,
    COMPILE_DONE_MARKER,
)
from .machine import SiteModel, BrowserSessionState
from .server import MockServer, serve

__all__ = [
    "BrowserSessionState",
    "CompilerRule",
    "COMPILE_DONE_MARKER",
    "DEFAULT_ACCOUNT",
    "DEFAULT_LAB",
    "DEFAULT_PASSWORD",
    "ElementKind",
    "MockServer",
    "SEED_SOURCE",
    "ServiceScenario",
    "SiteModel",
    "VirtualElement",
    "VirtualPage",
    "default_scenario",
    "fake_compile",
    "serve",
]
