"""cloudbridge: edit locally, compile on a web-fronted grading service.

The package drives a remote browser-automation endpoint to log in, paste
local source into the site's editor, trigger compile-and-run, and read the
filtered result back; the server-side copy is pulled over the site's REST
API. A hermetic simulator of the whole remote end ships in
:mod:`cloudbridge.mock` so every workflow is testable offline.
"""

from .config import RemoteConfig, load_config
from .elements import ActionSequence, ElementRef, Locator, WaitPolicy
from .pull import AuthContext, SourceDocument, fetch_program, write_workspace
from .wire import Session, SessionCapabilities, WireCommand, WireResponse
from .workflow import (
    CloudBridge,
    CompileReport,
    CompileStatus,
    OutputChannel,
    WorkflowPhase,
    run_cycle,
    start,
)

__all__ = [
    "ActionSequence",
    "AuthContext",
    "CloudBridge",
    "CompileReport",
    "CompileStatus",
    "ElementRef",
    "Locator",
    "OutputChannel",
    "RemoteConfig",
    "Session",
    "SessionCapabilities",
    "SourceDocument",
    "WaitPolicy",
    "WireCommand",
    "WireResponse",
    "WorkflowPhase",
    "fetch_program",
    "load_config",
    "run_cycle",
    "start",
    "write_workspace",
]

__version__ = "0.1.0"
