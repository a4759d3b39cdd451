"""Exception hierarchy shared by every layer of the bridge."""

from __future__ import annotations


class BridgeError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class ConfigError(BridgeError):
    """Configuration could not be parsed or failed validation."""

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None) -> None:
        self.key = key
        self.line = line
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if key is not None:
            prefix.append(f"key '{key}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Transport and protocol
# ---------------------------------------------------------------------------

class TransportError(BridgeError):
    """The HTTP exchange itself failed (refused, reset, unreachable)."""


class CommandTimeoutError(TransportError):
    """The remote did not answer within the configured command timeout."""


class ProtocolError(BridgeError):
    """The remote answered, but the payload violates the wire format."""


class SessionClosedError(BridgeError):
    """A command was issued on a locally closed session; nothing was sent."""


class InvalidUrlError(BridgeError):
    """Navigation target is not a syntactically valid http(s) URL."""


class ActionSequenceError(BridgeError):
    """An action sequence violates its invariants; nothing was sent."""


# ---------------------------------------------------------------------------
# Errors reported by the remote automation end
# ---------------------------------------------------------------------------

class RemoteError(BridgeError):
    """Error descriptor returned by the automation server.

    ``code`` is the protocol error string (e.g. ``"no such element"``),
    ``http_status`` the status of the carrying response.
    """

    def __init__(self, code: str, message: str, http_status: int) -> None:
        self.code = code
        self.message = message
        self.http_status = http_status
        super().__init__(f"{code}: {message}" if message else code)


class SessionNotCreatedError(RemoteError):
    """Capabilities were rejected; no session exists."""


class StaleSessionError(RemoteError):
    """The session id is no longer known to the remote."""


class NoSuchElementError(RemoteError):
    """No element matched the locator at lookup time."""


class StaleElementError(RemoteError):
    """The element reference was invalidated by a page transition."""


class ElementNotInteractableError(RemoteError):
    """The element kind rejects this operation (click vs. keys)."""


class InvalidArgumentError(RemoteError):
    """The remote rejected a malformed or unknown argument."""


class InvalidElementStateError(RemoteError):
    """Operation requires element state that does not hold (e.g. focus)."""


_REMOTE_ERROR_CODES = {
    "session not created": SessionNotCreatedError,
    "invalid session id": StaleSessionError,
    "no such element": NoSuchElementError,
    "stale element reference": StaleElementError,
    "element not interactable": ElementNotInteractableError,
    "invalid argument": InvalidArgumentError,
    "invalid element state": InvalidElementStateError,
}


def remote_error(code: str, message: str, http_status: int) -> RemoteError:
    """Build the most specific exception class for a remote error code."""
    cls = _REMOTE_ERROR_CODES.get(code, RemoteError)
    return cls(code, message, http_status)


# ---------------------------------------------------------------------------
# Element waits
# ---------------------------------------------------------------------------

class ElementWaitTimeout(BridgeError):
    """The element did not appear within the wait budget."""

    def __init__(self, locator: object, waited_ms: float) -> None:
        self.locator = locator
        self.waited_ms = waited_ms
        super().__init__(f"element {locator} absent after {waited_ms:.0f} ms")


# ---------------------------------------------------------------------------
# REST pull
# ---------------------------------------------------------------------------

class UnauthorizedError(BridgeError):
    """The service rejected the supplied credentials or token."""


class NotFoundError(BridgeError):
    """The requested resource does not exist on the service."""


# ---------------------------------------------------------------------------
# Workflow
# ---------------------------------------------------------------------------

class IllegalStateError(BridgeError):
    """A workflow operation was called out of phase; nothing was mutated."""

    def __init__(self, operation: str, phase: str) -> None:
        self.operation = operation
        self.phase = phase
        super().__init__(f"operation '{operation}' is illegal in phase '{phase}'")


class SessionCreationError(BridgeError):
    """The automation session could not be opened during start."""


class BadCredentialsError(BridgeError):
    """The site rejected the configured account/password."""


class LabNotFoundError(BridgeError):
    """The configured lab does not exist on the site."""


class InterstitialBypassError(BridgeError):
    """The certificate-warning interstitial could not be dismissed."""


# ---------------------------------------------------------------------------
# Mock service
# ---------------------------------------------------------------------------

class BindFailureError(BridgeError):
    """The mock service could not bind its listen address."""
