"""Configuration: a flat ``key = value`` text file, UTF-8, ``#`` comments.

Keys are the :class:`RemoteConfig` field names. The xpath override map is
spelled with dotted keys (``xpath_overrides.editor = //div[@id='ed']``).
The password may instead come from the ``CLOUDBRIDGE_PASSWORD`` environment
variable, which takes precedence over the file so the secret need not sit
on disk.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from urllib.parse import urlsplit

from .errors import ConfigError

PASSWORD_ENV_VAR = "CLOUDBRIDGE_PASSWORD"

DEFAULT_EXPLICIT_POLL_MS = 100
DEFAULT_IMPLICIT_WAIT_MS = 5_000
DEFAULT_COMMAND_TIMEOUT_MS = 30_000
DEFAULT_COMPILE_TIMEOUT_MS = 60_000

_DURATION_KEYS = ("implicit_wait_ms", "explicit_poll_ms", "command_timeout_ms", "compile_timeout_ms")
_BOOL_KEYS = ("headless",)
_BROWSERS = ("mock", "external")
_MODIFIER_KEYS = ("META", "CONTROL")


@dataclass
class RemoteConfig:
    """Everything the bridge needs to know about one remote setup."""

    account: str
    password: str = field(repr=False)
    base_url: str
    lab_id: str
    automation_endpoint: str
    workspace_file: Path
    browser: str = "mock"
    headless: bool = True
    implicit_wait_ms: int = DEFAULT_IMPLICIT_WAIT_MS
    explicit_poll_ms: int = DEFAULT_EXPLICIT_POLL_MS
    command_timeout_ms: int = DEFAULT_COMMAND_TIMEOUT_MS
    compile_timeout_ms: int = DEFAULT_COMPILE_TIMEOUT_MS
    modifier_key: str = "META"
    session_token: str | None = field(default=None, repr=False)
    xpath_overrides: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.account:
            raise ConfigError("must be non-empty", key="account")
        if not self.password:
            raise ConfigError(
                f"must be non-empty (file key or {PASSWORD_ENV_VAR})", key="password"
            )
        if not self.lab_id:
            raise ConfigError("must be non-empty", key="lab_id")
        for key in ("base_url", "automation_endpoint"):
            url = getattr(self, key)
            parts = urlsplit(url)
            if parts.scheme not in ("http", "https") or not parts.netloc:
                raise ConfigError(f"not an absolute http(s) URL: {url!r}", key=key)
        if not str(self.workspace_file):
            raise ConfigError("must be non-empty", key="workspace_file")
        if self.browser not in _BROWSERS:
            raise ConfigError(f"must be one of {_BROWSERS}", key="browser")
        if self.modifier_key not in _MODIFIER_KEYS:
            raise ConfigError(f"must be one of {_MODIFIER_KEYS}", key="modifier_key")
        for key in _DURATION_KEYS:
            if getattr(self, key) <= 0:
                raise ConfigError("duration must be positive", key=key)


_REQUIRED_KEYS = ("account", "base_url", "lab_id", "automation_endpoint", "workspace_file")
_STRING_KEYS = ("account", "password", "base_url", "lab_id", "automation_endpoint",
                "browser", "modifier_key", "session_token")


def _parse_bool(raw: str, key: str, line: int) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}", key=key, line=line)


def _parse_int(raw: str, key: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"not an integer: {raw!r}", key=key, line=line) from None


def load_config(path: str | Path) -> RemoteConfig:
    """Parse and validate a config file, applying documented defaults.

    Raises ``ConfigError`` with line/key diagnostics on parse failures and
    with the offending key name on validation failures.
    """
    text = Path(path).read_text(encoding="utf-8")
    values: dict[str, object] = {}
    overrides: dict[str, str] = {}

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("expected 'key = value'", line=lineno)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("empty key", line=lineno)

        if key.startswith("xpath_overrides."):
            overrides[key[len("xpath_overrides."):]] = value
        elif key in _DURATION_KEYS:
            values[key] = _parse_int(value, key, lineno)
        elif key in _BOOL_KEYS:
            values[key] = _parse_bool(value, key, lineno)
        elif key == "workspace_file":
            values[key] = Path(value)
        elif key in _STRING_KEYS:
            values[key] = value
        else:
            raise ConfigError("unknown configuration key", key=key, line=lineno)

    env_password = os.environ.get(PASSWORD_ENV_VAR)
    if env_password:
        values["password"] = env_password
    values.setdefault("password", "")

    for key in _REQUIRED_KEYS:
        if key not in values:
            raise ConfigError("required key is missing", key=key)

    config = RemoteConfig(xpath_overrides=overrides, **values)  # type: ignore[arg-type]
    config.validate()
    return config


def dump_config(config: RemoteConfig) -> str:
    """Serialize a config back to the flat file format (round-trip safe)."""
    lines = []
    for f in fields(RemoteConfig):
        value = getattr(config, f.name)
        if f.name == "xpath_overrides":
            for name in sorted(value):
                lines.append(f"xpath_overrides.{name} = {value[name]}")
        elif value is None:
            continue
        elif isinstance(value, bool):
            lines.append(f"{f.name} = {'true' if value else 'false'}")
        else:
            lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
