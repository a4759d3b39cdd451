"""Authenticated REST client for downloading the server-side program source.

The site stores one source text per lab and exposes it read-only at
``GET {base_url}/api/labs/{lab_id}/program`` as ``{"code": "..."}``.
Uploading has no API; that direction goes through browser automation.
Content is treated as opaque UTF-8 text: no newline normalization anywhere,
what the server stores is exactly what lands on disk.
"""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import requests

from .errors import CommandTimeoutError, NotFoundError, ProtocolError, TransportError, UnauthorizedError

logger = logging.getLogger(__name__)

DEFAULT_REQUEST_TIMEOUT_MS = 30_000


@dataclass(frozen=True)
class SourceDocument:
    """One fetched program text, byte-exact as stored on the server."""

    lab_id: str
    content: str
    fetched_at: datetime


@dataclass(frozen=True)
class AuthContext:
    """Service credentials. The password never appears in reprs or logs."""

    account: str
    password: str = field(repr=False)
    session_token: str | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not self.account:
            raise ValueError("account must be non-empty")


def fetch_program(
    base_url: str,
    auth: AuthContext,
    lab_id: str,
    timeout_ms: int = DEFAULT_REQUEST_TIMEOUT_MS,
) -> SourceDocument:
    """Download the current stored source for ``lab_id``.

    Authentication is a session token header when ``auth.session_token`` is
    set, HTTP Basic otherwise.
    """
    url = f"{base_url.rstrip('/')}/api/labs/{lab_id}/program"
    kwargs: dict = {"timeout": timeout_ms / 1000.0}
    if auth.session_token is not None:
        kwargs["headers"] = {"X-Session-Token": auth.session_token}
    else:
        kwargs["auth"] = (auth.account, auth.password)

    logger.debug("pulling lab %s from %s", lab_id, url)
    try:
        resp = requests.get(url, **kwargs)
    except requests.exceptions.Timeout as exc:
        raise CommandTimeoutError(f"pull of {lab_id!r} timed out") from exc
    except requests.exceptions.RequestException as exc:
        raise TransportError(f"pull of {lab_id!r} failed: {exc}") from exc

    if resp.status_code == 401:
        raise UnauthorizedError(f"service rejected credentials for account {auth.account!r}")
    if resp.status_code == 404:
        raise NotFoundError(f"no lab {lab_id!r} on the service")
    if resp.status_code != 200:
        raise ProtocolError(f"pull of {lab_id!r}: unexpected status {resp.status_code}")
    try:
        payload = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"pull of {lab_id!r}: response is not JSON") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("code"), str):
        raise ProtocolError(f"pull of {lab_id!r}: response lacks a 'code' string")

    return SourceDocument(
        lab_id=lab_id,
        content=payload["code"],
        fetched_at=datetime.now(timezone.utc),
    )


def write_workspace(doc: SourceDocument, path: str | Path) -> None:
    """Write the document to ``path``, atomically replacing prior content.

    The text goes through a temp file in the same directory and an
    ``os.replace``, so readers never observe a half-written file.
    """
    target = Path(path)
    data = doc.content.encode("utf-8")
    fd, tmp_name = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
