"""Session tokens for users and guesthouse administrators."""

from __future__ import annotations

import hashlib
import secrets
import time
from dataclasses import dataclass

from ..agents.topology import Topology


def _hash(salt: bytes, password: str) -> bytes:
    return hashlib.sha256(salt + password.encode("utf-8")).digest()


@dataclass(frozen=True)
class Principal:
    kind: str  # "user" | "admin"
    id: str  # user id, or guesthouse id for admins


class SessionManager:
    """Credential table plus bearer-token sessions with expiry.

    Default credentials (documented for demo setups): a user's password is
    their user id, an administrator's is "admin-<guesthouse_id>"; topology
    files override both.
    """

    def __init__(self, topology: Topology, ttl_seconds: float = 3600.0):
        self.ttl = ttl_seconds
        self._credentials: dict[tuple[str, str], tuple[bytes, bytes]] = {}
        self._sessions: dict[str, tuple[Principal, float]] = {}
        for user in topology.users:
            self._set_credential("user", user.user_id, user.password or user.user_id)
        for spec in topology.guesthouses:
            gh = spec.profile.guesthouse_id
            self._set_credential("admin", gh, spec.admin_password or f"admin-{gh}")

    def _set_credential(self, kind: str, principal_id: str, password: str) -> None:
        salt = secrets.token_bytes(16)
        self._credentials[(kind, principal_id)] = (salt, _hash(salt, password))

    def login(self, kind: str, principal_id: str, password: str) -> str | None:
        stored = self._credentials.get((kind, principal_id))
        if stored is None:
            return None
        salt, digest = stored
        if not secrets.compare_digest(digest, _hash(salt, password)):
            return None
        token = secrets.token_hex(16)
        self._sessions[token] = (Principal(kind, principal_id), time.monotonic() + self.ttl)
        return token

    def principal(self, token: str | None) -> Principal | None:
        if not token:
            return None
        entry = self._sessions.get(token)
        if entry is None:
            return None
        principal, expires = entry
        if time.monotonic() > expires:
            del self._sessions[token]
            return None
        return principal
