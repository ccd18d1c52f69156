"""The router proper: verify, authorize, trace, deliver."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable

from ..protocol.envelope import Envelope, envelope_to_wire
from .auth import verify
from .permissions import PermissionMatrix
from .registry import AgentRecord, Registry


@dataclass(frozen=True)
class SendResult:
    accepted: bool
    reason: str | None = None  # "auth" | "permission" | "routing" on rejection


class AgentHandle:
    """What registration returns: the agent's attachment point to the bus."""

    def __init__(self, router: "Router", record: AgentRecord):
        self.router = router
        self.record = record

    @property
    def agent_id(self) -> str:
        return self.record.agent_id

    def bind(self, handler: Callable) -> None:
        self.router.transport.bind(self.record.agent_id, handler)


class Router:
    """Single enforcement point for authentication and role permissions.

    Every accepted envelope and every security event lands in `trace`, in
    acceptance order, as plain wire dicts.
    """

    def __init__(self, transport, permissions: PermissionMatrix | None = None):
        self.transport = transport
        self.permissions = permissions or PermissionMatrix()
        self.registry = Registry()
        self.trace: list[dict] = []
        self._trace_lock = threading.Lock()

    # -- registry ------------------------------------------------------------

    def register(self, record: AgentRecord) -> AgentHandle:
        self.registry.add(record)
        return AgentHandle(self, record)

    def roster(self, zone_id: str) -> list[str]:
        return self.registry.roster(zone_id)

    def zones(self) -> list[str]:
        return self.registry.zones()

    def za_ids(self) -> list[str]:
        return self.registry.za_ids()

    @property
    def na_id(self) -> str | None:
        return self.registry.na_id

    def zone_of(self, agent_id: str) -> str | None:
        return self.registry.zone_of(agent_id)

    # -- trace ----------------------------------------------------------------

    def note_event(self, record: dict) -> None:
        with self._trace_lock:
            self.trace.append(dict(record))

    def _note_rejection(self, envelope: Envelope, reason: str) -> SendResult:
        self.note_event(
            {"event": "rejected", "reason": reason, "envelope": envelope_to_wire(envelope)}
        )
        return SendResult(False, reason)

    # -- the security gate ------------------------------------------------------

    def send(self, envelope: Envelope) -> SendResult:
        sender = self.registry.get(envelope.sender)
        if sender is None:
            return self._note_rejection(envelope, "routing")
        if not verify(envelope, sender.key):
            return self._note_rejection(envelope, "auth")
        receiver = self.registry.get(envelope.receiver)
        if receiver is None:
            return self._note_rejection(envelope, "routing")
        if not self.permissions.allows(sender.role, receiver.role):
            return self._note_rejection(envelope, "permission")
        with self._trace_lock:
            self.trace.append(envelope_to_wire(envelope))
        self.transport.deliver(envelope)
        return SendResult(True)
