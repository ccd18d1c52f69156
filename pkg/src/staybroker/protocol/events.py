"""Event and effect types exchanged between agent logic and its runtime.

Logic classes are pure: they consume an Envelope, Timer, or Command and
return Outbound / TimerRequest / Fault effects for the runtime to execute.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Mapping


@dataclass(frozen=True)
class Outbound:
    """An envelope to send; the runtime stamps ids, time, and the MAC."""

    receiver: str
    performative: str
    request_id: str
    body: Mapping[str, Any]


@dataclass(frozen=True)
class TimerRequest:
    """Ask the runtime to deliver Timer(payload) after `delay` logical units."""

    delay: int
    payload: Mapping[str, Any]


@dataclass(frozen=True)
class Timer:
    payload: Mapping[str, Any]


@dataclass(frozen=True)
class Fault:
    """A protocol irregularity worth tracing (late reply, unknown id, ...)."""

    event: str
    detail: Mapping[str, Any]


class Ticket:
    """Completion handle for a command; usable from sim and live transports."""

    def __init__(self):
        self._event = threading.Event()
        self.outcome: dict | None = None

    def resolve(self, outcome: dict) -> None:
        self.outcome = outcome
        self._event.set()

    def wait(self, timeout: float | None = None) -> dict | None:
        self._event.wait(timeout)
        return self.outcome

    @property
    def done(self) -> bool:
        return self._event.is_set()


@dataclass(frozen=True)
class Command:
    """An instruction injected from outside the message bus (UI, scripts)."""

    name: str
    payload: Mapping[str, Any] = field(default_factory=dict)
    ticket: Ticket | None = None
