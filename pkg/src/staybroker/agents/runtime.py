"""Binds a conversation logic object to a mailbox on the bus.

The runtime is the only place where envelopes get their msg_id, logical
timestamp, and MAC; logic classes stay pure. One runtime = one agent =
one mailbox, handled strictly sequentially by the transport.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass, field
from typing import Callable

from ..errors import StayBrokerError
from ..protocol.config import ProtocolConfig
from ..protocol.envelope import Envelope
from ..protocol.events import Command, Fault, Outbound, TimerRequest
from ..router.bus import Router
from ..router.registry import AgentRecord


@dataclass
class AgentEnvironment:
    """Everything needed to spawn agents into one system.

    `rng_seed` of None means non-deterministic tokens and keys (live
    deployments); an integer derives per-agent streams so simulation runs
    replay bit-exactly.
    """

    router: Router
    store: object | None = None
    config: ProtocolConfig = field(default_factory=ProtocolConfig)
    rng_seed: int | None = None

    def key_for(self, agent_id: str) -> bytes:
        if self.rng_seed is None:
            import os

            return os.urandom(32)
        return hashlib.sha256(f"{self.rng_seed}|{agent_id}|key".encode()).digest()

    def token_source(self, agent_id: str) -> Callable[[], str]:
        if self.rng_seed is None:
            import secrets

            return lambda: secrets.token_hex(16)
        rng = random.Random(f"{self.rng_seed}|{agent_id}|tokens")
        return lambda: f"{rng.getrandbits(128):032x}"


class AgentRuntime:
    """Mailbox pump: receive an event, run the logic, execute its effects."""

    def __init__(self, env: AgentEnvironment, record: AgentRecord, logic):
        self.env = env
        self.router = env.router
        self.record = record
        self.logic = logic
        self.new_token = env.token_source(record.agent_id)
        self._msg_seq = itertools.count(1)
        handle = self.router.register(record)
        handle.bind(self.on_event)

    @property
    def agent_id(self) -> str:
        return self.record.agent_id

    def clock(self) -> int:
        return self.router.transport.clock()

    def on_event(self, event) -> None:
        try:
            effects = self.logic.handle(event, self.clock())
        except StayBrokerError as exc:
            self.router.note_event(
                {"event": "fault", "agent": self.agent_id, "reason": "handler-error",
                 "detail": str(exc)}
            )
            return
        for effect in effects:
            self._execute(effect)

    def _execute(self, effect) -> None:
        if isinstance(effect, Outbound):
            self.send(effect)
        elif isinstance(effect, TimerRequest):
            self.router.transport.schedule_timer(
                self.agent_id, effect.delay, dict(effect.payload)
            )
        elif isinstance(effect, Fault):
            self.router.note_event(
                {"event": effect.event, "agent": self.agent_id, **dict(effect.detail)}
            )

    def send(self, intent: Outbound) -> None:
        from ..router.auth import sign

        envelope = Envelope(
            msg_id=f"{self.agent_id}#{next(self._msg_seq):06d}",
            request_id=intent.request_id,
            sender=self.agent_id,
            receiver=intent.receiver,
            performative=intent.performative,
            body=dict(intent.body),
            sent_at=self.clock(),
        )
        result = self.router.send(sign(envelope, self.record.key))
        if not result.accepted:
            self.router.note_event(
                {"event": "fault", "agent": self.agent_id, "reason": "send-rejected",
                 "cause": result.reason, "msg_id": envelope.msg_id}
            )

    def post(self, command: Command) -> None:
        """Queue a command into this agent's mailbox (thread-safe)."""
        self.router.transport.inject(self.agent_id, command)
