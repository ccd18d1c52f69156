"""Deterministic single-threaded event-loop transport.

Deliveries are ordered by (arrival time, msg_id); timers and scripted
calls at the same instant run after deliveries. Per-link latency is drawn
from a seed-derived stream per (sender, receiver) pair, so a given seed
always replays the exact same trace.
"""

from __future__ import annotations

import heapq
import itertools
import random
from typing import Callable

from ..protocol.envelope import Envelope
from ..protocol.events import Timer

# Heap entry kinds; deliveries run before calls, calls before timers, when
# they share an instant.
_ENVELOPE, _CALL, _TIMER = 0, 1, 2


class SimTransport:
    def __init__(self, seed: int = 0, latency: str = "fixed"):
        if latency not in ("fixed", "seeded"):
            raise ValueError(f"latency mode must be 'fixed' or 'seeded', got {latency!r}")
        self.seed = seed
        self.latency = latency
        self._clock = 0
        self._heap: list = []
        self._seq = itertools.count()
        self._handlers: dict[str, Callable] = {}
        self._link_rngs: dict[tuple[str, str], random.Random] = {}

    # -- clock ------------------------------------------------------------

    def clock(self) -> int:
        return self._clock

    # -- wiring -----------------------------------------------------------

    def bind(self, agent_id: str, handler: Callable) -> None:
        self._handlers[agent_id] = handler

    def _delay(self, sender: str, receiver: str) -> int:
        if self.latency == "fixed":
            return 1
        key = (sender, receiver)
        rng = self._link_rngs.get(key)
        if rng is None:
            rng = random.Random(f"{self.seed}|{sender}>{receiver}|latency")
            self._link_rngs[key] = rng
        return rng.randint(1, 10)

    # -- scheduling ----------------------------------------------------------

    def deliver(self, envelope: Envelope) -> None:
        at = envelope.sent_at + self._delay(envelope.sender, envelope.receiver)
        heapq.heappush(
            self._heap, (at, _ENVELOPE, envelope.msg_id, next(self._seq), envelope)
        )

    def schedule_timer(self, agent_id: str, delay: int, payload: dict) -> None:
        heapq.heappush(
            self._heap,
            (self._clock + delay, _TIMER, "", next(self._seq), (agent_id, Timer(payload))),
        )

    def schedule_call(self, at: int, fn: Callable[[], None]) -> None:
        heapq.heappush(self._heap, (at, _CALL, "", next(self._seq), fn))

    def inject(self, agent_id: str, event) -> None:
        """Hand an out-of-band event (a Command) to an agent, now."""
        heapq.heappush(
            self._heap, (self._clock, _CALL, "", next(self._seq), (agent_id, event))
        )

    # -- the loop ---------------------------------------------------------------

    def run(self, horizon: int | None = None) -> bool:
        """Drain events in order; returns True when the system went quiescent
        before the horizon, False when events were still pending at it."""
        while self._heap:
            at = self._heap[0][0]
            if horizon is not None and at > horizon:
                return False
            at, kind, _, _, payload = heapq.heappop(self._heap)
            self._clock = max(self._clock, at)
            if kind == _ENVELOPE:
                handler = self._handlers.get(payload.receiver)
                if handler is not None:
                    handler(payload)
            elif callable(payload):
                payload()
            else:
                agent_id, event = payload
                handler = self._handlers.get(agent_id)
                if handler is not None:
                    handler(event)
        return True

    def pending(self) -> int:
        return len(self._heap)
