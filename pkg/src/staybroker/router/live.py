"""Concurrent in-process transport: one mailbox thread per agent.

Each agent handles one event at a time; ordering is FIFO per
sender-receiver pair (queue order), with no guarantee across agents.
Logical time is wall time divided by `scale` seconds per unit, so the
same protocol budgets work in both transports.
"""

from __future__ import annotations

import queue
import threading
import time
from typing import Callable

from ..protocol.envelope import Envelope
from ..protocol.events import Timer

_STOP = object()


class LiveTransport:
    def __init__(self, scale: float = 0.01):
        self.scale = scale
        self._t0 = time.monotonic()
        self._mailboxes: dict[str, queue.Queue] = {}
        self._threads: dict[str, threading.Thread] = {}
        self._timers: list[threading.Timer] = []
        self._lock = threading.Lock()
        self._started = False

    def clock(self) -> int:
        return int((time.monotonic() - self._t0) / self.scale)

    def bind(self, agent_id: str, handler: Callable) -> None:
        with self._lock:
            mailbox: queue.Queue = queue.Queue()
            self._mailboxes[agent_id] = mailbox
            thread = threading.Thread(
                target=self._worker, args=(mailbox, handler),
                name=f"agent-{agent_id}", daemon=True,
            )
            self._threads[agent_id] = thread
            if self._started:
                thread.start()

    def _worker(self, mailbox: queue.Queue, handler: Callable) -> None:
        while True:
            event = mailbox.get()
            if event is _STOP:
                return
            try:
                handler(event)
            except Exception:  # a broken handler must not kill the mailbox
                import logging

                logging.getLogger(__name__).exception("agent handler failed")

    def start(self) -> None:
        with self._lock:
            self._started = True
            for thread in self._threads.values():
                if not thread.is_alive():
                    thread.start()

    def stop(self, join_timeout: float = 2.0) -> None:
        with self._lock:
            timers = list(self._timers)
            self._timers.clear()
        for timer in timers:
            timer.cancel()
        for mailbox in self._mailboxes.values():
            mailbox.put(_STOP)
        for thread in self._threads.values():
            if thread.is_alive():
                thread.join(join_timeout)

    def deliver(self, envelope: Envelope) -> None:
        self._mailboxes[envelope.receiver].put(envelope)

    def schedule_timer(self, agent_id: str, delay: int, payload: dict) -> None:
        mailbox = self._mailboxes[agent_id]
        timer = threading.Timer(delay * self.scale, mailbox.put, args=(Timer(payload),))
        timer.daemon = True
        with self._lock:
            self._timers.append(timer)
            # Opportunistic cleanup so long-lived systems don't accumulate refs.
            if len(self._timers) > 256:
                self._timers = [t for t in self._timers if t.is_alive()]
        timer.start()

    def inject(self, agent_id: str, event) -> None:
        self._mailboxes[agent_id].put(event)
