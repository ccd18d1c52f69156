"""A live (threaded) agent system behind the HTTP API."""

from __future__ import annotations

from pathlib import Path

from ..agents.runtime import AgentEnvironment
from ..agents.topology import Topology, make_store, spawn_topology
from ..router.bus import Router
from ..router.live import LiveTransport

HOLD_TTL_SECONDS = 300  # five minutes of real time


class LiveSystem:
    """Router + store + the full agent cast on the concurrent transport."""

    def __init__(
        self,
        topology: Topology,
        scale: float = 0.005,
        data_dir: str | Path | None = None,
    ):
        self.topology = topology
        self.transport = LiveTransport(scale=scale)
        self.router = Router(self.transport)
        self.store = make_store(
            topology,
            data_dir=data_dir,
            clock=self.transport.clock,
            hold_ttl=int(HOLD_TTL_SECONDS / scale),
        )
        self.env = AgentEnvironment(router=self.router, store=self.store, rng_seed=None)
        self.system = spawn_topology(self.env, topology)

    def start(self) -> None:
        self.transport.start()

    def stop(self) -> None:
        self.transport.stop()

    def pa(self, user_id: str):
        return self.system.pas.get(user_id)

    def trace_snapshot(self) -> list[dict]:
        with self.router._trace_lock:
            return [dict(line) for line in self.router.trace]
