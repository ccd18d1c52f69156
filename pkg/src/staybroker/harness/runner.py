"""Run a scenario deterministically and produce (trace, report)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from ..agents.runtime import AgentEnvironment
from ..agents.topology import make_store, spawn_topology
from ..domain.codec import canonical_json
from ..errors import StayBrokerError
from ..router.bus import Router
from ..router.sim import SimTransport
from .checker import check_lines
from .scenario import Scenario


@dataclass
class RunResult:
    scenario: str
    seed: int
    trace_lines: list[str]
    report: dict

    @property
    def ok(self) -> bool:
        return bool(self.report.get("ok"))

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace_lines)

    def write_trace(self, path: str | Path) -> None:
        Path(path).write_text(self.trace_text())


class SimRun:
    """A scenario wired into a simulated system, steppable for tests."""

    def __init__(self, scenario: Scenario, seed: int | None = None,
                 horizon: int | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.horizon = scenario.horizon if horizon is None else horizon
        self.transport = SimTransport(seed=self.seed, latency=scenario.latency)
        self.router = Router(self.transport)
        self.store = make_store(scenario.topology, clock=self.transport.clock)
        self.env = AgentEnvironment(router=self.router, store=self.store,
                                    rng_seed=self.seed)
        self.system = spawn_topology(self.env, scenario.topology)
        self.tokens: dict[str, str] = {}  # event ref -> request id
        self.users: dict[str, str] = {}  # event ref -> user id
        self.tickets: dict[str, object] = {}  # event ref -> last select ticket
        self.errors: list[dict] = []
        self.updates: list[dict] = []
        self._schedule_events()

    def _schedule_events(self) -> None:
        for event in self.scenario.events:
            if event.kind == "request":
                self.transport.schedule_call(event.at, self._request_closure(event))
            elif event.kind == "select":
                self.transport.schedule_call(event.at, self._select_closure(event))
            elif event.kind == "update":
                self.transport.schedule_call(event.at, self._update_closure(event))

    def _request_closure(self, event):
        def fire():
            user_id = event.payload["user_id"]
            pa = self.system.pas[user_id]
            try:
                token = pa.submit(dict(event.payload["request"]))
            except StayBrokerError as exc:
                self.errors.append({"ref": event.ref, "error": str(exc)})
                return
            self.tokens[event.ref] = token
            self.users[event.ref] = user_id

        return fire

    def _select_closure(self, event):
        def fire():
            token = self.tokens.get(event.ref)
            if token is None:
                self.errors.append({"ref": event.ref, "error": "request never submitted"})
                return
            pa = self.system.pas[self.users[event.ref]]
            self.tickets[event.ref] = pa.select_rank(token, event.payload["rank"])

        return fire

    def _update_closure(self, event):
        def fire():
            gh = event.payload["guesthouse_id"]
            principal = event.payload.get("principal") or self.store.admin_principal(gh)
            try:
                self.store.update_guesthouse(
                    gh, principal,
                    profile_delta=event.payload.get("profile_delta"),
                    calendar_delta=event.payload.get("calendar_delta"),
                )
                self.updates.append({"ref": event.ref, "guesthouse_id": gh,
                                     "applied": True})
            except StayBrokerError as exc:
                self.updates.append({"ref": event.ref, "guesthouse_id": gh,
                                     "applied": False, "error": str(exc)})

        return fire

    def run(self, horizon: int | None = None) -> bool:
        return self.transport.run(self.horizon if horizon is None else horizon)

    def open_conversations(self) -> list[dict]:
        pending = []
        agents = []
        if self.system.na is not None:
            agents.append(self.system.na)
        agents.extend(self.system.zas.values())
        agents.extend(self.system.gas.values())
        agents.extend(self.system.pas.values())
        for runtime in agents:
            open_ids = runtime.logic.open_conversations()
            if open_ids:
                pending.append({"agent": runtime.agent_id, "conversations": sorted(open_ids)})
        return pending

    def finish(self, quiescent: bool) -> RunResult:
        snapshot = self.store.snapshot()
        trace_records = list(self.router.trace)
        trace_records.append({"event": "snapshot", "data": snapshot})
        trace_lines = [canonical_json(record) for record in trace_records]

        requests = []
        for ref, token in self.tokens.items():
            pa = self.system.pas[self.users[ref]]
            status = pa.status(token) or {}
            classification = status.get("classification") or {}
            ranked = [
                {
                    "proposal_id": p["proposal_id"],
                    "total_price": p["total_price"],
                    "guesthouses": [leg["guesthouse_id"] for leg in p["legs"]],
                }
                for p in classification.get("proposals", [])
            ]
            ticket = self.tickets.get(ref)
            requests.append({
                "ref": ref,
                "request_id": token,
                "user_id": self.users[ref],
                "zone": status.get("zone"),
                "status": status.get("status"),
                "proposals": len(ranked),
                "ranked": ranked,
                "outcome": getattr(ticket, "outcome", None),
            })

        properties = check_lines([json.loads(line) for line in trace_lines])
        ok = quiescent and all(p["passed"] for p in properties) and not self.errors
        report = {
            "scenario": self.scenario.name,
            "seed": self.seed,
            "horizon": self.horizon,
            "quiescent": quiescent,
            "pending": self.open_conversations() if not quiescent else [],
            "requests": requests,
            "updates": self.updates,
            "errors": self.errors,
            "properties": properties,
            "ok": ok,
        }
        return RunResult(scenario=self.scenario.name, seed=self.seed,
                         trace_lines=trace_lines, report=report)


def run_scenario(scenario: Scenario, seed: int | None = None,
                 horizon: int | None = None) -> RunResult:
    run = SimRun(scenario, seed=seed, horizon=horizon)
    quiescent = run.run()
    return run.finish(quiescent)


def trace_digest(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode("utf-8")
    return hashlib.sha256(text).hexdigest()
