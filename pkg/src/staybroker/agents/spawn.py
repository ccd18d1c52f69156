"""Spawning concrete agents into a router + store environment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..errors import RegistryError
from ..naming import NA_ID, cma_id, ga_id, pa_id, za_id
from ..protocol.conversations import (
    GaContext,
    GuesthouseLogic,
    NaContext,
    NationalLogic,
    PaContext,
    PersonalLogic,
    ZaContext,
    ZonalLogic,
)
from ..router.permissions import Role
from ..router.registry import AgentRecord
from .cma import ChannelGateway, CmaContext
from .runtime import AgentEnvironment, AgentRuntime


class SilentLogic:
    """A guesthouse agent that never answers (scripted failure mode)."""

    def __init__(self, inner):
        self.inner = inner

    def handle(self, event, now):
        return []

    def open_conversations(self):
        return []


def _record(env: AgentEnvironment, agent_id: str, role: Role, zone_id: str | None = None):
    return AgentRecord(agent_id=agent_id, role=role, key=env.key_for(agent_id), zone_id=zone_id)


def spawn_na(env: AgentEnvironment) -> AgentRuntime:
    router = env.router

    def za_for_guesthouse(guesthouse_id: str) -> str | None:
        zone = router.zone_of(ga_id(guesthouse_id))
        return za_id(zone) if zone else None

    record = _record(env, NA_ID, Role.NA)
    ctx = NaContext(
        zas=router.za_ids,
        za_for_guesthouse=za_for_guesthouse,
        new_token=env.token_source(NA_ID),
        config=env.config,
    )
    return AgentRuntime(env, record, NationalLogic(ctx))


def spawn_za(env: AgentEnvironment, zone_id: str) -> AgentRuntime:
    agent_id = za_id(zone_id)
    record = _record(env, agent_id, Role.ZA, zone_id)
    ctx = ZaContext(
        zone_id=zone_id,
        roster=lambda: env.router.roster(zone_id),
        new_token=env.token_source(agent_id),
        config=env.config,
    )
    return AgentRuntime(env, record, ZonalLogic(ctx))


def spawn_ga(env: AgentEnvironment, guesthouse_id: str, silent: bool = False) -> AgentRuntime:
    if env.store is None or not env.store.has_guesthouse(guesthouse_id):
        raise RegistryError(
            f"guesthouse agent {guesthouse_id} needs a store calendar to bind to"
        )
    store = env.store
    zone_id = store.profile(guesthouse_id).zone_id
    agent_id = ga_id(guesthouse_id)
    record = _record(env, agent_id, Role.GA, zone_id)
    ctx = GaContext(
        guesthouse_id=guesthouse_id,
        zone_id=zone_id,
        za=za_id(zone_id),
        siblings=lambda: [g for g in env.router.roster(zone_id) if g != agent_id],
        profile=lambda: store.profile(guesthouse_id),
        calendar=lambda: store.calendar_view(guesthouse_id),
        hold=store.hold,
        confirm=store.confirm,
        release=store.release,
        new_token=env.token_source(agent_id),
        config=env.config,
    )
    logic = GuesthouseLogic(ctx)
    return AgentRuntime(env, record, SilentLogic(logic) if silent else logic)


@dataclass(frozen=True)
class UserProfile:
    """What a personal agent holds about its one user."""

    user_id: str
    name: str
    default_zone: str | None = None
    default_facilities: frozenset[str] = frozenset()
    credential_hash: str = ""  # hex digest; sessions are checked service-side


def spawn_pa(
    env: AgentEnvironment,
    user_id: str,
    default_zone: str | None = None,
    default_facilities=(),
    credential_hash: str = "",
) -> "PaHandle":
    if env.store is None or user_id not in env.store.users:
        raise RegistryError(f"personal agent needs a registered user, got {user_id!r}")
    agent_id = pa_id(user_id)
    record = _record(env, agent_id, Role.PA)
    profile = UserProfile(
        user_id=user_id,
        name=env.store.users[user_id],
        default_zone=default_zone,
        default_facilities=frozenset(default_facilities),
        credential_hash=credential_hash,
    )
    ctx = PaContext(
        user_id=user_id,
        na=lambda: env.router.na_id,
        zone_exists=lambda z: z in env.router.zones(),
        zones=env.router.zones,
        new_token=env.token_source(agent_id),
        record_history=env.store.append_history,
        config=env.config,
        default_zone=profile.default_zone,
        default_facilities=profile.default_facilities,
    )
    handle = PaHandle(env, record, PersonalLogic(ctx))
    handle.profile = profile
    return handle


def spawn_cma(
    env: AgentEnvironment, channel_id: str, user_id: str, out: Callable[[str], None]
) -> "CmaHandle":
    agent_id = cma_id(channel_id)
    record = _record(env, agent_id, Role.CMA)
    ctx = CmaContext(
        pa=pa_id(user_id),
        out=out,
        new_token=env.token_source(agent_id),
    )
    return CmaHandle(env, record, ChannelGateway(ctx))


class PaHandle(AgentRuntime):
    """A personal agent plus the command surface UIs drive it through."""

    profile: UserProfile

    def submit(self, fields: dict) -> str:
        """Validate `fields` and queue the submission; returns the request id.

        Raises ValidationError synchronously so callers can surface bad
        input without waiting for the agent task.
        """
        token = self.new_token()
        request = self.logic.build_request(fields, token)
        from ..protocol.events import Command

        self.post(Command("submit", {"token": token, "request": request}))
        return token

    def select(self, token: str, proposal_id: str):
        from ..protocol.events import Command, Ticket

        ticket = Ticket()
        self.post(Command("select", {"token": token, "proposal_id": proposal_id}, ticket))
        return ticket

    def select_rank(self, token: str, rank: int):
        """Select the rank-th proposal of the stored classification."""
        from ..protocol.events import Ticket

        status = self.logic.status(token)
        proposals = (status or {}).get("classification", {}) or {}
        proposals = proposals.get("proposals", [])
        if rank < 0 or rank >= len(proposals):
            ticket = Ticket()
            ticket.resolve({"outcome": "error", "reason": f"no proposal at rank {rank}"})
            return ticket
        return self.select(token, proposals[rank]["proposal_id"])

    def status(self, token: str) -> dict | None:
        return self.logic.status(token)

    def tokens(self) -> list[str]:
        return self.logic.tokens()


class CmaHandle(AgentRuntime):
    """A channel gateway plus its text entry point."""

    def ingest(self, line: str) -> None:
        from ..protocol.events import Command

        self.post(Command("line", {"text": line}))


def spawn_agent(env: AgentEnvironment, role: str, **kw):
    """Spawn one agent by role name; see the per-role helpers for kwargs."""
    spawners = {
        "NA": spawn_na,
        "ZA": spawn_za,
        "GA": spawn_ga,
        "PA": spawn_pa,
        "CMA": spawn_cma,
    }
    if role not in spawners:
        raise RegistryError(f"unknown agent role: {role!r}")
    return spawners[role](env, **kw)
