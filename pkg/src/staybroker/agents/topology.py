"""Topology configuration: zones, guesthouses, users, and system assembly."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping

from ..domain import codec
from ..domain.types import GuesthouseProfile
from ..errors import ValidationError
from ..store.engine import Store
from .runtime import AgentEnvironment
from .spawn import spawn_ga, spawn_na, spawn_pa, spawn_za


@dataclass(frozen=True)
class GuesthouseSpec:
    profile: GuesthouseProfile
    calendar: tuple[dict, ...] = ()  # initial per-date capacities
    behavior: str = "normal"  # normal | silent
    admin_password: str | None = None


@dataclass(frozen=True)
class UserSpec:
    user_id: str
    name: str
    password: str | None = None
    default_zone: str | None = None
    default_facilities: tuple[str, ...] = ()


@dataclass(frozen=True)
class ZoneRoster:
    """General guesthouse information for one zone (no rates, no calendars)."""

    zone_id: str
    guesthouses: tuple[dict, ...]  # guesthouse_id, name, address, telephone


def zone_roster(store: Store, zone_id: str) -> ZoneRoster:
    entries = []
    for gh in store.guesthouse_ids(zone_id):
        profile = store.profile(gh)
        entries.append({
            "guesthouse_id": gh,
            "name": profile.name,
            "address": profile.address,
            "telephone": profile.telephone,
        })
    return ZoneRoster(zone_id=zone_id, guesthouses=tuple(entries))


@dataclass(frozen=True)
class Topology:
    zones: tuple[tuple[str, str], ...]
    guesthouses: tuple[GuesthouseSpec, ...]
    users: tuple[UserSpec, ...]
    national_agent: bool = True


def load_topology(data: Mapping) -> Topology:
    """Validate a topology mapping; raises ValidationError with a reason."""
    if not isinstance(data, Mapping):
        raise ValidationError("topology must be an object")
    zones = []
    zone_ids = set()
    for raw in data.get("zones", []):
        zone_id = raw.get("zone_id")
        if not zone_id:
            raise ValidationError("every zone needs a zone_id")
        if zone_id in zone_ids:
            raise ValidationError(f"duplicate zone: {zone_id}")
        zone_ids.add(zone_id)
        zones.append((zone_id, raw.get("name", zone_id)))

    guesthouses = []
    gh_ids = set()
    for raw in data.get("guesthouses", []):
        profile_data = {
            k: raw.get(k)
            for k in (
                "guesthouse_id",
                "zone_id",
                "name",
                "address",
                "telephone",
                "facilities",
                "inventory",
                "nightly_rate",
            )
        }
        profile = codec.profile_from_dict(profile_data)
        if profile.guesthouse_id in gh_ids:
            raise ValidationError(f"duplicate guesthouse: {profile.guesthouse_id}")
        gh_ids.add(profile.guesthouse_id)
        if profile.zone_id not in zone_ids:
            raise ValidationError(
                f"guesthouse {profile.guesthouse_id} names unknown zone {profile.zone_id}"
            )
        behavior = raw.get("behavior", "normal")
        if behavior not in ("normal", "silent"):
            raise ValidationError(f"unknown guesthouse behavior: {behavior!r}")
        calendar = tuple(raw.get("calendar", []))
        for entry in calendar:
            if not {"date", "type", "free"} <= set(entry):
                raise ValidationError(
                    f"calendar entries need date/type/free: {entry!r}"
                )
        guesthouses.append(
            GuesthouseSpec(
                profile=profile,
                calendar=calendar,
                behavior=behavior,
                admin_password=raw.get("admin_password"),
            )
        )

    users = []
    user_ids = set()
    for raw in data.get("users", []):
        user_id = raw.get("user_id")
        if not user_id:
            raise ValidationError("every user needs a user_id")
        if user_id in user_ids:
            raise ValidationError(f"duplicate user: {user_id}")
        user_ids.add(user_id)
        default_zone = raw.get("default_zone")
        if default_zone is not None and default_zone not in zone_ids:
            raise ValidationError(f"user {user_id} defaults to unknown zone {default_zone}")
        users.append(
            UserSpec(user_id=user_id, name=raw.get("name", user_id),
                     password=raw.get("password"),
                     default_zone=default_zone,
                     default_facilities=tuple(raw.get("default_facilities", ())))
        )

    return Topology(
        zones=tuple(zones),
        guesthouses=tuple(guesthouses),
        users=tuple(users),
        national_agent=bool(data.get("national_agent", True)),
    )


def make_store(topology: Topology, **store_kwargs) -> Store:
    """Build a store seeded with the topology's registry and calendars.

    Entries already present (a reloaded data directory) are left alone.
    """
    store = Store(**store_kwargs)
    for zone_id, name in topology.zones:
        if zone_id not in store.zones:
            store.add_zone(zone_id, name)
    for user in topology.users:
        if user.user_id not in store.users:
            store.add_user(user.user_id, user.name)
    for spec in topology.guesthouses:
        if store.has_guesthouse(spec.profile.guesthouse_id):
            continue
        store.add_guesthouse(spec.profile)
        if spec.calendar:
            store.update_guesthouse(
                spec.profile.guesthouse_id,
                store.admin_principal(spec.profile.guesthouse_id),
                calendar_delta=list(spec.calendar),
            )
    return store


@dataclass
class SpawnedSystem:
    env: AgentEnvironment
    na: object | None
    zas: dict[str, object] = field(default_factory=dict)
    gas: dict[str, object] = field(default_factory=dict)
    pas: dict[str, object] = field(default_factory=dict)

    def pa(self, user_id: str):
        return self.pas[user_id]


def spawn_topology(env: AgentEnvironment, topology: Topology) -> SpawnedSystem:
    """Spawn the whole cast: zonal agents first, then their guesthouses,
    the national agent when configured, and one personal agent per user."""
    system = SpawnedSystem(env=env, na=None)
    for zone_id, _ in sorted(topology.zones):
        system.zas[zone_id] = spawn_za(env, zone_id)
    for spec in sorted(topology.guesthouses, key=lambda s: s.profile.guesthouse_id):
        gh = spec.profile.guesthouse_id
        system.gas[gh] = spawn_ga(env, gh, silent=spec.behavior == "silent")
    if topology.national_agent:
        system.na = spawn_na(env)
    for user in sorted(topology.users, key=lambda u: u.user_id):
        credential_hash = (
            hashlib.sha256(user.password.encode()).hexdigest() if user.password else ""
        )
        system.pas[user.user_id] = spawn_pa(
            env,
            user.user_id,
            default_zone=user.default_zone,
            default_facilities=user.default_facilities,
            credential_hash=credential_hash,
        )
    return system
