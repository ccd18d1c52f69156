"""Scenario files: schema, validation with line numbers, random generation.

A scenario is canonical JSON with a `version` field, a topology, and a
list of time-ordered scripted events:

    {"ref": "r1", "at": 0, "kind": "request", "user_id": "u1", "request": {...}}
    {"at": 600, "kind": "select", "ref": "r1", "rank": 0}
    {"at": 700, "kind": "update", "guesthouse_id": "G1", "calendar_delta": [...]}

Bundled scenarios live next to this module; `random-<N>` names generate an
N-request scenario from the seed.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..agents.topology import Topology, load_topology
from ..errors import ScenarioError, ValidationError

SCENARIO_VERSION = 1
BUNDLED = ("figure4", "bypass", "timeout", "race-lastroom")
_RANDOM_NAME = re.compile(r"^random-(\d+)$")


@dataclass(frozen=True)
class Event:
    kind: str  # request | select | update
    at: int
    ref: str
    payload: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    horizon: int
    latency: str
    topology: Topology
    topology_raw: Mapping
    events: tuple[Event, ...]


def _line_starts(text: str) -> list[int]:
    starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            starts.append(i + 1)
    return starts


def _line_of(text: str, index: int) -> int:
    return text.count("\n", 0, index) + 1


def _array_element_offsets(text: str, key: str) -> list[int]:
    """Character offsets of each element of the top-level array `"key": [...]`.

    A small scanner (string- and escape-aware) so validation errors can cite
    the line a scripted event starts on.
    """
    marker = f'"{key}"'
    at = text.find(marker)
    if at < 0:
        return []
    start = text.find("[", at)
    if start < 0:
        return []
    offsets = []
    depth = 0
    in_string = False
    escaped = False
    expecting = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
            if depth == 1 and expecting:
                offsets.append(i)
                expecting = False
            continue
        if ch in "[{":
            if ch == "[" and depth == 0:
                depth = 1
                expecting = True
                continue
            if depth == 1 and expecting:
                offsets.append(i)
                expecting = False
            depth += 1
            continue
        if ch in "]}":
            depth -= 1
            if depth == 0:
                break
            continue
        if depth == 1:
            if ch == ",":
                expecting = True
            elif not ch.isspace() and expecting:
                offsets.append(i)
                expecting = False
    return offsets


def scenario_from_dict(data: Mapping, text: str | None = None, name: str = "") -> Scenario:
    """Validate a raw scenario; raises ScenarioError listing every problem."""
    problems: list[str] = []
    text = text or json.dumps(data, indent=1)
    event_offsets = _array_element_offsets(text, "events")

    def event_line(i: int) -> str:
        if i < len(event_offsets):
            return f"line {_line_of(text, event_offsets[i])}"
        return f"event {i}"

    if data.get("version") != SCENARIO_VERSION:
        problems.append(f"line 1: version must be {SCENARIO_VERSION}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        problems.append("line 1: seed must be an integer")
        seed = 0
    horizon = data.get("horizon", 10_000)
    if not isinstance(horizon, int) or horizon < 0:
        problems.append("line 1: horizon must be a non-negative integer")
        horizon = 10_000
    latency = data.get("latency", "fixed")
    if latency not in ("fixed", "seeded"):
        problems.append("line 1: latency must be 'fixed' or 'seeded'")
        latency = "fixed"

    topology_raw = data.get("topology", {})
    topology = None
    try:
        topology = load_topology(topology_raw)
    except ValidationError as exc:
        line = _line_of(text, max(text.find('"topology"'), 0))
        problems.append(f"line {line}: {exc}")

    users = {u.user_id for u in topology.users} if topology else set()
    guesthouses = {g.profile.guesthouse_id for g in topology.guesthouses} if topology else set()
    zones = {z for z, _ in topology.zones} if topology else set()

    events: list[Event] = []
    refs: set[str] = set()
    last_at = None
    for i, raw in enumerate(data.get("events", [])):
        where = event_line(i)
        kind = raw.get("kind")
        at = raw.get("at")
        if not isinstance(at, int) or at < 0:
            problems.append(f"{where}: event needs a non-negative integer 'at'")
            continue
        if last_at is not None and at < last_at:
            problems.append(f"{where}: event times must be non-decreasing")
        last_at = at
        if kind == "request":
            ref = raw.get("ref") or f"r{i}"
            if ref in refs:
                problems.append(f"{where}: duplicate ref {ref!r}")
            refs.add(ref)
            user = raw.get("user_id")
            if topology and user not in users:
                problems.append(f"{where}: unknown user {user!r}")
            request = raw.get("request")
            if not isinstance(request, Mapping):
                problems.append(f"{where}: request event needs a 'request' object")
                continue
            zone = request.get("zone")
            if topology and zone is not None and zone not in zones:
                problems.append(f"{where}: unknown zone {zone!r}")
            events.append(Event(kind="request", at=at, ref=ref,
                                payload={"user_id": user, "request": dict(request)}))
        elif kind == "select":
            ref = raw.get("ref", "")
            if ref not in refs:
                problems.append(f"{where}: select references unknown request {ref!r}")
            rank = raw.get("rank", 0)
            if not isinstance(rank, int) or rank < 0:
                problems.append(f"{where}: rank must be a non-negative integer")
            events.append(Event(kind="select", at=at, ref=ref, payload={"rank": rank}))
        elif kind == "update":
            gh = raw.get("guesthouse_id")
            if topology and gh not in guesthouses:
                problems.append(f"{where}: unknown guesthouse {gh!r}")
            events.append(Event(kind="update", at=at, ref=raw.get("ref") or f"u{i}",
                                payload={
                                    "guesthouse_id": gh,
                                    "principal": raw.get("principal"),
                                    "profile_delta": raw.get("profile_delta"),
                                    "calendar_delta": raw.get("calendar_delta"),
                                }))
        else:
            problems.append(f"{where}: unknown event kind {kind!r}")

    if problems:
        raise ScenarioError(problems)
    return Scenario(
        name=name or data.get("name", "scenario"),
        seed=seed,
        horizon=horizon,
        latency=latency,
        topology=topology,
        topology_raw=dict(topology_raw),
        events=tuple(events),
    )


def _bundled_text(name: str) -> str:
    ref = resources.files("staybroker.harness").joinpath(f"scenarios/{name}.json")
    return ref.read_text()


def load_scenario(spec: str, seed: int | None = None) -> Scenario:
    """Resolve a scenario by path, bundled name, or `random-N` pattern."""
    name = spec[: -len(".scenario")] if spec.endswith(".scenario") else spec
    match = _RANDOM_NAME.match(name)
    if match:
        return scenario_from_dict(
            random_scenario(int(match.group(1)), seed if seed is not None else 42),
            name=name,
        )
    path = Path(spec)
    if path.exists():
        text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"line {exc.lineno}: {exc.msg}"])
        return scenario_from_dict(data, text=text, name=data.get("name", path.stem))
    if name in BUNDLED:
        text = _bundled_text(name)
        return scenario_from_dict(json.loads(text), text=text, name=name)
    raise ScenarioError([f"unknown scenario: {spec!r} (bundled: {', '.join(BUNDLED)}, "
                         f"random-<N>, or a file path)"])


# ---------------------------------------------------------------------------
# Randomized scenario generation
# ---------------------------------------------------------------------------

_FACILITY_POOL = ("parking", "tv", "hiking", "heating", "kitchen", "garden")


def random_scenario(n_requests: int, seed: int) -> dict:
    """An N-request scenario over a seed-derived topology.

    Bounds: at most 3 zones, at most 10 guesthouses, calendars varied over
    a 31-night window. Availability patterns mix full, front-only, and
    tail-only so collaboration actually happens.
    """
    rng = random.Random(f"scenario|{seed}")
    base = date(2026, 7, 1)
    window = 31

    n_zones = rng.randint(1, 3)
    zones = [f"Z{i + 1}" for i in range(n_zones)]
    n_guesthouses = rng.randint(max(2, n_zones), 10)
    guesthouses = []
    for g in range(n_guesthouses):
        gh = f"G{g + 1}"
        zone = rng.choice(zones)
        inventory = {
            "single": rng.randint(0, 3),
            "double": rng.randint(1, 3),
            "triple": rng.randint(0, 2),
        }
        # Cuts cluster mid-window so front-only and tail-only guesthouses
        # line up often enough for tail completions to exist.
        pattern = rng.random()
        calendar = []
        if pattern < 0.25:
            pass  # fully free
        elif pattern < 0.55:
            cut = rng.randint(10, 20)
            for k in range(cut, window):
                calendar.append({"date": (base + timedelta(days=k)).isoformat(),
                                 "type": "double", "free": 0})
        elif pattern < 0.9:
            cut = rng.randint(10, 20)
            for k in range(0, cut):
                calendar.append({"date": (base + timedelta(days=k)).isoformat(),
                                 "type": "double", "free": 0})
        else:
            for k in range(window):
                if rng.random() < 0.2:
                    calendar.append({"date": (base + timedelta(days=k)).isoformat(),
                                     "type": "double",
                                     "free": rng.randint(0, inventory["double"])})
        guesthouses.append({
            "guesthouse_id": gh,
            "zone_id": zone,
            "name": f"Casa {gh}",
            "address": f"{g + 1} Village Rd",
            "telephone": f"+40-230-{g:05d}",
            "facilities": sorted(set(["parking"] + rng.sample(_FACILITY_POOL,
                                                              rng.randint(0, 3)))),
            "inventory": inventory,
            "nightly_rate": {
                "single": rng.randrange(2000, 9000, 100),
                "double": rng.randrange(4000, 15000, 100),
                "triple": rng.randrange(6000, 20000, 100),
            },
            "calendar": calendar,
        })

    n_users = rng.randint(1, 8)
    users = [{"user_id": f"u{i + 1}", "name": f"User {i + 1}"} for i in range(n_users)]

    events = []
    for i in range(n_requests):
        at = i * 50
        if rng.random() < 0.7:
            # Straddle the cut band so prefix matches and completions occur.
            start = rng.randint(5, 15)
            nights = rng.randint(4, min(12, window - start))
        else:
            start = rng.randint(0, window - 2)
            nights = rng.randint(1, min(10, window - start))
        rooms = {"single": 0, "double": 0, "triple": 0}
        rooms[rng.choice(("single", "double", "double", "double", "triple"))] = \
            rng.randint(1, 2)
        capacity = rooms["single"] + 2 * rooms["double"] + 3 * rooms["triple"]
        cap_price = rng.choice([None, None, rng.randrange(20000, 400000, 1000)])
        events.append({
            "ref": f"r{i}",
            "at": at,
            "kind": "request",
            "user_id": rng.choice(users)["user_id"],
            "request": {
                "zone": rng.choice([None, rng.choice(zones)]),
                "persons": rng.randint(1, capacity),
                "arrival": (base + timedelta(days=start)).isoformat(),
                "departure": (base + timedelta(days=start + nights)).isoformat(),
                "rooms": rooms,
                "max_total_price": cap_price,
                "required_facilities": sorted(
                    rng.sample(("parking", "tv", "hiking"), rng.randint(0, 2))),
            },
        })
        if rng.random() < 0.6:
            events.append({"at": at + 800, "kind": "select", "ref": f"r{i}",
                           "rank": 0})
    events.sort(key=lambda e: e["at"])

    return {
        "version": SCENARIO_VERSION,
        "name": f"random-{n_requests}",
        "seed": seed,
        "horizon": n_requests * 50 + 3000,
        "latency": "seeded",
        "topology": {"zones": [{"zone_id": z, "name": z} for z in zones],
                     "guesthouses": guesthouses,
                     "users": users},
        "events": events,
    }
