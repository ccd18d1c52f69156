"""Canonical JSON serialization for every domain type.

Canonical means: sorted keys, compact separators, dates as YYYY-MM-DD
strings, money as plain integers, sets as sorted lists. Two structurally
equal values always serialize to identical bytes.
"""

from __future__ import annotations

import json
from datetime import date
from typing import Any, Mapping

from ..errors import ValidationError
from .types import (
    ROOM_TYPES,
    AvailabilityCalendar,
    GuesthouseProfile,
    Proposal,
    ProposalLeg,
    ReservationRequest,
    RoomRequest,
    RoomType,
    StayInterval,
)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def parse_date(value: Any, what: str = "date") -> date:
    if not isinstance(value, str):
        raise ValidationError(f"{what} must be a YYYY-MM-DD string, got {value!r}")
    try:
        return date.fromisoformat(value)
    except ValueError as exc:
        raise ValidationError(f"bad {what}: {value!r}") from exc


def _require(data: Mapping, keys: tuple[str, ...], what: str) -> None:
    if not isinstance(data, Mapping):
        raise ValidationError(f"{what} must be an object, got {type(data).__name__}")
    missing = [k for k in keys if k not in data]
    if missing:
        raise ValidationError(f"{what} is missing fields: {missing}")
    extra = [k for k in data if k not in keys]
    if extra:
        raise ValidationError(f"{what} has unknown fields: {extra}")


def _room_map_to_dict(mapping: Mapping[RoomType, int]) -> dict[str, int]:
    return {rt.value: mapping[rt] for rt in ROOM_TYPES}


def _room_map_from_dict(data: Mapping, what: str) -> dict[str, int]:
    _require(data, ("single", "double", "triple"), what)
    return {k: data[k] for k in ("single", "double", "triple")}


def interval_to_dict(interval: StayInterval) -> dict:
    return {
        "arrival": interval.arrival.isoformat(),
        "departure": interval.departure.isoformat(),
    }


def interval_from_dict(data: Mapping) -> StayInterval:
    _require(data, ("arrival", "departure"), "interval")
    return StayInterval(
        arrival=parse_date(data["arrival"], "arrival"),
        departure=parse_date(data["departure"], "departure"),
    )


def rooms_to_dict(rooms: RoomRequest) -> dict:
    return {"single": rooms.single, "double": rooms.double, "triple": rooms.triple}


def rooms_from_dict(data: Mapping) -> RoomRequest:
    return RoomRequest(**_room_map_from_dict(data, "rooms"))


def request_to_dict(request: ReservationRequest) -> dict:
    return {
        "request_id": request.request_id,
        "user_id": request.user_id,
        "zone": request.zone,
        "persons": request.persons,
        "interval": interval_to_dict(request.interval),
        "rooms": rooms_to_dict(request.rooms),
        "max_total_price": request.max_total_price,
        "required_facilities": sorted(request.required_facilities),
    }


def request_from_dict(data: Mapping) -> ReservationRequest:
    _require(
        data,
        (
            "request_id",
            "user_id",
            "zone",
            "persons",
            "interval",
            "rooms",
            "max_total_price",
            "required_facilities",
        ),
        "request",
    )
    facilities = data["required_facilities"]
    if not isinstance(facilities, (list, tuple)):
        raise ValidationError("required_facilities must be a list")
    return ReservationRequest(
        request_id=data["request_id"],
        user_id=data["user_id"],
        zone=data["zone"],
        persons=data["persons"],
        interval=interval_from_dict(data["interval"]),
        rooms=rooms_from_dict(data["rooms"]),
        max_total_price=data["max_total_price"],
        required_facilities=frozenset(facilities),
    )


def profile_to_dict(profile: GuesthouseProfile) -> dict:
    return {
        "guesthouse_id": profile.guesthouse_id,
        "zone_id": profile.zone_id,
        "name": profile.name,
        "address": profile.address,
        "telephone": profile.telephone,
        "facilities": sorted(profile.facilities),
        "inventory": _room_map_to_dict(profile.inventory),
        "nightly_rate": _room_map_to_dict(profile.nightly_rate),
    }


def profile_from_dict(data: Mapping) -> GuesthouseProfile:
    _require(
        data,
        (
            "guesthouse_id",
            "zone_id",
            "name",
            "address",
            "telephone",
            "facilities",
            "inventory",
            "nightly_rate",
        ),
        "profile",
    )
    return GuesthouseProfile(
        guesthouse_id=data["guesthouse_id"],
        zone_id=data["zone_id"],
        name=data["name"],
        address=data["address"],
        telephone=data["telephone"],
        facilities=frozenset(data["facilities"]),
        inventory=_room_map_from_dict(data["inventory"], "inventory"),
        nightly_rate=_room_map_from_dict(data["nightly_rate"], "nightly_rate"),
    )


def calendar_to_dict(calendar: AvailabilityCalendar) -> dict:
    entries = [
        {"date": night.isoformat(), "type": room_type.value, "free": free}
        for (night, room_type), free in calendar.free_overrides.items()
    ]
    entries.sort(key=lambda e: (e["date"], e["type"]))
    return {
        "guesthouse_id": calendar.guesthouse_id,
        "inventory": _room_map_to_dict(calendar.inventory),
        "free": entries,
    }


def calendar_from_dict(data: Mapping) -> AvailabilityCalendar:
    _require(data, ("guesthouse_id", "inventory", "free"), "calendar")
    overrides: dict[tuple[date, RoomType], int] = {}
    for entry in data["free"]:
        _require(entry, ("date", "type", "free"), "calendar entry")
        try:
            room_type = RoomType(entry["type"])
        except ValueError as exc:
            raise ValidationError(f"unknown room type: {entry['type']!r}") from exc
        overrides[(parse_date(entry["date"]), room_type)] = entry["free"]
    return AvailabilityCalendar(
        guesthouse_id=data["guesthouse_id"],
        inventory=_room_map_from_dict(data["inventory"], "inventory"),
        free_overrides=overrides,
    )


def leg_to_dict(leg: ProposalLeg) -> dict:
    return {
        "guesthouse_id": leg.guesthouse_id,
        "interval": interval_to_dict(leg.interval),
        "rooms": rooms_to_dict(leg.rooms),
        "leg_price": leg.leg_price,
    }


def leg_from_dict(data: Mapping) -> ProposalLeg:
    _require(data, ("guesthouse_id", "interval", "rooms", "leg_price"), "leg")
    return ProposalLeg(
        guesthouse_id=data["guesthouse_id"],
        interval=interval_from_dict(data["interval"]),
        rooms=rooms_from_dict(data["rooms"]),
        leg_price=data["leg_price"],
    )


def proposal_to_dict(proposal: Proposal) -> dict:
    return {
        "proposal_id": proposal.proposal_id,
        "request_id": proposal.request_id,
        "legs": [leg_to_dict(leg) for leg in proposal.legs],
        "total_price": proposal.total_price,
    }


def proposal_from_dict(data: Mapping) -> Proposal:
    _require(data, ("proposal_id", "request_id", "legs", "total_price"), "proposal")
    legs = data["legs"]
    if not isinstance(legs, (list, tuple)):
        raise ValidationError("proposal legs must be a list")
    return Proposal(
        proposal_id=data["proposal_id"],
        request_id=data["request_id"],
        legs=tuple(leg_from_dict(leg) for leg in legs),
        total_price=data["total_price"],
    )
