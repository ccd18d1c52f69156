"""Value types for guesthouse stays, requests, calendars, and proposals."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from typing import Iterable, Iterator, Mapping, Union

from ..errors import ValidationError

# Closed facility taxonomy. Matching is plain subset inclusion over these
# case-sensitive tokens; anything else is rejected up front.
FACILITIES: frozenset[str] = frozenset(
    {
        "parking",
        "restaurant",
        "bar",
        "tv",
        "phone",
        "internet",
        "heating",
        "hot-water",
        "private-bath",
        "kitchen",
        "laundry",
        "garden",
        "terrace",
        "fishing",
        "horse-riding",
        "hiking",
        "ski-storage",
        "pets-allowed",
        "child-friendly",
        "disabled-access",
    }
)

# Prices are integer minor currency units and must stay within a signed
# 64-bit range so every backend can represent them exactly.
MAX_MONEY = 2**63 - 1

ONE_DAY = timedelta(days=1)


class RoomType(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"

    @property
    def beds(self) -> int:
        return _BEDS[self]


_BEDS = {RoomType.SINGLE: 1, RoomType.DOUBLE: 2, RoomType.TRIPLE: 3}

ROOM_TYPES: tuple[RoomType, ...] = (RoomType.SINGLE, RoomType.DOUBLE, RoomType.TRIPLE)


def check_facilities(tokens: Iterable[str]) -> frozenset[str]:
    """Return `tokens` as a frozenset, rejecting anything outside the taxonomy."""
    toks = frozenset(tokens)
    unknown = toks - FACILITIES
    if unknown:
        raise ValidationError(f"unknown facility tokens: {sorted(unknown)}")
    return toks


def _room_counts(value: Mapping, what: str, maximum: int) -> dict[RoomType, int]:
    """Normalize a per-room-type mapping to all three types with int values."""
    out: dict[RoomType, int] = {}
    for rt in ROOM_TYPES:
        raw = value.get(rt, value.get(rt.value, 0)) if value else 0
        if not isinstance(raw, int) or isinstance(raw, bool):
            raise ValidationError(f"{what}[{rt.value}] must be an integer, got {raw!r}")
        if raw < 0:
            raise ValidationError(f"{what}[{rt.value}] must be >= 0, got {raw}")
        if raw > maximum:
            raise ValidationError(f"{what}[{rt.value}] exceeds the supported range")
        out[rt] = raw
    return out


@dataclass(frozen=True)
class StayInterval:
    """Half-open stay [arrival, departure): the departure day is not a night."""

    arrival: date
    departure: date

    def __post_init__(self):
        if not isinstance(self.arrival, date) or not isinstance(self.departure, date):
            raise ValidationError("arrival and departure must be calendar dates")
        if self.departure <= self.arrival:
            raise ValidationError(
                f"departure {self.departure} must be strictly after arrival {self.arrival}"
            )

    @property
    def nights(self) -> int:
        return (self.departure - self.arrival).days

    def iter_nights(self) -> Iterator[date]:
        night = self.arrival
        while night < self.departure:
            yield night
            night += ONE_DAY

    def contains(self, night: date) -> bool:
        return self.arrival <= night < self.departure


@dataclass(frozen=True)
class RoomRequest:
    """How many rooms of each size the party wants, every night of the stay."""

    single: int = 0
    double: int = 0
    triple: int = 0

    def __post_init__(self):
        for name in ("single", "double", "triple"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValidationError(f"room count {name} must be an integer >= 0")
        if self.single == 0 and self.double == 0 and self.triple == 0:
            raise ValidationError("at least one room must be requested")

    @property
    def capacity(self) -> int:
        """Beds provided: singles sleep 1, doubles 2, triples 3."""
        return self.single + 2 * self.double + 3 * self.triple

    def counts(self) -> dict[RoomType, int]:
        return {
            RoomType.SINGLE: self.single,
            RoomType.DOUBLE: self.double,
            RoomType.TRIPLE: self.triple,
        }


@dataclass(frozen=True)
class ReservationRequest:
    """A user's preference bundle for one stay."""

    request_id: str
    user_id: str
    zone: str | None
    persons: int
    interval: StayInterval
    rooms: RoomRequest
    max_total_price: int | None
    required_facilities: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.request_id or not isinstance(self.request_id, str):
            raise ValidationError("request_id must be a non-empty string")
        if not self.user_id or not isinstance(self.user_id, str):
            raise ValidationError("user_id must be a non-empty string")
        if not isinstance(self.persons, int) or isinstance(self.persons, bool) or self.persons < 1:
            raise ValidationError("persons must be an integer >= 1")
        if self.max_total_price is not None:
            cap = self.max_total_price
            if not isinstance(cap, int) or isinstance(cap, bool) or cap <= 0:
                raise ValidationError("max_total_price must be a positive integer when given")
            if cap > MAX_MONEY:
                raise ValidationError("max_total_price exceeds the supported range")
        object.__setattr__(self, "required_facilities", check_facilities(self.required_facilities))


@dataclass(frozen=True)
class GuesthouseProfile:
    """Static description of one guesthouse: contact data, rooms, rates."""

    guesthouse_id: str
    zone_id: str
    name: str
    address: str
    telephone: str
    facilities: frozenset[str]
    inventory: Mapping[RoomType, int]
    nightly_rate: Mapping[RoomType, int]

    def __post_init__(self):
        if not self.guesthouse_id:
            raise ValidationError("guesthouse_id must be a non-empty string")
        if not self.zone_id:
            raise ValidationError("zone_id must be a non-empty string")
        object.__setattr__(self, "facilities", check_facilities(self.facilities))
        object.__setattr__(self, "inventory", _room_counts(self.inventory, "inventory", 10**6))
        object.__setattr__(self, "nightly_rate", _room_counts(self.nightly_rate, "nightly_rate", MAX_MONEY))


@dataclass(frozen=True)
class AvailabilityCalendar:
    """Free-room counts per night and room type for one guesthouse.

    Nights without an explicit entry default to the full inventory.
    """

    guesthouse_id: str
    inventory: Mapping[RoomType, int]
    free_overrides: Mapping[tuple[date, RoomType], int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inventory", _room_counts(self.inventory, "inventory", 10**6))
        for (night, rt), free in self.free_overrides.items():
            if not isinstance(night, date):
                raise ValidationError("calendar entries must be keyed by calendar dates")
            if not isinstance(free, int) or isinstance(free, bool) or free < 0:
                raise ValidationError(f"free({night}, {rt.value}) must be an integer >= 0")
            if free > self.inventory[rt]:
                raise ValidationError(
                    f"free({night}, {rt.value}) = {free} exceeds inventory {self.inventory[rt]}"
                )

    def free(self, night: date, room_type: RoomType) -> int:
        return self.free_overrides.get((night, room_type), self.inventory[room_type])


class Full:
    """The whole requested interval is available."""

    __slots__ = ()

    def __eq__(self, other):
        return isinstance(other, Full)

    def __hash__(self):
        return hash(Full)

    def __repr__(self):
        return "Full()"


class NoMatch:
    """Nothing usable: preferences fail or the first night is unavailable."""

    __slots__ = ()

    def __eq__(self, other):
        return isinstance(other, NoMatch)

    def __hash__(self):
        return hash(NoMatch)

    def __repr__(self):
        return "NoMatch()"


@dataclass(frozen=True)
class Prefix:
    """A front slice [arrival, cover_until) is available, the tail is not."""

    cover_until: date

    def __repr__(self):
        return f"Prefix({self.cover_until.isoformat()})"


MatchResult = Union[Full, Prefix, NoMatch]


@dataclass(frozen=True)
class ProposalLeg:
    """One guesthouse covering one sub-interval of the stay at a fixed price."""

    guesthouse_id: str
    interval: StayInterval
    rooms: RoomRequest
    leg_price: int

    def __post_init__(self):
        if not self.guesthouse_id:
            raise ValidationError("leg guesthouse_id must be a non-empty string")
        if not isinstance(self.leg_price, int) or isinstance(self.leg_price, bool) or self.leg_price < 0:
            raise ValidationError("leg_price must be an integer >= 0")


@dataclass(frozen=True)
class Proposal:
    """An ordered chain of legs exactly covering the requested interval."""

    proposal_id: str
    request_id: str
    legs: tuple[ProposalLeg, ...]
    total_price: int

    def __post_init__(self):
        if not self.proposal_id:
            raise ValidationError("proposal_id must be a non-empty string")
        if not self.request_id:
            raise ValidationError("proposal request_id must be a non-empty string")
        object.__setattr__(self, "legs", tuple(self.legs))
        if len(self.legs) < 1:
            raise ValidationError("a proposal needs at least one leg")

    @property
    def guesthouse_ids(self) -> tuple[str, ...]:
        return tuple(leg.guesthouse_id for leg in self.legs)

    def validate_against(self, request: ReservationRequest) -> None:
        """Check every structural invariant of this proposal for `request`."""
        if self.request_id != request.request_id:
            raise ValidationError(
                f"proposal {self.proposal_id} is for request {self.request_id}, "
                f"not {request.request_id}"
            )
        if self.legs[0].interval.arrival != request.interval.arrival:
            raise ValidationError("first leg must start at the requested arrival")
        if self.legs[-1].interval.departure != request.interval.departure:
            raise ValidationError("last leg must end at the requested departure")
        for earlier, later in zip(self.legs, self.legs[1:]):
            if earlier.interval.departure != later.interval.arrival:
                raise ValidationError(
                    f"legs are not contiguous at {earlier.interval.departure}"
                )
        ids = self.guesthouse_ids
        if len(set(ids)) != len(ids):
            raise ValidationError("a guesthouse may appear in at most one leg")
        if self.total_price != sum(leg.leg_price for leg in self.legs):
            raise ValidationError("total_price must equal the sum of leg prices")
        cap = request.max_total_price
        if cap is not None and self.total_price > cap:
            raise ValidationError(
                f"total_price {self.total_price} exceeds the price cap {cap}"
            )
