"""Matching, pricing, prefix-availability, and proposal composition."""

from __future__ import annotations

from typing import Iterable

from ..errors import CompositionError, MoneyOverflowError, ValidationError
from .types import (
    MAX_MONEY,
    ONE_DAY,
    AvailabilityCalendar,
    Full,
    GuesthouseProfile,
    MatchResult,
    NoMatch,
    Prefix,
    Proposal,
    ProposalLeg,
    ReservationRequest,
    RoomRequest,
    StayInterval,
    check_facilities,
)


def facilities_satisfied(have: Iterable[str], need: Iterable[str]) -> bool:
    """True iff every required facility token is offered."""
    return check_facilities(need) <= check_facilities(have)


def rooms_available(
    calendar: AvailabilityCalendar, rooms: RoomRequest, interval: StayInterval
) -> bool:
    """True iff the calendar has the requested counts free on every night."""
    counts = rooms.counts()
    for night in interval.iter_nights():
        for room_type, count in counts.items():
            if count and calendar.free(night, room_type) < count:
                return False
    return True


def longest_prefix(
    calendar: AvailabilityCalendar, rooms: RoomRequest, interval: StayInterval
) -> MatchResult:
    """Longest front slice of `interval` the calendar can host.

    Full when every night fits, NoMatch when even the first night fails,
    otherwise Prefix(d) with d the first night that fails.
    """
    counts = rooms.counts()
    covered = interval.arrival
    for night in interval.iter_nights():
        ok = all(
            calendar.free(night, room_type) >= count
            for room_type, count in counts.items()
            if count
        )
        if not ok:
            break
        covered = night + ONE_DAY
    if covered == interval.departure:
        return Full()
    if covered == interval.arrival:
        return NoMatch()
    return Prefix(covered)


def price_total(
    profile: GuesthouseProfile, rooms: RoomRequest, interval: StayInterval
) -> int:
    """Whole-stay price: count x nightly rate x nights, summed over room types.

    Exact integer arithmetic; raises MoneyOverflowError past MAX_MONEY.
    """
    nights = interval.nights
    total = 0
    for room_type, count in rooms.counts().items():
        total += count * profile.nightly_rate[room_type] * nights
        if total > MAX_MONEY:
            raise MoneyOverflowError(
                f"price for {profile.guesthouse_id} exceeds the supported money range"
            )
    return total


def make_leg(
    profile: GuesthouseProfile, rooms: RoomRequest, interval: StayInterval
) -> ProposalLeg:
    """Build a leg for `profile` over `interval`, priced by `price_total`."""
    return ProposalLeg(
        guesthouse_id=profile.guesthouse_id,
        interval=interval,
        rooms=rooms,
        leg_price=price_total(profile, rooms, interval),
    )


def evaluate_request(
    profile: GuesthouseProfile,
    calendar: AvailabilityCalendar,
    request: ReservationRequest,
) -> tuple[MatchResult, int]:
    """Judge one guesthouse against one request.

    NoMatch when facilities are missing, the rooms cannot sleep the party,
    or the first night is unavailable. A Full match whose price busts the
    cap degrades to NoMatch: the cap constrains complete proposals. Prefix
    matches are returned uncapped because the cap is re-checked when a
    completion leg is composed in.

    Returns the match and the price quoted for the covered sub-interval.
    """
    if not facilities_satisfied(profile.facilities, request.required_facilities):
        return NoMatch(), 0
    if request.rooms.capacity < request.persons:
        return NoMatch(), 0
    result = longest_prefix(calendar, request.rooms, request.interval)
    if isinstance(result, NoMatch):
        return result, 0
    if isinstance(result, Full):
        price = price_total(profile, request.rooms, request.interval)
        cap = request.max_total_price
        if cap is not None and price > cap:
            return NoMatch(), 0
        return result, price
    covered = StayInterval(request.interval.arrival, result.cover_until)
    return result, price_total(profile, request.rooms, covered)


def compose(
    prefix_leg: ProposalLeg,
    completion_leg: ProposalLeg,
    request: ReservationRequest,
    proposal_id: str,
) -> Proposal:
    """Join a front leg and a tail leg into a two-leg proposal.

    Raises CompositionError when the legs overlap or leave a gap, repeat a
    guesthouse, fail to cover exactly the requested interval, or sum past
    the price cap.
    """
    if prefix_leg.guesthouse_id == completion_leg.guesthouse_id:
        raise CompositionError(
            "duplicate-guesthouse",
            f"both legs name guesthouse {prefix_leg.guesthouse_id}",
        )
    if prefix_leg.interval.departure != completion_leg.interval.arrival:
        raise CompositionError(
            "contiguity",
            f"legs must meet exactly: {prefix_leg.interval.departure} vs "
            f"{completion_leg.interval.arrival}",
        )
    if (
        prefix_leg.interval.arrival != request.interval.arrival
        or completion_leg.interval.departure != request.interval.departure
    ):
        raise CompositionError(
            "coverage", "legs must cover exactly the requested interval"
        )
    total = prefix_leg.leg_price + completion_leg.leg_price
    if total > MAX_MONEY:
        raise MoneyOverflowError("composed price exceeds the supported money range")
    cap = request.max_total_price
    if cap is not None and total > cap:
        raise CompositionError(
            "cap-exceeded", f"composed price {total} exceeds the cap {cap}"
        )
    return Proposal(
        proposal_id=proposal_id,
        request_id=request.request_id,
        legs=(prefix_leg, completion_leg),
        total_price=total,
    )


def validate_request(
    request: ReservationRequest, known_zones: Iterable[str] | None = None
) -> None:
    """Full request validation, including the persons-fit-in-rooms rule.

    Type construction already enforces the per-field invariants; this adds
    the cross-field capacity rule and, when a zone registry is supplied,
    that a named zone actually exists.
    """
    if request.rooms.capacity < request.persons:
        raise ValidationError(
            f"{request.persons} persons do not fit in the requested rooms "
            f"(capacity {request.rooms.capacity})"
        )
    if request.zone is not None and known_zones is not None:
        if request.zone not in set(known_zones):
            raise ValidationError(f"unknown zone: {request.zone}")
