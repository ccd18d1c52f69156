"""Core data model plus the matching, pricing, and composition rules.

Everything here is a pure function over immutable values; no I/O, no clocks,
no shared mutable state.
"""

from .types import (
    FACILITIES,
    MAX_MONEY,
    ROOM_TYPES,
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
    RoomType,
    StayInterval,
    check_facilities,
)
from .matching import (
    compose,
    evaluate_request,
    facilities_satisfied,
    longest_prefix,
    make_leg,
    price_total,
    rooms_available,
    validate_request,
)
from . import codec

__all__ = [
    "FACILITIES",
    "MAX_MONEY",
    "ROOM_TYPES",
    "AvailabilityCalendar",
    "Full",
    "GuesthouseProfile",
    "MatchResult",
    "NoMatch",
    "Prefix",
    "Proposal",
    "ProposalLeg",
    "ReservationRequest",
    "RoomRequest",
    "RoomType",
    "StayInterval",
    "check_facilities",
    "codec",
    "compose",
    "evaluate_request",
    "facilities_satisfied",
    "longest_prefix",
    "make_leg",
    "price_total",
    "rooms_available",
    "validate_request",
]
