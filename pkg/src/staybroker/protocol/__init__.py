"""Message vocabulary, conversation state machines, and proposal ranking."""

from .envelope import (
    PERFORMATIVES,
    SCHEMA_VERSION,
    Envelope,
    decode,
    encode,
    envelope_to_wire,
    signing_bytes,
)
from .events import Command, Fault, Outbound, Ticket, Timer, TimerRequest
from .ranking import Classification, RankingCriteria, rank_proposals
from .config import ProtocolConfig
from .conversations import (
    GaContext,
    GuesthouseLogic,
    NaContext,
    NationalLogic,
    PaContext,
    PersonalLogic,
    ZaContext,
    ZonalLogic,
)

__all__ = [
    "PERFORMATIVES",
    "SCHEMA_VERSION",
    "Envelope",
    "decode",
    "encode",
    "envelope_to_wire",
    "signing_bytes",
    "Command",
    "Fault",
    "Outbound",
    "Ticket",
    "Timer",
    "TimerRequest",
    "Classification",
    "RankingCriteria",
    "rank_proposals",
    "ProtocolConfig",
    "GaContext",
    "GuesthouseLogic",
    "NaContext",
    "NationalLogic",
    "PaContext",
    "PersonalLogic",
    "ZaContext",
    "ZonalLogic",
]
