"""Text-line channel gateway.

Stands in for SMS/e-mail style access: one newline-delimited command
channel bound to one user's personal agent. Grammar:

    REQ [zone=<z>] persons=<n> from=<date> to=<date> rooms=<s>,<d>,<t> \
        [max=<minor-units>] [fac=<f1;f2;...>]
    BOOK <proposal_id>

Replies are rendered back as text lines (CLASSIFICATION/BOOKED/FAILED/ERR).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..errors import ValidationError
from ..protocol.envelope import Envelope
from ..protocol.events import Command, Fault, Outbound

_REQ_KEYS = ("zone", "persons", "from", "to", "rooms", "max", "fac")


def parse_line(line: str) -> tuple[str, dict]:
    """Parse one channel line into ("request", fields) or ("book", fields).

    Raises ValidationError on any grammar violation; nothing is forwarded
    for such lines.
    """
    words = line.strip().split()
    if not words:
        raise ValidationError("empty line")
    verb = words[0]
    if verb == "BOOK":
        if len(words) != 2:
            raise ValidationError("usage: BOOK <proposal_id>")
        return "book", {"proposal_id": words[1]}
    if verb != "REQ":
        raise ValidationError(f"unknown command: {verb}")
    seen: dict[str, str] = {}
    for word in words[1:]:
        key, eq, value = word.partition("=")
        if not eq or key not in _REQ_KEYS:
            raise ValidationError(f"bad parameter: {word}")
        if key in seen:
            raise ValidationError(f"duplicate parameter: {key}")
        seen[key] = value
    for required in ("persons", "from", "to", "rooms"):
        if required not in seen:
            raise ValidationError(f"missing parameter: {required}")
    try:
        persons = int(seen["persons"])
    except ValueError:
        raise ValidationError(f"persons must be an integer: {seen['persons']}")
    counts = seen["rooms"].split(",")
    if len(counts) != 3:
        raise ValidationError("rooms must be three comma-separated counts: s,d,t")
    try:
        single, double, triple = (int(c) for c in counts)
    except ValueError:
        raise ValidationError(f"rooms counts must be integers: {seen['rooms']}")
    max_price = None
    if "max" in seen:
        try:
            max_price = int(seen["max"])
        except ValueError:
            raise ValidationError(f"max must be an integer: {seen['max']}")
    facilities = [f for f in seen.get("fac", "").split(";") if f]
    return "request", {
        "zone": seen.get("zone"),
        "persons": persons,
        "arrival": seen["from"],
        "departure": seen["to"],
        "rooms": {"single": single, "double": double, "triple": triple},
        "max_total_price": max_price,
        "required_facilities": facilities,
    }


def render_request(fields: dict) -> str:
    """Inverse of parse_line for request fields (canonical parameter order)."""
    parts = ["REQ"]
    if fields.get("zone"):
        parts.append(f"zone={fields['zone']}")
    rooms = fields["rooms"]
    parts.append(f"persons={fields['persons']}")
    parts.append(f"from={fields['arrival']}")
    parts.append(f"to={fields['departure']}")
    parts.append(f"rooms={rooms['single']},{rooms['double']},{rooms['triple']}")
    if fields.get("max_total_price") is not None:
        parts.append(f"max={fields['max_total_price']}")
    facilities = fields.get("required_facilities") or []
    if facilities:
        parts.append("fac=" + ";".join(sorted(facilities)))
    return " ".join(parts)


def _validate_fields(fields: dict) -> None:
    """Domain-validate a parsed request (zone existence is the agent's job)."""
    from ..domain import codec as _codec
    from ..domain.matching import validate_request

    request = _codec.request_from_dict({
        "request_id": "channel-probe",
        "user_id": "channel-probe",
        "zone": fields["zone"],
        "persons": fields["persons"],
        "interval": {"arrival": fields["arrival"], "departure": fields["departure"]},
        "rooms": fields["rooms"],
        "max_total_price": fields["max_total_price"],
        "required_facilities": fields["required_facilities"],
    })
    validate_request(request)


def _render_leg(leg: dict) -> str:
    iv = leg["interval"]
    return f"{leg['guesthouse_id']}@{iv['arrival']}..{iv['departure']}"


@dataclass
class CmaContext:
    pa: str
    out: Callable[[str], None]
    new_token: Callable[[], str]


@dataclass
class _ChannelState:
    # token -> classification dict, newest last; BOOK searches newest first.
    classifications: dict[str, dict] = field(default_factory=dict)


class ChannelGateway:
    """Logic half of the gateway: lines in as commands, envelopes out as text."""

    def __init__(self, ctx: CmaContext):
        self.ctx = ctx
        self.state = _ChannelState()

    def handle(self, event, now: int):
        if isinstance(event, Command) and event.name == "line":
            return self._on_line(event.payload.get("text", ""))
        if isinstance(event, Envelope):
            handler = {
                "classify": self._on_classify,
                "booked": self._on_booked,
                "failed": self._on_failed,
            }.get(event.performative)
            if handler is None:
                return [Fault("fault", {"reason": "unexpected-performative",
                                        "performative": event.performative,
                                        "request_id": event.request_id})]
            return handler(event)
        return []

    def _on_line(self, text: str):
        try:
            kind, fields = parse_line(text)
            if kind == "request":
                _validate_fields(fields)
        except ValidationError as exc:
            self.ctx.out(f"ERR {exc}")
            return []
        if kind == "request":
            return [Outbound(self.ctx.pa, "ask", self.ctx.new_token(),
                             {"request": fields})]
        proposal_id = fields["proposal_id"]
        for token in reversed(list(self.state.classifications)):
            ranked = self.state.classifications[token].get("proposals", [])
            if any(p["proposal_id"] == proposal_id for p in ranked):
                return [Outbound(self.ctx.pa, "book", token,
                                 {"proposal_id": proposal_id})]
        self.ctx.out(f"ERR unknown proposal: {proposal_id}")
        return []

    def _on_classify(self, env: Envelope):
        classification = env.body.get("classification", {})
        self.state.classifications[env.request_id] = classification
        ranked = classification.get("proposals", [])
        self.ctx.out(f"CLASSIFICATION {env.request_id} {len(ranked)}")
        for i, proposal in enumerate(ranked, start=1):
            legs = "+".join(_render_leg(leg) for leg in proposal["legs"])
            self.ctx.out(
                f"#{i} {proposal['proposal_id']} price={proposal['total_price']} legs={legs}"
            )
        return []

    def _on_booked(self, env: Envelope):
        self.ctx.out(f"BOOKED {env.body.get('booking_id', '?')}")
        return []

    def _on_failed(self, env: Envelope):
        self.ctx.out(f"FAILED {env.body.get('reason', 'failed')}")
        return []
