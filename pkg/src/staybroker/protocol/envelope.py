"""Typed, authenticated inter-agent messages and their wire codec."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Mapping

from ..domain.codec import canonical_json
from ..errors import ProtocolError, ValidationError

SCHEMA_VERSION = 1

PERFORMATIVES: tuple[str, ...] = (
    "ask",
    "tell",
    "sorry",
    "collab-ask",
    "collab-tell",
    "collab-sorry",
    "classify",
    "book",
    "hold-ok",
    "hold-fail",
    "confirm",
    "release",
    "booked",
    "failed",
)

_WIRE_FIELDS = (
    "v",
    "msg_id",
    "request_id",
    "sender",
    "receiver",
    "performative",
    "body",
    "sent_at",
    "auth_tag",
)


@dataclass(frozen=True)
class Envelope:
    """One inter-agent message.

    `sent_at` is a logical timestamp, `auth_tag` a hex MAC over the
    canonical bytes of everything else (filled in by the sender's runtime).
    """

    msg_id: str
    request_id: str
    sender: str
    receiver: str
    performative: str
    body: Mapping[str, Any]
    sent_at: int
    auth_tag: str = ""

    def __post_init__(self):
        for name in ("msg_id", "request_id", "sender", "receiver"):
            value = getattr(self, name)
            if not value or not isinstance(value, str):
                raise ValidationError(f"envelope {name} must be a non-empty string")
        if self.performative not in PERFORMATIVES:
            raise ValidationError(f"unknown performative: {self.performative!r}")
        if not isinstance(self.body, Mapping):
            raise ValidationError("envelope body must be an object")
        if not isinstance(self.sent_at, int) or isinstance(self.sent_at, bool) or self.sent_at < 0:
            raise ValidationError("sent_at must be a non-negative integer")
        if not isinstance(self.auth_tag, str):
            raise ValidationError("auth_tag must be a string")

    def with_tag(self, tag: str) -> "Envelope":
        return replace(self, auth_tag=tag)


def envelope_to_wire(envelope: Envelope) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "msg_id": envelope.msg_id,
        "request_id": envelope.request_id,
        "sender": envelope.sender,
        "receiver": envelope.receiver,
        "performative": envelope.performative,
        "body": dict(envelope.body),
        "sent_at": envelope.sent_at,
        "auth_tag": envelope.auth_tag,
    }


def signing_bytes(envelope: Envelope) -> bytes:
    """Canonical bytes of everything but the tag; the MAC input."""
    wire = envelope_to_wire(envelope)
    del wire["auth_tag"]
    return canonical_json(wire).encode("utf-8")


def encode(envelope: Envelope) -> bytes:
    """Deterministic canonical bytes; equal envelopes encode identically."""
    return canonical_json(envelope_to_wire(envelope)).encode("utf-8")


def decode(data: bytes | str) -> Envelope:
    """Parse and validate wire bytes; raises ProtocolError when malformed."""
    try:
        raw = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(f"malformed envelope bytes: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProtocolError("envelope must be a JSON object")
    missing = [k for k in _WIRE_FIELDS if k not in raw]
    if missing:
        raise ProtocolError(f"envelope is missing fields: {missing}")
    extra = [k for k in raw if k not in _WIRE_FIELDS]
    if extra:
        raise ProtocolError(f"envelope has unknown fields: {extra}")
    if raw["v"] != SCHEMA_VERSION:
        raise ProtocolError(f"unsupported envelope schema version: {raw['v']!r}")
    try:
        return Envelope(
            msg_id=raw["msg_id"],
            request_id=raw["request_id"],
            sender=raw["sender"],
            receiver=raw["receiver"],
            performative=raw["performative"],
            body=raw["body"],
            sent_at=raw["sent_at"],
            auth_tag=raw["auth_tag"],
        )
    except ValidationError as exc:
        raise ProtocolError(str(exc)) from exc
