"""Per-agent symmetric-key message authentication.

Each registered agent holds a secret key; envelopes carry an HMAC-SHA256
over their canonical bytes (everything but the tag itself). The bus
verifies on send, so a message whose body, sender, performative, or any
other field was altered after signing never reaches a mailbox.
"""

from __future__ import annotations

import hashlib
import hmac

from ..protocol.envelope import Envelope, signing_bytes


def sign(envelope: Envelope, key: bytes) -> Envelope:
    tag = hmac.new(key, signing_bytes(envelope), hashlib.sha256).hexdigest()
    return envelope.with_tag(tag)


def verify(envelope: Envelope, key: bytes) -> bool:
    expected = hmac.new(key, signing_bytes(envelope), hashlib.sha256).hexdigest()
    return hmac.compare_digest(expected, envelope.auth_tag)
