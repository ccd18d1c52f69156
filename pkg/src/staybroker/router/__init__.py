"""The secure message bus: registry, authentication, permissions, transports."""

from .auth import sign, verify
from .permissions import PermissionMatrix, Role
from .registry import AgentRecord
from .bus import Router, SendResult
from .sim import SimTransport
from .live import LiveTransport

__all__ = [
    "AgentRecord",
    "LiveTransport",
    "PermissionMatrix",
    "Role",
    "Router",
    "SendResult",
    "SimTransport",
    "sign",
    "verify",
]
