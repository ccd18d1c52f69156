"""HTTP facade over personal agents and guesthouse administration."""

from .app import create_app, topology_from_source
from .system import LiveSystem

__all__ = ["LiveSystem", "create_app", "topology_from_source"]
