"""Concrete agents: runtime binding, spawning, and the text-channel gateway."""

from .runtime import AgentRuntime, AgentEnvironment
from .spawn import spawn_agent
from .cma import ChannelGateway, parse_line, render_request
from .topology import Topology, load_topology, make_store, spawn_topology

__all__ = [
    "AgentEnvironment",
    "AgentRuntime",
    "ChannelGateway",
    "Topology",
    "load_topology",
    "make_store",
    "parse_line",
    "render_request",
    "spawn_agent",
    "spawn_topology",
]
