"""Agent-id conventions.

Ids carry their role as a prefix so traces are self-describing:
"pa:<user>", "na", "za:<zone>", "ga:<guesthouse>", "cma:<channel>".
"""

from __future__ import annotations

NA_ID = "na"


def pa_id(user_id: str) -> str:
    return f"pa:{user_id}"


def za_id(zone_id: str) -> str:
    return f"za:{zone_id}"


def ga_id(guesthouse_id: str) -> str:
    return f"ga:{guesthouse_id}"


def cma_id(channel_id: str) -> str:
    return f"cma:{channel_id}"


def role_of(agent_id: str) -> str | None:
    """Role name for an agent id, or None when the prefix is unknown."""
    if agent_id == NA_ID:
        return "NA"
    for prefix, role in (("pa:", "PA"), ("za:", "ZA"), ("ga:", "GA"), ("cma:", "CMA")):
        if agent_id.startswith(prefix) and len(agent_id) > len(prefix):
            return role
    return None


def suffix_of(agent_id: str) -> str:
    """The part after the role prefix (user, zone, guesthouse, channel)."""
    _, _, rest = agent_id.partition(":")
    return rest
