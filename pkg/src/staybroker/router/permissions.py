"""Role-based permission matrix for inter-agent traffic."""

from __future__ import annotations

from enum import Enum


class Role(str, Enum):
    PA = "PA"
    NA = "NA"
    ZA = "ZA"
    GA = "GA"
    CMA = "CMA"


def _both_ways(a: Role, b: Role) -> frozenset[tuple[Role, Role]]:
    return frozenset({(a, b), (b, a)})


# A personal agent may talk to the national and zonal agents only; it can
# never address a guesthouse directly. Guesthouses talk to their zonal
# agent and to each other (collaboration). The text-channel gateway talks
# to personal agents only. Everything not listed is forbidden.
DEFAULT_ALLOWED: frozenset[tuple[Role, Role]] = (
    _both_ways(Role.PA, Role.NA)
    | _both_ways(Role.PA, Role.ZA)
    | _both_ways(Role.NA, Role.ZA)
    | _both_ways(Role.ZA, Role.GA)
    | frozenset({(Role.GA, Role.GA)})
    | _both_ways(Role.CMA, Role.PA)
)


class PermissionMatrix:
    def __init__(self, allowed: frozenset[tuple[Role, Role]] = DEFAULT_ALLOWED):
        self._allowed = frozenset(allowed)

    def allows(self, sender_role: Role, receiver_role: Role) -> bool:
        return (sender_role, receiver_role) in self._allowed
