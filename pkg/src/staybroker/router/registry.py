"""Agent records and the registration rules of the bus."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import RegistryError
from .permissions import Role


@dataclass(frozen=True)
class AgentRecord:
    """One registered agent: identity, role, zone binding, and MAC key."""

    agent_id: str
    role: Role
    key: bytes
    zone_id: str | None = None

    def __post_init__(self):
        if not self.agent_id:
            raise RegistryError("agent_id must be a non-empty string")
        if not isinstance(self.key, (bytes, bytearray)) or len(self.key) == 0:
            raise RegistryError(f"{self.agent_id}: a non-empty secret key is required")
        if self.role in (Role.ZA, Role.GA) and not self.zone_id:
            raise RegistryError(f"{self.agent_id}: {self.role.value} needs a zone_id")
        if self.role in (Role.PA, Role.NA, Role.CMA) and self.zone_id:
            raise RegistryError(f"{self.agent_id}: {self.role.value} takes no zone_id")


class Registry:
    """Uniqueness and cardinality rules: one national agent, one zonal agent
    per zone, guesthouse agents only in zones that already have one."""

    def __init__(self):
        self._agents: dict[str, AgentRecord] = {}
        self._za_by_zone: dict[str, str] = {}
        self._gas_by_zone: dict[str, list[str]] = {}
        self._na_id: str | None = None

    def add(self, record: AgentRecord) -> None:
        if record.agent_id in self._agents:
            raise RegistryError(f"agent id already registered: {record.agent_id}")
        if record.role == Role.NA:
            if self._na_id is not None:
                raise RegistryError("a national agent is already registered")
            self._na_id = record.agent_id
        elif record.role == Role.ZA:
            if record.zone_id in self._za_by_zone:
                raise RegistryError(f"zone {record.zone_id} already has a zonal agent")
            self._za_by_zone[record.zone_id] = record.agent_id
            self._gas_by_zone.setdefault(record.zone_id, [])
        elif record.role == Role.GA:
            if record.zone_id not in self._za_by_zone:
                raise RegistryError(
                    f"{record.agent_id}: zone {record.zone_id} has no zonal agent yet"
                )
            self._gas_by_zone[record.zone_id].append(record.agent_id)
        self._agents[record.agent_id] = record

    def get(self, agent_id: str) -> AgentRecord | None:
        return self._agents.get(agent_id)

    def roster(self, zone_id: str) -> list[str]:
        """Guesthouse agent ids of a zone, sorted."""
        return sorted(self._gas_by_zone.get(zone_id, []))

    def zones(self) -> list[str]:
        return sorted(self._za_by_zone)

    def za_ids(self) -> list[str]:
        return sorted(self._za_by_zone.values())

    @property
    def na_id(self) -> str | None:
        return self._na_id

    def zone_of(self, agent_id: str) -> str | None:
        record = self._agents.get(agent_id)
        return record.zone_id if record else None

    def agent_ids(self) -> list[str]:
        return sorted(self._agents)
