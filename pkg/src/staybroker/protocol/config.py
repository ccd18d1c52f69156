"""Tunable protocol constants."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ProtocolConfig:
    """Logical-time budgets and structural limits for every conversation.

    All durations are logical units: the simulation clock counts them
    directly, the live transport scales them to wall time.
    """

    # How long a booking coordinator waits for hold/confirm replies.
    ga_reply_budget: int = 30
    # How long a prefix-holding guesthouse waits for completion offers.
    collab_budget: int = 20
    # How long a zonal agent collects guesthouse answers.
    zone_collection_budget: int = 100
    # How long the national agent collects zonal answers (must exceed the
    # zone budget plus transit).
    na_collection_budget: int = 250
    # Maximum legs per proposal; 2 enables collaboration, 1 disables it.
    max_legs: int = 2
    # When a guesthouse forgets it took part in a finished request.
    participation_ttl: int = 600
