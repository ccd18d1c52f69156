"""Deterministic classification of collected proposals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..domain.codec import proposal_from_dict, proposal_to_dict
from ..domain.types import Proposal
from ..errors import ValidationError

# Primary sort keys a classification may request. Whatever the primary key,
# the full chain below it keeps the order total and deterministic.
PRIMARY_KEYS = ("price", "legs")


@dataclass(frozen=True)
class RankingCriteria:
    primary: str = "price"

    def __post_init__(self):
        if self.primary not in PRIMARY_KEYS:
            raise ValidationError(
                f"unknown ranking key {self.primary!r}; choose from {PRIMARY_KEYS}"
            )


@dataclass(frozen=True)
class Classification:
    """Ranked proposals for one request, plus the criteria that ordered them."""

    request_id: str
    proposals: tuple[Proposal, ...]
    criteria: RankingCriteria = field(default_factory=RankingCriteria)


def _full_key(proposal: Proposal, criteria: RankingCriteria):
    base = (proposal.total_price, len(proposal.legs), proposal.guesthouse_ids)
    if criteria.primary == "legs":
        return (len(proposal.legs), proposal.total_price, proposal.guesthouse_ids)
    return base


def rank_proposals(
    proposals: Iterable[Proposal], criteria: RankingCriteria | None = None
) -> list[Proposal]:
    """Stable total order: price ascending, then fewer legs, then the
    lexicographically smallest guesthouse-id sequence.

    All proposals must belong to one request.
    """
    criteria = criteria or RankingCriteria()
    items = list(proposals)
    request_ids = {p.request_id for p in items}
    if len(request_ids) > 1:
        raise ValidationError(f"proposals span several requests: {sorted(request_ids)}")
    return sorted(items, key=lambda p: _full_key(p, criteria))


def classify(
    request_id: str,
    proposals: Iterable[Proposal],
    criteria: RankingCriteria | None = None,
) -> Classification:
    criteria = criteria or RankingCriteria()
    ranked = rank_proposals(proposals, criteria)
    for p in ranked:
        if p.request_id != request_id:
            raise ValidationError(
                f"proposal {p.proposal_id} belongs to {p.request_id}, not {request_id}"
            )
    return Classification(request_id=request_id, proposals=tuple(ranked), criteria=criteria)


def classification_to_dict(classification: Classification) -> dict:
    return {
        "request_id": classification.request_id,
        "proposals": [proposal_to_dict(p) for p in classification.proposals],
        "criteria": {"primary": classification.criteria.primary},
    }


def classification_from_dict(data: Mapping) -> Classification:
    for key in ("request_id", "proposals", "criteria"):
        if key not in data:
            raise ValidationError(f"classification is missing field: {key}")
    proposals = tuple(proposal_from_dict(p) for p in data["proposals"])
    return Classification(
        request_id=data["request_id"],
        proposals=proposals,
        criteria=RankingCriteria(primary=data["criteria"].get("primary", "price")),
    )
