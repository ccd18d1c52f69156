"""Per-role conversation state machines.

Each logic object is owned by exactly one agent task. `handle(event, now)`
is deterministic given the event, the injected context, and the clock, so
every transition can be unit-tested synchronously with scripted events.

Effects are returned, never executed here: Outbound envelopes (unsigned,
un-stamped), TimerRequests, and Fault trace entries.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from ..domain import codec
from ..domain.matching import (
    compose,
    evaluate_request,
    facilities_satisfied,
    price_total,
    rooms_available,
    validate_request,
)
from ..domain.types import (
    Full,
    NoMatch,
    Proposal,
    ProposalLeg,
    ReservationRequest,
    StayInterval,
)
from ..errors import CompositionError, StayBrokerError, ValidationError
from ..naming import za_id
from .config import ProtocolConfig
from .envelope import Envelope
from .events import Command, Fault, Outbound, Timer, TimerRequest
from .ranking import (
    Classification,
    classification_from_dict,
    classification_to_dict,
    classify,
)

Effect = Any  # Outbound | TimerRequest | Fault


def _request_from_body(body: Mapping) -> ReservationRequest:
    if "request" not in body:
        raise ValidationError("body carries no request")
    return codec.request_from_dict(body["request"])


# ---------------------------------------------------------------------------
# Zonal agent: fan out asks, collect replies, coordinate bookings.
# ---------------------------------------------------------------------------


@dataclass
class ZaContext:
    zone_id: str
    roster: Callable[[], list[str]]  # guesthouse agent ids of this zone, sorted
    new_token: Callable[[], str]
    config: ProtocolConfig = field(default_factory=ProtocolConfig)


@dataclass
class _ZaCollection:
    request_id: str
    requester: str
    request: ReservationRequest
    pending: set[str]
    proposals: list[Proposal] = field(default_factory=list)
    phase: str = "collecting"  # collecting | done


@dataclass
class _ZaSaga:
    booking_id: str
    request_id: str
    requester: str
    proposal: Proposal
    user_id: str
    pending_holds: set[str]
    held: set[str] = field(default_factory=set)
    pending_confirms: set[str] = field(default_factory=set)
    any_failed: bool = False
    phase: str = "holding"  # holding | confirming | done


class ZonalLogic:
    """Collects guesthouse answers for its zone and runs booking sagas."""

    def __init__(self, ctx: ZaContext):
        self.ctx = ctx
        self.collections: dict[str, _ZaCollection] = {}
        self.sagas: dict[str, _ZaSaga] = {}

    # -- event dispatch ----------------------------------------------------

    def handle(self, event, now: int) -> list[Effect]:
        if isinstance(event, Envelope):
            handler = {
                "ask": self._on_ask,
                "tell": self._on_tell,
                "sorry": self._on_sorry,
                "book": self._on_book,
                "hold-ok": self._on_hold_reply,
                "hold-fail": self._on_hold_reply,
                "booked": self._on_confirm_ack,
                "failed": self._on_confirm_ack,
            }.get(event.performative)
            if handler is None:
                return [Fault("fault", {"reason": "unexpected-performative",
                                        "performative": event.performative,
                                        "request_id": event.request_id})]
            return handler(event)
        if isinstance(event, Timer):
            return self._on_timer(event.payload)
        return [Fault("fault", {"reason": "unexpected-event", "event": repr(event)})]

    # -- reservation collection ---------------------------------------------

    def _on_ask(self, env: Envelope) -> list[Effect]:
        rid = env.request_id
        if rid in self.collections:
            return [Fault("fault", {"reason": "duplicate-request", "request_id": rid})]
        try:
            request = _request_from_body(env.body)
        except ValidationError as exc:
            return [Fault("fault", {"reason": "bad-request", "request_id": rid,
                                    "detail": str(exc)})]
        roster = list(self.ctx.roster())
        collection = _ZaCollection(
            request_id=rid, requester=env.sender, request=request, pending=set(roster)
        )
        self.collections[rid] = collection
        if not roster:
            return self._complete(collection)
        outs: list[Effect] = [
            Outbound(ga, "ask", rid, {"request": codec.request_to_dict(request)})
            for ga in roster
        ]
        outs.append(TimerRequest(self.ctx.config.zone_collection_budget,
                                 {"kind": "za-collect", "request_id": rid}))
        return outs

    def _on_tell(self, env: Envelope) -> list[Effect]:
        collection = self.collections.get(env.request_id)
        if collection is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        if collection.phase == "done" or env.sender not in collection.pending:
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        collection.pending.discard(env.sender)
        outs: list[Effect] = []
        try:
            proposal = codec.proposal_from_dict(env.body.get("proposal", {}))
            # Re-validate before anything is forwarded upstream.
            proposal.validate_against(collection.request)
        except ValidationError as exc:
            outs.append(Fault("invalid-proposal", {"request_id": env.request_id,
                                                   "from": env.sender,
                                                   "detail": str(exc)}))
        else:
            collection.proposals.append(proposal)
        if not collection.pending:
            outs.extend(self._complete(collection))
        return outs

    def _on_sorry(self, env: Envelope) -> list[Effect]:
        collection = self.collections.get(env.request_id)
        if collection is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        if collection.phase == "done" or env.sender not in collection.pending:
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        collection.pending.discard(env.sender)
        if not collection.pending:
            return self._complete(collection)
        return []

    def _complete(self, collection: _ZaCollection) -> list[Effect]:
        collection.phase = "done"
        # Deterministic forwarding order regardless of reply arrival order.
        ordered = sorted(collection.proposals,
                         key=lambda p: (p.guesthouse_ids, p.proposal_id))
        collection.proposals = ordered
        return [Outbound(collection.requester, "tell", collection.request_id,
                         {"proposals": [codec.proposal_to_dict(p) for p in ordered]})]

    # -- booking saga: hold every leg, then confirm or roll back -------------

    def _on_book(self, env: Envelope) -> list[Effect]:
        rid = env.request_id
        collection = self.collections.get(rid)
        proposal = None
        if collection is not None:
            for p in collection.proposals:
                if p.proposal_id == env.body.get("proposal_id"):
                    proposal = p
                    break
        if proposal is None:
            return [Outbound(env.sender, "failed", rid,
                             {"reason": "unknown-proposal",
                              "proposal_id": env.body.get("proposal_id")})]
        user_id = env.body.get("user_id") or collection.request.user_id
        booking_id = self.ctx.new_token()
        saga = _ZaSaga(
            booking_id=booking_id,
            request_id=rid,
            requester=env.sender,
            proposal=proposal,
            user_id=user_id,
            pending_holds={f"ga:{leg.guesthouse_id}" for leg in proposal.legs},
        )
        self.sagas[booking_id] = saga
        outs: list[Effect] = [
            Outbound(f"ga:{leg.guesthouse_id}", "book", rid,
                     {"booking_id": booking_id,
                      "user_id": user_id,
                      "leg": codec.leg_to_dict(leg)})
            for leg in proposal.legs
        ]
        outs.append(TimerRequest(self.ctx.config.ga_reply_budget,
                                 {"kind": "saga", "booking_id": booking_id}))
        return outs

    def _on_hold_reply(self, env: Envelope) -> list[Effect]:
        saga = self.sagas.get(env.body.get("booking_id", ""))
        if saga is None or saga.phase != "holding" or env.sender not in saga.pending_holds:
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        saga.pending_holds.discard(env.sender)
        if env.performative == "hold-ok":
            saga.held.add(env.sender)
        else:
            saga.any_failed = True
        if saga.pending_holds:
            return []
        return self._decide(saga)

    def _decide(self, saga: _ZaSaga) -> list[Effect]:
        if saga.any_failed:
            saga.phase = "done"
            outs: list[Effect] = [
                Outbound(ga, "release", saga.request_id, {"booking_id": saga.booking_id})
                for ga in sorted(saga.held)
            ]
            outs.append(Outbound(saga.requester, "failed", saga.request_id,
                                 {"booking_id": saga.booking_id,
                                  "proposal_id": saga.proposal.proposal_id,
                                  "reason": "hold-failed"}))
            return outs
        saga.phase = "confirming"
        saga.pending_confirms = set(saga.held)
        return [Outbound(ga, "confirm", saga.request_id, {"booking_id": saga.booking_id})
                for ga in sorted(saga.held)]

    def _on_confirm_ack(self, env: Envelope) -> list[Effect]:
        saga = self.sagas.get(env.body.get("booking_id", ""))
        if saga is None or saga.phase != "confirming" or env.sender not in saga.pending_confirms:
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        saga.pending_confirms.discard(env.sender)
        if env.performative == "failed":
            # A hold expired between hold-ok and confirm; already-confirmed
            # legs stay (confirmed bookings never change) so all we can do
            # is report the failure upstream.
            saga.phase = "done"
            return [Fault("fault", {"reason": "confirm-failed",
                                    "booking_id": saga.booking_id,
                                    "from": env.sender}),
                    Outbound(saga.requester, "failed", saga.request_id,
                             {"booking_id": saga.booking_id,
                              "proposal_id": saga.proposal.proposal_id,
                              "reason": "confirm-failed"})]
        if saga.pending_confirms:
            return []
        saga.phase = "done"
        return [Outbound(saga.requester, "booked", saga.request_id,
                         {"booking_id": saga.booking_id,
                          "proposal_id": saga.proposal.proposal_id})]

    # -- timers --------------------------------------------------------------

    def _on_timer(self, payload: Mapping) -> list[Effect]:
        kind = payload.get("kind")
        if kind == "za-collect":
            collection = self.collections.get(payload.get("request_id", ""))
            if collection is None or collection.phase == "done":
                return []
            missing = sorted(collection.pending)
            collection.pending.clear()
            outs: list[Effect] = [Fault("timeout", {"request_id": collection.request_id,
                                                    "missing": missing})]
            outs.extend(self._complete(collection))
            return outs
        if kind == "saga":
            saga = self.sagas.get(payload.get("booking_id", ""))
            if saga is None or saga.phase == "done":
                return []
            if saga.phase == "holding":
                missing = sorted(saga.pending_holds)
                saga.pending_holds.clear()
                saga.any_failed = True
                return [Fault("timeout", {"booking_id": saga.booking_id,
                                          "missing": missing})] + self._decide(saga)
            saga.phase = "done"
            return [Fault("timeout", {"booking_id": saga.booking_id,
                                      "missing": sorted(saga.pending_confirms)}),
                    Outbound(saga.requester, "failed", saga.request_id,
                             {"booking_id": saga.booking_id,
                              "proposal_id": saga.proposal.proposal_id,
                              "reason": "confirm-timeout"})]
        return []

    def open_conversations(self) -> list[str]:
        out = [c.request_id for c in self.collections.values() if c.phase != "done"]
        out.extend(s.booking_id for s in self.sagas.values() if s.phase != "done")
        return out


# ---------------------------------------------------------------------------
# Guesthouse agent: evaluate asks, run the collaboration sub-protocol,
# execute holds against its calendar.
# ---------------------------------------------------------------------------


@dataclass
class GaContext:
    guesthouse_id: str
    zone_id: str
    za: str
    siblings: Callable[[], list[str]]  # other guesthouse agents of the zone
    profile: Callable[[], Any]
    calendar: Callable[[], Any]
    hold: Callable[[str, str, str, ProposalLeg], bool]
    confirm: Callable[[str], str]
    release: Callable[[str], str]
    new_token: Callable[[], str]
    config: ProtocolConfig = field(default_factory=ProtocolConfig)


@dataclass
class _GaInitiative:
    request: ReservationRequest
    prefix_leg: ProposalLeg
    pending: set[str]
    completions: list[tuple[str, ProposalLeg]] = field(default_factory=list)
    phase: str = "awaiting"  # awaiting | done


class GuesthouseLogic:
    """One guesthouse's side of the ask/tell/sorry and collaboration rules.

    Exclusivity: once this guesthouse has offered itself for a request id
    (a standalone tell, a composite tell, or a completion leg), every later
    solicitation under that id is refused with "already-participating".
    """

    def __init__(self, ctx: GaContext):
        self.ctx = ctx
        self.participating: set[str] = set()
        self.initiatives: dict[str, _GaInitiative] = {}

    def handle(self, event, now: int) -> list[Effect]:
        if isinstance(event, Envelope):
            handler = {
                "ask": self._on_ask,
                "collab-ask": self._on_collab_ask,
                "collab-tell": self._on_collab_tell,
                "collab-sorry": self._on_collab_sorry,
                "book": self._on_book,
                "confirm": self._on_confirm,
                "release": self._on_release,
            }.get(event.performative)
            if handler is None:
                return [Fault("fault", {"reason": "unexpected-performative",
                                        "performative": event.performative,
                                        "request_id": event.request_id})]
            return handler(event)
        if isinstance(event, Timer):
            return self._on_timer(event.payload)
        return [Fault("fault", {"reason": "unexpected-event", "event": repr(event)})]

    def _gc_timer(self, rid: str) -> TimerRequest:
        return TimerRequest(self.ctx.config.participation_ttl,
                            {"kind": "participation-gc", "request_id": rid})

    def _mark_participating(self, rid: str) -> TimerRequest:
        self.participating.add(rid)
        return self._gc_timer(rid)

    def _busy(self, rid: str) -> bool:
        if rid in self.participating:
            return True
        initiative = self.initiatives.get(rid)
        return initiative is not None and initiative.phase == "awaiting"

    def _on_ask(self, env: Envelope) -> list[Effect]:
        rid = env.request_id
        if self._busy(rid):
            return [Outbound(env.sender, "sorry", rid,
                             {"reason": "already-participating"})]
        try:
            request = _request_from_body(env.body)
        except ValidationError as exc:
            return [Fault("fault", {"reason": "bad-request", "request_id": rid,
                                    "detail": str(exc)}),
                    Outbound(env.sender, "sorry", rid, {"reason": "bad-request"})]
        result, quoted = evaluate_request(self.ctx.profile(), self.ctx.calendar(), request)
        if isinstance(result, Full):
            leg = ProposalLeg(self.ctx.guesthouse_id, request.interval, request.rooms, quoted)
            proposal = Proposal(self.ctx.new_token(), rid, (leg,), quoted)
            gc = self._mark_participating(rid)
            return [Outbound(env.sender, "tell", rid,
                             {"proposal": codec.proposal_to_dict(proposal)}), gc]
        if isinstance(result, NoMatch):
            return [Outbound(env.sender, "sorry", rid, {"reason": "no-match"})]
        # Prefix: try to find a sibling covering the tail.
        siblings = list(self.ctx.siblings())
        if self.ctx.config.max_legs < 2 or not siblings:
            return [Outbound(env.sender, "sorry", rid, {"reason": "no-completion"})]
        prefix_interval = StayInterval(request.interval.arrival, result.cover_until)
        prefix_leg = ProposalLeg(self.ctx.guesthouse_id, prefix_interval, request.rooms, quoted)
        remainder = StayInterval(result.cover_until, request.interval.departure)
        self.initiatives[rid] = _GaInitiative(
            request=request, prefix_leg=prefix_leg, pending=set(siblings)
        )
        outs: list[Effect] = [
            Outbound(ga, "collab-ask", rid,
                     {"request": codec.request_to_dict(request),
                      "remainder": codec.interval_to_dict(remainder)})
            for ga in siblings
        ]
        outs.append(TimerRequest(self.ctx.config.collab_budget,
                                 {"kind": "collab", "request_id": rid}))
        return outs

    def _on_collab_ask(self, env: Envelope) -> list[Effect]:
        rid = env.request_id
        if self._busy(rid):
            return [Outbound(env.sender, "collab-sorry", rid,
                             {"reason": "already-participating"})]
        try:
            request = _request_from_body(env.body)
            remainder = codec.interval_from_dict(env.body.get("remainder", {}))
        except ValidationError as exc:
            return [Fault("fault", {"reason": "bad-request", "request_id": rid,
                                    "detail": str(exc)}),
                    Outbound(env.sender, "collab-sorry", rid, {"reason": "bad-request"})]
        profile = self.ctx.profile()
        # Full availability over the remainder or nothing: tails are never
        # split further. The price cap is the composer's concern.
        ok = (
            facilities_satisfied(profile.facilities, request.required_facilities)
            and request.rooms.capacity >= request.persons
            and rooms_available(self.ctx.calendar(), request.rooms, remainder)
        )
        if not ok:
            return [Outbound(env.sender, "collab-sorry", rid, {"reason": "no-match"})]
        leg = ProposalLeg(self.ctx.guesthouse_id, remainder, request.rooms,
                          price_total(profile, request.rooms, remainder))
        gc = self._mark_participating(rid)
        return [Outbound(env.sender, "collab-tell", rid,
                         {"leg": codec.leg_to_dict(leg)}), gc]

    def _on_collab_tell(self, env: Envelope) -> list[Effect]:
        initiative = self.initiatives.get(env.request_id)
        if initiative is None or initiative.phase == "done":
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        if env.sender not in initiative.pending:
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        initiative.pending.discard(env.sender)
        try:
            leg = codec.leg_from_dict(env.body.get("leg", {}))
            initiative.completions.append((env.sender, leg))
        except ValidationError as exc:
            return [Fault("fault", {"reason": "bad-leg", "request_id": env.request_id,
                                    "detail": str(exc)})]
        if initiative.pending:
            return []
        return self._finalize(env.request_id, initiative)

    def _on_collab_sorry(self, env: Envelope) -> list[Effect]:
        initiative = self.initiatives.get(env.request_id)
        if initiative is None or initiative.phase == "done" or env.sender not in initiative.pending:
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        initiative.pending.discard(env.sender)
        if initiative.pending:
            return []
        return self._finalize(env.request_id, initiative)

    def _finalize(self, rid: str, initiative: _GaInitiative) -> list[Effect]:
        """Compose with the first workable completion in guesthouse-id order."""
        initiative.phase = "done"
        for _, leg in sorted(initiative.completions, key=lambda c: c[1].guesthouse_id):
            try:
                proposal = compose(initiative.prefix_leg, leg, initiative.request,
                                   self.ctx.new_token())
            except (CompositionError, StayBrokerError):
                continue
            gc = self._mark_participating(rid)
            return [Outbound(self.ctx.za, "tell", rid,
                             {"proposal": codec.proposal_to_dict(proposal)}), gc]
        return [Outbound(self.ctx.za, "sorry", rid, {"reason": "no-completion"})]

    # -- booking leg execution ------------------------------------------------

    def _on_book(self, env: Envelope) -> list[Effect]:
        booking_id = env.body.get("booking_id", "")
        try:
            leg = codec.leg_from_dict(env.body.get("leg", {}))
            if leg.guesthouse_id != self.ctx.guesthouse_id:
                raise ValidationError(f"leg addressed to {leg.guesthouse_id}")
            ok = self.ctx.hold(booking_id, env.request_id,
                               env.body.get("user_id", ""), leg)
        except StayBrokerError as exc:
            return [Fault("fault", {"reason": "hold-error", "request_id": env.request_id,
                                    "detail": str(exc)}),
                    Outbound(env.sender, "hold-fail", env.request_id,
                             {"booking_id": booking_id, "reason": str(exc)})]
        performative = "hold-ok" if ok else "hold-fail"
        return [Outbound(env.sender, performative, env.request_id,
                         {"booking_id": booking_id})]

    def _on_confirm(self, env: Envelope) -> list[Effect]:
        booking_id = env.body.get("booking_id", "")
        try:
            state = self.ctx.confirm(booking_id)
        except StayBrokerError as exc:
            state = f"error: {exc}"
        if state == "confirmed":
            return [Outbound(env.sender, "booked", env.request_id,
                             {"booking_id": booking_id})]
        return [Outbound(env.sender, "failed", env.request_id,
                         {"booking_id": booking_id, "reason": state})]

    def _on_release(self, env: Envelope) -> list[Effect]:
        booking_id = env.body.get("booking_id", "")
        try:
            self.ctx.release(booking_id)
        except StayBrokerError as exc:
            return [Fault("fault", {"reason": "release-error",
                                    "booking_id": booking_id, "detail": str(exc)})]
        return []

    def _on_timer(self, payload: Mapping) -> list[Effect]:
        kind = payload.get("kind")
        rid = payload.get("request_id", "")
        if kind == "collab":
            initiative = self.initiatives.get(rid)
            if initiative is None or initiative.phase == "done":
                return []
            missing = sorted(initiative.pending)
            initiative.pending.clear()
            return [Fault("timeout", {"request_id": rid, "missing": missing})] + \
                self._finalize(rid, initiative)
        if kind == "participation-gc":
            self.participating.discard(rid)
            initiative = self.initiatives.get(rid)
            if initiative is not None and initiative.phase == "done":
                del self.initiatives[rid]
            return []
        return []

    def open_conversations(self) -> list[str]:
        return [rid for rid, i in self.initiatives.items() if i.phase != "done"]


# ---------------------------------------------------------------------------
# National agent: mint request ids, fan out to every zone, classify.
# ---------------------------------------------------------------------------


@dataclass
class NaContext:
    zas: Callable[[], list[str]]
    za_for_guesthouse: Callable[[str], str | None]
    new_token: Callable[[], str]
    config: ProtocolConfig = field(default_factory=ProtocolConfig)


@dataclass
class _NaConversation:
    token: str  # the submitter's conversation id
    pa: str
    official_id: str  # the id used with zonal and guesthouse agents
    request: ReservationRequest
    pending: set[str]
    proposals: list[Proposal] = field(default_factory=list)
    classification: Classification | None = None
    phase: str = "collecting"  # collecting | classified


class NationalLogic:
    """Nation-wide collection: one ask per zone, one ranked answer per user."""

    def __init__(self, ctx: NaContext):
        self.ctx = ctx
        self.conversations: dict[str, _NaConversation] = {}
        self._by_official: dict[str, str] = {}

    def handle(self, event, now: int) -> list[Effect]:
        if isinstance(event, Envelope):
            handler = {
                "ask": self._on_ask,
                "tell": self._on_tell,
                "book": self._on_book,
                "booked": self._on_outcome,
                "failed": self._on_outcome,
            }.get(event.performative)
            if handler is None:
                return [Fault("fault", {"reason": "unexpected-performative",
                                        "performative": event.performative,
                                        "request_id": event.request_id})]
            return handler(event)
        if isinstance(event, Timer):
            return self._on_timer(event.payload)
        return [Fault("fault", {"reason": "unexpected-event", "event": repr(event)})]

    def _on_ask(self, env: Envelope) -> list[Effect]:
        token = env.request_id
        if token in self.conversations:
            return [Outbound(env.sender, "failed", token,
                             {"reason": "duplicate-request"})]
        try:
            request = _request_from_body(env.body)
        except ValidationError as exc:
            return [Outbound(env.sender, "failed", token,
                             {"reason": f"bad-request: {exc}"})]
        if request.zone is not None:
            # Zone-targeted requests take the direct personal-to-zonal path.
            return [Outbound(env.sender, "failed", token,
                             {"reason": "zone-targeted"})]
        official = self.ctx.new_token()
        official_request = ReservationRequest(
            request_id=official,
            user_id=request.user_id,
            zone=None,
            persons=request.persons,
            interval=request.interval,
            rooms=request.rooms,
            max_total_price=request.max_total_price,
            required_facilities=request.required_facilities,
        )
        zas = list(self.ctx.zas())
        conversation = _NaConversation(
            token=token, pa=env.sender, official_id=official,
            request=official_request, pending=set(zas),
        )
        self.conversations[token] = conversation
        self._by_official[official] = token
        if not zas:
            return self._complete(conversation)
        outs: list[Effect] = [
            Outbound(za, "ask", official,
                     {"request": codec.request_to_dict(official_request)})
            for za in zas
        ]
        outs.append(TimerRequest(self.ctx.config.na_collection_budget,
                                 {"kind": "na-collect", "token": token}))
        return outs

    def _on_tell(self, env: Envelope) -> list[Effect]:
        token = self._by_official.get(env.request_id)
        conversation = self.conversations.get(token) if token else None
        if conversation is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        if conversation.phase != "collecting" or env.sender not in conversation.pending:
            return [Fault("late-drop", {"request_id": env.request_id,
                                        "msg_id": env.msg_id, "from": env.sender})]
        conversation.pending.discard(env.sender)
        outs: list[Effect] = []
        try:
            for raw in env.body.get("proposals", []):
                conversation.proposals.append(codec.proposal_from_dict(raw))
        except ValidationError as exc:
            outs.append(Fault("invalid-proposal", {"request_id": env.request_id,
                                                   "from": env.sender,
                                                   "detail": str(exc)}))
        if not conversation.pending:
            outs.extend(self._complete(conversation))
        return outs

    def _complete(self, conversation: _NaConversation) -> list[Effect]:
        conversation.phase = "classified"
        conversation.classification = classify(conversation.official_id,
                                               conversation.proposals)
        return [Outbound(conversation.pa, "classify", conversation.token,
                         {"classification":
                          classification_to_dict(conversation.classification)})]

    def _on_book(self, env: Envelope) -> list[Effect]:
        conversation = self.conversations.get(env.request_id)
        if conversation is None or conversation.classification is None:
            return [Outbound(env.sender, "failed", env.request_id,
                             {"reason": "unknown-request"})]
        proposal = next((p for p in conversation.classification.proposals
                         if p.proposal_id == env.body.get("proposal_id")), None)
        if proposal is None:
            return [Outbound(env.sender, "failed", env.request_id,
                             {"reason": "unknown-proposal",
                              "proposal_id": env.body.get("proposal_id")})]
        za = self.ctx.za_for_guesthouse(proposal.legs[0].guesthouse_id)
        if za is None:
            return [Outbound(env.sender, "failed", env.request_id,
                             {"reason": "no-zone-for-guesthouse"})]
        return [Outbound(za, "book", conversation.official_id,
                         {"proposal_id": proposal.proposal_id,
                          "user_id": conversation.request.user_id})]

    def _on_outcome(self, env: Envelope) -> list[Effect]:
        token = self._by_official.get(env.request_id)
        conversation = self.conversations.get(token) if token else None
        if conversation is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        return [Outbound(conversation.pa, env.performative, conversation.token,
                         dict(env.body))]

    def _on_timer(self, payload: Mapping) -> list[Effect]:
        if payload.get("kind") != "na-collect":
            return []
        conversation = self.conversations.get(payload.get("token", ""))
        if conversation is None or conversation.phase != "collecting":
            return []
        missing = sorted(conversation.pending)
        conversation.pending.clear()
        return [Fault("timeout", {"request_id": conversation.official_id,
                                  "missing": missing})] + self._complete(conversation)

    def open_conversations(self) -> list[str]:
        return [c.token for c in self.conversations.values() if c.phase == "collecting"]


# ---------------------------------------------------------------------------
# Personal agent: submissions, selections, history.
# ---------------------------------------------------------------------------


@dataclass
class PaContext:
    user_id: str
    na: Callable[[], str | None]
    zone_exists: Callable[[str], bool]
    zones: Callable[[], list[str]]
    new_token: Callable[[], str]
    record_history: Callable[[dict], None]
    config: ProtocolConfig = field(default_factory=ProtocolConfig)
    # Profile defaults, applied when a submission omits the field entirely.
    default_zone: str | None = None
    default_facilities: frozenset[str] = frozenset()


@dataclass
class _PaSubmission:
    token: str
    request: ReservationRequest
    bypass: bool
    origin: tuple[str, str] | None = None  # ("cma", sender) for text-channel requests
    status: str = "pending"  # pending | classified | booked
    classification: Classification | None = None
    booking: dict | None = None
    inflight_proposal: str | None = None
    tickets: list = field(default_factory=list)
    attempts: list = field(default_factory=list)
    submitted_at: int = 0


class PersonalLogic:
    """One user's agent: submits requests, stores rankings, books, records
    history. Zone-targeted submissions go straight to the zonal agent and
    are ranked locally; everything else goes through the national agent.
    """

    def __init__(self, ctx: PaContext):
        self.ctx = ctx
        self.submissions: dict[str, _PaSubmission] = {}
        self._lock = threading.Lock()

    def handle(self, event, now: int) -> list[Effect]:
        if isinstance(event, Command):
            if event.name == "submit":
                return self._on_submit(event, now)
            if event.name == "select":
                return self._on_select(event, now)
            if event.ticket:
                event.ticket.resolve({"outcome": "error",
                                      "reason": f"unknown-command: {event.name}"})
            return []
        if isinstance(event, Envelope):
            handler = {
                "ask": self._on_channel_ask,
                "book": self._on_channel_book,
                "classify": self._on_classify,
                "tell": self._on_zone_tell,
                "booked": self._on_booked,
                "failed": self._on_failed,
            }.get(event.performative)
            if handler is None:
                return [Fault("fault", {"reason": "unexpected-performative",
                                        "performative": event.performative,
                                        "request_id": event.request_id})]
            return handler(event, now)
        if isinstance(event, Timer):
            return []
        return [Fault("fault", {"reason": "unexpected-event", "event": repr(event)})]

    # -- submission -----------------------------------------------------------

    def build_request(self, fields: Mapping, token: str) -> ReservationRequest:
        """Validate raw preference fields into a request carrying `token`.

        Fields absent from the mapping fall back to the user's profile
        defaults; an explicit null stays null.
        """
        zone = fields["zone"] if "zone" in fields else self.ctx.default_zone
        facilities = (fields["required_facilities"]
                      if "required_facilities" in fields
                      else sorted(self.ctx.default_facilities))
        request = codec.request_from_dict({
            "request_id": token,
            "user_id": self.ctx.user_id,
            "zone": zone,
            "persons": fields.get("persons"),
            "interval": {"arrival": fields.get("arrival"),
                         "departure": fields.get("departure")},
            "rooms": fields.get("rooms"),
            "max_total_price": fields.get("max_total_price"),
            "required_facilities": facilities,
        })
        validate_request(request, known_zones=self.ctx.zones())
        return request

    def _route_submission(self, request: ReservationRequest, token: str) -> Outbound:
        if request.zone is not None:
            return Outbound(za_id(request.zone), "ask", token,
                            {"request": codec.request_to_dict(request)})
        na = self.ctx.na()
        if na is None:
            raise ValidationError("no national agent is registered; name a zone")
        return Outbound(na, "ask", token,
                        {"request": codec.request_to_dict(request)})

    def _on_submit(self, command: Command, now: int) -> list[Effect]:
        token = command.payload.get("token") or self.ctx.new_token()
        try:
            request = command.payload.get("request") or self.build_request(
                command.payload.get("fields", {}), token)
            out = self._route_submission(request, token)
        except ValidationError as exc:
            if command.ticket:
                command.ticket.resolve({"outcome": "error", "reason": str(exc)})
            return [Fault("fault", {"reason": "bad-submission", "detail": str(exc)})]
        with self._lock:
            self.submissions[token] = _PaSubmission(
                token=token, request=request, bypass=request.zone is not None,
                submitted_at=now,
            )
        if command.ticket:
            command.ticket.resolve({"outcome": "submitted", "request_id": token})
        return [out]

    def _on_channel_ask(self, env: Envelope, now: int) -> list[Effect]:
        token = self.ctx.new_token()
        try:
            request = self.build_request(env.body.get("request", {}), token)
            out = self._route_submission(request, token)
        except ValidationError as exc:
            return [Outbound(env.sender, "failed", env.request_id,
                             {"reason": str(exc)})]
        with self._lock:
            self.submissions[token] = _PaSubmission(
                token=token, request=request, bypass=request.zone is not None,
                origin=("cma", env.sender), submitted_at=now,
            )
        return [out]

    # -- classification ---------------------------------------------------------

    def _store_classification(self, submission: _PaSubmission,
                              classification: Classification, now: int) -> list[Effect]:
        with self._lock:
            submission.classification = classification
            submission.status = "classified"
        self.ctx.record_history({
            "user_id": self.ctx.user_id,
            "timestamp": now,
            "request": codec.request_to_dict(submission.request),
            "classification": classification_to_dict(classification),
            "outcome": None,
        })
        if submission.origin:
            return [Outbound(submission.origin[1], "classify", submission.token,
                             {"classification": classification_to_dict(classification)})]
        return []

    def _on_classify(self, env: Envelope, now: int) -> list[Effect]:
        submission = self.submissions.get(env.request_id)
        if submission is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        try:
            classification = classification_from_dict(env.body.get("classification", {}))
        except ValidationError as exc:
            return [Fault("fault", {"reason": "bad-classification",
                                    "request_id": env.request_id, "detail": str(exc)})]
        return self._store_classification(submission, classification, now)

    def _on_zone_tell(self, env: Envelope, now: int) -> list[Effect]:
        submission = self.submissions.get(env.request_id)
        if submission is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        try:
            proposals = [codec.proposal_from_dict(raw)
                         for raw in env.body.get("proposals", [])]
            classification = classify(submission.token, proposals)
        except ValidationError as exc:
            return [Fault("fault", {"reason": "bad-proposals",
                                    "request_id": env.request_id, "detail": str(exc)})]
        return self._store_classification(submission, classification, now)

    # -- selection and outcome ----------------------------------------------------

    def _on_select(self, command: Command, now: int) -> list[Effect]:
        token = command.payload.get("token", "")
        proposal_id = command.payload.get("proposal_id", "")
        ticket = command.ticket
        submission = self.submissions.get(token)

        def reject(reason: str) -> list[Effect]:
            if ticket:
                ticket.resolve({"outcome": "error", "reason": reason})
            return []

        if submission is None:
            return reject("unknown-request")
        if submission.status == "pending":
            return reject("pending")
        if submission.status == "booked":
            assert submission.booking is not None
            if submission.booking.get("proposal_id") == proposal_id:
                if ticket:
                    ticket.resolve(dict(submission.booking))
                return []
            return reject("already-booked")
        if submission.classification is None or not any(
            p.proposal_id == proposal_id for p in submission.classification.proposals
        ):
            return reject("unknown-proposal")
        if submission.inflight_proposal is not None:
            if submission.inflight_proposal == proposal_id:
                if ticket:
                    submission.tickets.append(ticket)
                return []
            return reject("selection-in-flight")
        submission.inflight_proposal = proposal_id
        if ticket:
            submission.tickets.append(ticket)
        receiver = za_id(submission.request.zone) if submission.bypass else self.ctx.na()
        return [Outbound(receiver, "book", token,
                         {"proposal_id": proposal_id, "user_id": self.ctx.user_id})]

    def _on_channel_book(self, env: Envelope, now: int) -> list[Effect]:
        command = Command("select", {"token": env.request_id,
                                     "proposal_id": env.body.get("proposal_id", "")})
        outs = self._on_select(command, now)
        submission = self.submissions.get(env.request_id)
        if not outs and submission is not None and submission.status == "booked" \
                and submission.booking \
                and submission.booking.get("proposal_id") == env.body.get("proposal_id"):
            return [Outbound(env.sender, "booked", env.request_id,
                             dict(submission.booking))]
        if not outs:
            return [Outbound(env.sender, "failed", env.request_id,
                             {"reason": "selection-rejected"})]
        return outs

    def _resolve_tickets(self, submission: _PaSubmission, outcome: dict) -> None:
        for ticket in submission.tickets:
            ticket.resolve(dict(outcome))
        submission.tickets.clear()

    def _on_booked(self, env: Envelope, now: int) -> list[Effect]:
        submission = self.submissions.get(env.request_id)
        if submission is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        outcome = {"outcome": "booked",
                   "booking_id": env.body.get("booking_id"),
                   "proposal_id": env.body.get("proposal_id",
                                               submission.inflight_proposal)}
        with self._lock:
            submission.status = "booked"
            submission.booking = outcome
            submission.inflight_proposal = None
            submission.attempts.append(outcome)
        self.ctx.record_history({
            "user_id": self.ctx.user_id,
            "timestamp": now,
            "request": codec.request_to_dict(submission.request),
            "classification": (classification_to_dict(submission.classification)
                               if submission.classification else None),
            "outcome": env.body.get("booking_id"),
        })
        self._resolve_tickets(submission, outcome)
        if submission.origin:
            return [Outbound(submission.origin[1], "booked", submission.token,
                             dict(env.body))]
        return []

    def _on_failed(self, env: Envelope, now: int) -> list[Effect]:
        submission = self.submissions.get(env.request_id)
        if submission is None:
            return [Fault("fault", {"reason": "unknown-request",
                                    "request_id": env.request_id})]
        outcome = {"outcome": "failed", "reason": env.body.get("reason", "failed"),
                   "proposal_id": submission.inflight_proposal}
        with self._lock:
            submission.inflight_proposal = None
            submission.attempts.append(outcome)
        self._resolve_tickets(submission, outcome)
        if submission.origin:
            return [Outbound(submission.origin[1], "failed", submission.token,
                             dict(env.body))]
        return []

    # -- snapshots for UIs ----------------------------------------------------------

    def status(self, token: str) -> dict | None:
        with self._lock:
            submission = self.submissions.get(token)
            if submission is None:
                return None
            return {
                "request_id": submission.token,
                "status": submission.status,
                "zone": submission.request.zone,
                "request": codec.request_to_dict(submission.request),
                "classification": (classification_to_dict(submission.classification)
                                   if submission.classification else None),
                "booking": dict(submission.booking) if submission.booking else None,
                "attempts": [dict(a) for a in submission.attempts],
            }

    def tokens(self) -> list[str]:
        with self._lock:
            return list(self.submissions)

    def open_conversations(self) -> list[str]:
        with self._lock:
            return [s.token for s in self.submissions.values()
                    if s.status == "pending" or s.inflight_proposal is not None]
