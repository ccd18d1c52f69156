import json
from datetime import date, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from staybroker.domain import (
    AvailabilityCalendar,
    GuesthouseProfile,
    Proposal,
    ProposalLeg,
    RoomRequest,
    RoomType,
    StayInterval,
    make_leg,
)
from staybroker.domain import codec
from staybroker.errors import ProtocolError, ValidationError
from staybroker.protocol import (
    Command,
    Envelope,
    Fault,
    GaContext,
    GuesthouseLogic,
    NaContext,
    NationalLogic,
    Outbound,
    PaContext,
    PersonalLogic,
    ProtocolConfig,
    RankingCriteria,
    Ticket,
    Timer,
    TimerRequest,
    ZaContext,
    ZonalLogic,
    decode,
    encode,
    rank_proposals,
)
from staybroker.protocol.ranking import classification_to_dict, classify

from oracles import oracle_rank

ARRIVAL = date(2026, 7, 1)
DEPARTURE = date(2026, 7, 8)
WEEK = StayInterval(ARRIVAL, DEPARTURE)
SPLIT = ARRIVAL + timedelta(days=4)


def request_dict(zone=None, cap=100_000, rid="req-1"):
    return {
        "request_id": rid,
        "user_id": "u1",
        "zone": zone,
        "persons": 2,
        "interval": {"arrival": ARRIVAL.isoformat(), "departure": DEPARTURE.isoformat()},
        "rooms": {"single": 0, "double": 1, "triple": 0},
        "max_total_price": cap,
        "required_facilities": ["parking"],
    }


def envelope(sender, receiver, performative, body, rid="req-1", msg="m-1", at=0):
    return Envelope(
        msg_id=msg, request_id=rid, sender=sender, receiver=receiver,
        performative=performative, body=body, sent_at=at, auth_tag="t",
    )


def proposal_for(gh="G2", rid="req-1", price=700, pid="p-1"):
    leg = ProposalLeg(gh, WEEK, RoomRequest(double=1), price)
    return Proposal(pid, rid, (leg,), price)


def outbound_of(effects, performative=None):
    outs = [e for e in effects if isinstance(e, Outbound)]
    if performative is None:
        return outs
    return [o for o in outs if o.performative == performative]


class TestEnvelopeCodec:
    def test_round_trip_identity(self):
        env = envelope("pa:u1", "na", "ask", {"request": request_dict()})
        assert decode(encode(env)) == env

    def test_encoding_is_deterministic(self):
        a = envelope("pa:u1", "na", "ask", {"z": 1, "a": 2})
        b = envelope("pa:u1", "na", "ask", {"a": 2, "z": 1})
        assert encode(a) == encode(b)

    def test_unknown_performative_rejected(self):
        raw = json.loads(encode(envelope("pa:u1", "na", "ask", {})))
        raw["performative"] = "barter"
        with pytest.raises(ProtocolError):
            decode(json.dumps(raw))

    def test_schema_version_mismatch(self):
        raw = json.loads(encode(envelope("pa:u1", "na", "ask", {})))
        raw["v"] = 2
        with pytest.raises(ProtocolError):
            decode(json.dumps(raw))

    def test_missing_request_id_rejected(self):
        with pytest.raises(ValidationError):
            envelope("pa:u1", "na", "ask", {}, rid="")

    def test_malformed_bytes(self):
        with pytest.raises(ProtocolError):
            decode(b"{not json")


class TestRanking:
    def test_price_ascending_with_stable_ties(self):
        props = [
            proposal_for(pid="a", price=700),
            proposal_for(pid="b", price=650),
            proposal_for(pid="c", price=700),
        ]
        got = rank_proposals(props)
        assert [p.total_price for p in got] == [650, 700, 700]
        assert [p.proposal_id for p in got] == ["b", "a", "c"]

    def test_singleton(self):
        props = [proposal_for()]
        assert rank_proposals(props) == props

    def test_fewer_legs_wins_tie(self):
        single = proposal_for(gh="G9", pid="one", price=700)
        two = Proposal(
            "two", "req-1",
            (
                ProposalLeg("G1", StayInterval(ARRIVAL, SPLIT), RoomRequest(double=1), 400),
                ProposalLeg("G3", StayInterval(SPLIT, DEPARTURE), RoomRequest(double=1), 300),
            ),
            700,
        )
        assert [p.proposal_id for p in rank_proposals([two, single])] == ["one", "two"]

    def test_mixed_requests_rejected(self):
        with pytest.raises(ValidationError):
            rank_proposals([proposal_for(rid="req-1"), proposal_for(rid="req-2", pid="x")])

    def test_guesthouse_sequence_breaks_remaining_ties(self):
        a = proposal_for(gh="G2", pid="a", price=700)
        b = proposal_for(gh="G1", pid="b", price=700)
        assert [p.proposal_id for p in rank_proposals([a, b])] == ["b", "a"]

    @given(st.data())
    def test_matches_insertion_sort_oracle(self, data):
        n = data.draw(st.integers(0, 8))
        props = []
        for i in range(n):
            price = data.draw(st.integers(100, 105))
            gh = data.draw(st.sampled_from(["G1", "G2", "G3"]))
            legs = data.draw(st.integers(1, 2))
            if legs == 1:
                props.append(proposal_for(gh=gh, pid=f"p{i}", price=price))
            else:
                other = "G9" if gh != "G9" else "G8"
                half = price // 2
                props.append(Proposal(
                    f"p{i}", "req-1",
                    (
                        ProposalLeg(gh, StayInterval(ARRIVAL, SPLIT), RoomRequest(double=1), half),
                        ProposalLeg(other, StayInterval(SPLIT, DEPARTURE), RoomRequest(double=1), price - half),
                    ),
                    price,
                ))
        got = [codec.proposal_to_dict(p) for p in rank_proposals(props)]
        want = oracle_rank([codec.proposal_to_dict(p) for p in props])
        assert got == want

    def test_unknown_criteria_rejected(self):
        with pytest.raises(ValidationError):
            RankingCriteria(primary="vibes")


def za_logic(roster=("ga:G1", "ga:G2", "ga:G3")):
    tokens = iter(f"tok-{i}" for i in range(100))
    ctx = ZaContext(
        zone_id="Z1",
        roster=lambda: sorted(roster),
        new_token=lambda: next(tokens),
        config=ProtocolConfig(),
    )
    return ZonalLogic(ctx)


class TestZonalCollection:
    def test_fan_out_then_forward_two_of_three(self):
        logic = za_logic()
        effects = logic.handle(envelope("na", "za:Z1", "ask", {"request": request_dict()}), 0)
        asks = outbound_of(effects, "ask")
        assert sorted(o.receiver for o in asks) == ["ga:G1", "ga:G2", "ga:G3"]
        assert any(isinstance(e, TimerRequest) for e in effects)

        composite = Proposal(
            "p-mix", "req-1",
            (
                ProposalLeg("G1", StayInterval(ARRIVAL, SPLIT), RoomRequest(double=1), 320),
                ProposalLeg("G3", StayInterval(SPLIT, DEPARTURE), RoomRequest(double=1), 270),
            ),
            590,
        )
        assert logic.handle(envelope(
            "ga:G2", "za:Z1", "tell",
            {"proposal": codec.proposal_to_dict(proposal_for())}, msg="m2"), 1) == []
        assert logic.handle(envelope("ga:G3", "za:Z1", "sorry", {"reason": "no-match"}, msg="m3"), 1) == []
        effects = logic.handle(envelope(
            "ga:G1", "za:Z1", "tell",
            {"proposal": codec.proposal_to_dict(composite)}, msg="m4"), 2)
        forwards = outbound_of(effects, "tell")
        assert len(forwards) == 1
        assert forwards[0].receiver == "na"
        assert len(forwards[0].body["proposals"]) == 2

    def test_zero_guesthouses_forwards_empty_immediately(self):
        logic = za_logic(roster=())
        effects = logic.handle(envelope("na", "za:Z1", "ask", {"request": request_dict()}), 0)
        forwards = outbound_of(effects, "tell")
        assert len(forwards) == 1
        assert forwards[0].body["proposals"] == []

    def test_deadline_forwards_what_arrived(self):
        logic = za_logic()
        logic.handle(envelope("na", "za:Z1", "ask", {"request": request_dict()}), 0)
        logic.handle(envelope("ga:G2", "za:Z1", "tell",
                              {"proposal": codec.proposal_to_dict(proposal_for())}, msg="m2"), 1)
        logic.handle(envelope("ga:G3", "za:Z1", "sorry", {"reason": "no-match"}, msg="m3"), 1)
        effects = logic.handle(Timer({"kind": "za-collect", "request_id": "req-1"}), 100)
        timeouts = [e for e in effects if isinstance(e, Fault) and e.event == "timeout"]
        assert timeouts and timeouts[0].detail["missing"] == ["ga:G1"]
        forwards = outbound_of(effects, "tell")
        assert len(forwards[0].body["proposals"]) == 1

    def test_late_reply_after_done_is_dropped(self):
        logic = za_logic(roster=("ga:G2",))
        logic.handle(envelope("na", "za:Z1", "ask", {"request": request_dict()}), 0)
        logic.handle(envelope("ga:G2", "za:Z1", "tell",
                              {"proposal": codec.proposal_to_dict(proposal_for())}, msg="m2"), 1)
        effects = logic.handle(envelope("ga:G2", "za:Z1", "tell",
                                        {"proposal": codec.proposal_to_dict(proposal_for(pid="p-9"))},
                                        msg="m5"), 2)
        assert [e.event for e in effects if isinstance(e, Fault)] == ["late-drop"]
        assert outbound_of(effects) == []

    def test_unknown_request_is_logged_not_crashed(self):
        logic = za_logic()
        effects = logic.handle(envelope("ga:G2", "za:Z1", "tell", {"proposal": {}},
                                        rid="req-nope"), 0)
        assert [e.event for e in effects if isinstance(e, Fault)] == ["fault"]

    def test_invalid_proposal_dropped_at_revalidation(self):
        logic = za_logic(roster=("ga:G2",))
        logic.handle(envelope("na", "za:Z1", "ask", {"request": request_dict()}), 0)
        bad = codec.proposal_to_dict(proposal_for())
        bad["total_price"] = 123456  # no longer the sum of its legs
        effects = logic.handle(envelope("ga:G2", "za:Z1", "tell", {"proposal": bad}, msg="m2"), 1)
        assert any(isinstance(e, Fault) and e.event == "invalid-proposal" for e in effects)
        forwards = outbound_of(effects, "tell")
        assert forwards and forwards[0].body["proposals"] == []


class TestZonalBookingSaga:
    def _collected_logic(self):
        logic = za_logic(roster=("ga:G1", "ga:G3"))
        logic.handle(envelope("na", "za:Z1", "ask", {"request": request_dict()}), 0)
        composite = Proposal(
            "p-mix", "req-1",
            (
                ProposalLeg("G1", StayInterval(ARRIVAL, SPLIT), RoomRequest(double=1), 320),
                ProposalLeg("G3", StayInterval(SPLIT, DEPARTURE), RoomRequest(double=1), 270),
            ),
            590,
        )
        logic.handle(envelope("ga:G1", "za:Z1", "tell",
                              {"proposal": codec.proposal_to_dict(composite)}, msg="m2"), 1)
        logic.handle(envelope("ga:G3", "za:Z1", "sorry", {"reason": "no-match"}, msg="m3"), 1)
        return logic

    def test_holds_then_confirms_then_reports_booked(self):
        logic = self._collected_logic()
        effects = logic.handle(envelope("na", "za:Z1", "book",
                                        {"proposal_id": "p-mix", "user_id": "u1"}, msg="m6"), 5)
        books = outbound_of(effects, "book")
        assert sorted(o.receiver for o in books) == ["ga:G1", "ga:G3"]
        booking_id = books[0].body["booking_id"]

        assert logic.handle(envelope("ga:G1", "za:Z1", "hold-ok",
                                     {"booking_id": booking_id}, msg="m7"), 6) == []
        effects = logic.handle(envelope("ga:G3", "za:Z1", "hold-ok",
                                        {"booking_id": booking_id}, msg="m8"), 6)
        confirms = outbound_of(effects, "confirm")
        assert sorted(o.receiver for o in confirms) == ["ga:G1", "ga:G3"]

        logic.handle(envelope("ga:G1", "za:Z1", "booked", {"booking_id": booking_id}, msg="m9"), 7)
        effects = logic.handle(envelope("ga:G3", "za:Z1", "booked",
                                        {"booking_id": booking_id}, msg="m10"), 7)
        booked = outbound_of(effects, "booked")
        assert booked and booked[0].receiver == "na"
        assert booked[0].body["booking_id"] == booking_id

    def test_partial_hold_failure_releases_held_leg(self):
        logic = self._collected_logic()
        effects = logic.handle(envelope("na", "za:Z1", "book",
                                        {"proposal_id": "p-mix", "user_id": "u1"}, msg="m6"), 5)
        booking_id = outbound_of(effects, "book")[0].body["booking_id"]
        logic.handle(envelope("ga:G1", "za:Z1", "hold-ok", {"booking_id": booking_id}, msg="m7"), 6)
        effects = logic.handle(envelope("ga:G3", "za:Z1", "hold-fail",
                                        {"booking_id": booking_id}, msg="m8"), 6)
        releases = outbound_of(effects, "release")
        assert [o.receiver for o in releases] == ["ga:G1"]
        failed = outbound_of(effects, "failed")
        assert failed and failed[0].body["reason"] == "hold-failed"

    def test_unknown_proposal_fails(self):
        logic = self._collected_logic()
        effects = logic.handle(envelope("na", "za:Z1", "book",
                                        {"proposal_id": "p-nope"}, msg="m6"), 5)
        failed = outbound_of(effects, "failed")
        assert failed and failed[0].body["reason"] == "unknown-proposal"

    def test_saga_deadline_releases_and_fails(self):
        logic = self._collected_logic()
        effects = logic.handle(envelope("na", "za:Z1", "book",
                                        {"proposal_id": "p-mix", "user_id": "u1"}, msg="m6"), 5)
        booking_id = outbound_of(effects, "book")[0].body["booking_id"]
        logic.handle(envelope("ga:G1", "za:Z1", "hold-ok", {"booking_id": booking_id}, msg="m7"), 6)
        effects = logic.handle(Timer({"kind": "saga", "booking_id": booking_id}), 40)
        assert [o.receiver for o in outbound_of(effects, "release")] == ["ga:G1"]
        assert outbound_of(effects, "failed")


class FakeStore:
    """Scripted hold/confirm/release for guesthouse-logic tests."""

    def __init__(self, hold_ok=True):
        self.hold_ok = hold_ok
        self.calls = []

    def hold(self, booking_id, request_id, user_id, leg):
        self.calls.append(("hold", booking_id, leg.guesthouse_id))
        return self.hold_ok

    def confirm(self, booking_id):
        self.calls.append(("confirm", booking_id))
        return "confirmed"

    def release(self, booking_id):
        self.calls.append(("release", booking_id))
        return "released"


def ga_logic(gh="G1", free_doubles=None, siblings=("ga:G2", "ga:G3"),
             rates=(0, 80, 0), facilities=("parking", "tv"), store=None,
             config=None):
    """free_doubles: per-night free count for the double type, default all free."""
    overrides = {}
    if free_doubles is not None:
        for k, free in enumerate(free_doubles):
            overrides[(ARRIVAL + timedelta(days=k), RoomType.DOUBLE)] = free
    profile = GuesthouseProfile(
        guesthouse_id=gh, zone_id="Z1", name="Casa " + gh, address="x", telephone="y",
        facilities=frozenset(facilities),
        inventory={"single": 2, "double": 3, "triple": 1},
        nightly_rate={"single": rates[0], "double": rates[1], "triple": rates[2]},
    )
    calendar = AvailabilityCalendar(
        guesthouse_id=gh,
        inventory={"single": 2, "double": 3, "triple": 1},
        free_overrides=overrides,
    )
    store = store or FakeStore()
    tokens = iter(f"{gh.lower()}-tok-{i}" for i in range(100))
    ctx = GaContext(
        guesthouse_id=gh, zone_id="Z1", za="za:Z1",
        siblings=lambda: sorted(siblings),
        profile=lambda: profile,
        calendar=lambda: calendar,
        hold=store.hold, confirm=store.confirm, release=store.release,
        new_token=lambda: next(tokens),
        config=config or ProtocolConfig(),
    )
    return GuesthouseLogic(ctx), store


class TestGuesthouseLogic:
    def test_full_match_tells(self):
        logic, _ = ga_logic()
        effects = logic.handle(envelope("za:Z1", "ga:G1", "ask",
                                        {"request": request_dict()}), 0)
        tells = outbound_of(effects, "tell")
        assert len(tells) == 1
        proposal = tells[0].body["proposal"]
        assert proposal["total_price"] == 560
        assert [leg["guesthouse_id"] for leg in proposal["legs"]] == ["G1"]
        assert "req-1" in logic.participating

    def test_no_match_sorries(self):
        logic, _ = ga_logic(facilities=("tv",))
        effects = logic.handle(envelope("za:Z1", "ga:G1", "ask",
                                        {"request": request_dict()}), 0)
        assert outbound_of(effects, "sorry")[0].body["reason"] == "no-match"

    def test_prefix_initiates_collaboration(self):
        logic, _ = ga_logic(free_doubles=[3, 3, 3, 3, 0, 0, 0])
        effects = logic.handle(envelope("za:Z1", "ga:G1", "ask",
                                        {"request": request_dict()}), 0)
        collabs = outbound_of(effects, "collab-ask")
        assert sorted(o.receiver for o in collabs) == ["ga:G2", "ga:G3"]
        assert collabs[0].body["remainder"] == {
            "arrival": SPLIT.isoformat(), "departure": DEPARTURE.isoformat()}

    def test_collab_ask_after_participation_is_refused(self):
        logic, _ = ga_logic(gh="G2", siblings=("ga:G1", "ga:G3"))
        logic.handle(envelope("za:Z1", "ga:G2", "ask", {"request": request_dict()}), 0)
        effects = logic.handle(envelope(
            "ga:G1", "ga:G2", "collab-ask",
            {"request": request_dict(),
             "remainder": {"arrival": SPLIT.isoformat(), "departure": DEPARTURE.isoformat()}},
            msg="m2"), 1)
        sorries = outbound_of(effects, "collab-sorry")
        assert sorries and sorries[0].body["reason"] == "already-participating"
        assert sorries[0].receiver == "ga:G1"

    def test_collab_ask_with_free_tail_tells(self):
        logic, _ = ga_logic(gh="G3", free_doubles=[0, 0, 0, 0, 3, 3, 3],
                            siblings=("ga:G1", "ga:G2"), rates=(0, 90, 0))
        effects = logic.handle(envelope(
            "ga:G1", "ga:G3", "collab-ask",
            {"request": request_dict(),
             "remainder": {"arrival": SPLIT.isoformat(), "departure": DEPARTURE.isoformat()}}), 0)
        tells = outbound_of(effects, "collab-tell")
        assert tells and tells[0].body["leg"]["leg_price"] == 270
        assert "req-1" in logic.participating

    def test_initiator_composes_lowest_id_completion(self):
        logic, _ = ga_logic(free_doubles=[3, 3, 3, 3, 0, 0, 0])
        logic.handle(envelope("za:Z1", "ga:G1", "ask", {"request": request_dict()}), 0)
        leg3 = {"guesthouse_id": "G3",
                "interval": {"arrival": SPLIT.isoformat(), "departure": DEPARTURE.isoformat()},
                "rooms": {"single": 0, "double": 1, "triple": 0}, "leg_price": 270}
        leg2 = dict(leg3, guesthouse_id="G2", leg_price=300)
        logic.handle(envelope("ga:G3", "ga:G1", "collab-tell", {"leg": leg3}, msg="m2"), 1)
        effects = logic.handle(envelope("ga:G2", "ga:G1", "collab-tell", {"leg": leg2}, msg="m3"), 1)
        tells = outbound_of(effects, "tell")
        assert len(tells) == 1
        proposal = tells[0].body["proposal"]
        assert [leg["guesthouse_id"] for leg in proposal["legs"]] == ["G1", "G2"]
        assert proposal["total_price"] == 320 + 300

    def test_all_sorry_means_sorry(self):
        logic, _ = ga_logic(free_doubles=[3, 3, 3, 3, 0, 0, 0])
        logic.handle(envelope("za:Z1", "ga:G1", "ask", {"request": request_dict()}), 0)
        logic.handle(envelope("ga:G2", "ga:G1", "collab-sorry",
                              {"reason": "already-participating"}, msg="m2"), 1)
        effects = logic.handle(envelope("ga:G3", "ga:G1", "collab-sorry",
                                        {"reason": "no-match"}, msg="m3"), 1)
        sorries = outbound_of(effects, "sorry")
        assert sorries and sorries[0].receiver == "za:Z1"
        assert sorries[0].body["reason"] == "no-completion"

    def test_cap_busting_completion_is_skipped(self):
        logic, _ = ga_logic(free_doubles=[3, 3, 3, 3, 0, 0, 0])
        logic.handle(envelope("za:Z1", "ga:G1", "ask",
                              {"request": request_dict(cap=600)}), 0)
        cheap = {"guesthouse_id": "G3",
                 "interval": {"arrival": SPLIT.isoformat(), "departure": DEPARTURE.isoformat()},
                 "rooms": {"single": 0, "double": 1, "triple": 0}, "leg_price": 270}
        pricey = dict(cheap, guesthouse_id="G2", leg_price=500)
        logic.handle(envelope("ga:G2", "ga:G1", "collab-tell", {"leg": pricey}, msg="m2"), 1)
        effects = logic.handle(envelope("ga:G3", "ga:G1", "collab-tell", {"leg": cheap}, msg="m3"), 1)
        tells = outbound_of(effects, "tell")
        # G2 is cheaper-id but busts the 600 cap (320+500); G3 fits (320+270).
        assert [leg["guesthouse_id"] for leg in tells[0].body["proposal"]["legs"]] == ["G1", "G3"]

    def test_collab_deadline_finalizes(self):
        logic, _ = ga_logic(free_doubles=[3, 3, 3, 3, 0, 0, 0])
        logic.handle(envelope("za:Z1", "ga:G1", "ask", {"request": request_dict()}), 0)
        effects = logic.handle(Timer({"kind": "collab", "request_id": "req-1"}), 20)
        assert outbound_of(effects, "sorry")

    def test_collaboration_disabled_when_single_leg_only(self):
        logic, _ = ga_logic(free_doubles=[3, 3, 3, 3, 0, 0, 0],
                            config=ProtocolConfig(max_legs=1))
        effects = logic.handle(envelope("za:Z1", "ga:G1", "ask",
                                        {"request": request_dict()}), 0)
        assert outbound_of(effects, "collab-ask") == []
        assert outbound_of(effects, "sorry")

    def test_participation_gc_frees_the_ledger(self):
        logic, _ = ga_logic()
        logic.handle(envelope("za:Z1", "ga:G1", "ask", {"request": request_dict()}), 0)
        assert "req-1" in logic.participating
        logic.handle(Timer({"kind": "participation-gc", "request_id": "req-1"}), 700)
        assert "req-1" not in logic.participating

    def test_book_holds_and_replies(self):
        store = FakeStore(hold_ok=True)
        logic, _ = ga_logic(store=store)
        leg = {"guesthouse_id": "G1",
               "interval": {"arrival": ARRIVAL.isoformat(), "departure": DEPARTURE.isoformat()},
               "rooms": {"single": 0, "double": 1, "triple": 0}, "leg_price": 560}
        effects = logic.handle(envelope("za:Z1", "ga:G1", "book",
                                        {"booking_id": "b-1", "user_id": "u1", "leg": leg}), 0)
        assert outbound_of(effects, "hold-ok")
        assert store.calls == [("hold", "b-1", "G1")]

    def test_book_hold_failure(self):
        store = FakeStore(hold_ok=False)
        logic, _ = ga_logic(store=store)
        leg = {"guesthouse_id": "G1",
               "interval": {"arrival": ARRIVAL.isoformat(), "departure": DEPARTURE.isoformat()},
               "rooms": {"single": 0, "double": 1, "triple": 0}, "leg_price": 560}
        effects = logic.handle(envelope("za:Z1", "ga:G1", "book",
                                        {"booking_id": "b-1", "user_id": "u1", "leg": leg}), 0)
        assert outbound_of(effects, "hold-fail")


def na_logic(zas=("za:Z1", "za:Z2")):
    tokens = iter(f"official-{i}" for i in range(100))
    ctx = NaContext(
        zas=lambda: sorted(zas),
        za_for_guesthouse=lambda gh: "za:Z1" if gh in ("G1", "G2", "G3") else "za:Z2",
        new_token=lambda: next(tokens),
        config=ProtocolConfig(),
    )
    return NationalLogic(ctx)


class TestNationalLogic:
    def _submit(self, logic):
        body = {"request": request_dict(rid="sub-1")}
        return logic.handle(envelope("pa:u1", "na", "ask", body, rid="sub-1"), 0)

    def test_fans_out_with_minted_id(self):
        logic = na_logic()
        effects = self._submit(logic)
        asks = outbound_of(effects, "ask")
        assert sorted(o.receiver for o in asks) == ["za:Z1", "za:Z2"]
        assert all(o.request_id == "official-0" for o in asks)
        assert all(o.body["request"]["request_id"] == "official-0" for o in asks)

    def test_classifies_price_ascending_across_zones(self):
        logic = na_logic()
        self._submit(logic)
        z1 = [codec.proposal_to_dict(proposal_for(rid="official-0", pid="a", price=700)),
              codec.proposal_to_dict(proposal_for(rid="official-0", pid="b", price=650))]
        z2 = [codec.proposal_to_dict(proposal_for(gh="G9", rid="official-0", pid="c", price=600))]
        logic.handle(envelope("za:Z1", "na", "tell", {"proposals": z1},
                              rid="official-0", msg="m2"), 1)
        effects = logic.handle(envelope("za:Z2", "na", "tell", {"proposals": z2},
                                        rid="official-0", msg="m3"), 1)
        classify_msgs = outbound_of(effects, "classify")
        assert classify_msgs and classify_msgs[0].receiver == "pa:u1"
        assert classify_msgs[0].request_id == "sub-1"
        ranked = classify_msgs[0].body["classification"]["proposals"]
        assert [p["total_price"] for p in ranked] == [600, 650, 700]

    def test_zero_proposals_classifies_empty(self):
        logic = na_logic()
        self._submit(logic)
        logic.handle(envelope("za:Z1", "na", "tell", {"proposals": []},
                              rid="official-0", msg="m2"), 1)
        effects = logic.handle(envelope("za:Z2", "na", "tell", {"proposals": []},
                                        rid="official-0", msg="m3"), 1)
        ranked = outbound_of(effects, "classify")[0].body["classification"]["proposals"]
        assert ranked == []

    def test_zone_targeted_request_rejected(self):
        logic = na_logic()
        body = {"request": request_dict(zone="Z1", rid="sub-1")}
        effects = logic.handle(envelope("pa:u1", "na", "ask", body, rid="sub-1"), 0)
        failed = outbound_of(effects, "failed")
        assert failed and failed[0].body["reason"] == "zone-targeted"
        assert outbound_of(effects, "ask") == []

    def test_duplicate_submission_rejected(self):
        logic = na_logic()
        self._submit(logic)
        effects = self._submit(logic)
        failed = outbound_of(effects, "failed")
        assert failed and failed[0].body["reason"] == "duplicate-request"

    def test_book_routes_to_owning_zone(self):
        logic = na_logic()
        self._submit(logic)
        props = [codec.proposal_to_dict(proposal_for(rid="official-0", pid="a"))]
        logic.handle(envelope("za:Z1", "na", "tell", {"proposals": props},
                              rid="official-0", msg="m2"), 1)
        logic.handle(envelope("za:Z2", "na", "tell", {"proposals": []},
                              rid="official-0", msg="m3"), 1)
        effects = logic.handle(envelope("pa:u1", "na", "book", {"proposal_id": "a"},
                                        rid="sub-1", msg="m4"), 2)
        books = outbound_of(effects, "book")
        assert books and books[0].receiver == "za:Z1"
        assert books[0].request_id == "official-0"

    def test_outcome_is_mapped_back_to_submitter(self):
        logic = na_logic()
        self._submit(logic)
        logic.handle(envelope("za:Z1", "na", "tell", {"proposals": []},
                              rid="official-0", msg="m2"), 1)
        logic.handle(envelope("za:Z2", "na", "tell", {"proposals": []},
                              rid="official-0", msg="m3"), 1)
        effects = logic.handle(envelope("za:Z1", "na", "booked",
                                        {"booking_id": "b-1"}, rid="official-0", msg="m4"), 3)
        booked = outbound_of(effects, "booked")
        assert booked and booked[0].receiver == "pa:u1" and booked[0].request_id == "sub-1"


def pa_logic(zones=("Z1",), with_na=True):
    history = []
    tokens = iter(f"sub-{i}" for i in range(100))
    ctx = PaContext(
        user_id="u1",
        na=lambda: "na" if with_na else None,
        zone_exists=lambda z: z in zones,
        zones=lambda: list(zones),
        new_token=lambda: next(tokens),
        record_history=history.append,
        config=ProtocolConfig(),
    )
    return PersonalLogic(ctx), history


def submit_fields(zone=None):
    return {
        "zone": zone,
        "persons": 2,
        "arrival": ARRIVAL.isoformat(),
        "departure": DEPARTURE.isoformat(),
        "rooms": {"single": 0, "double": 1, "triple": 0},
        "max_total_price": 100_000,
        "required_facilities": ["parking"],
    }


class TestPersonalLogic:
    def test_zone_request_bypasses_national(self):
        logic, _ = pa_logic()
        effects = logic.handle(Command("submit", {"fields": submit_fields(zone="Z1"),
                                                  "token": "sub-0"}), 0)
        outs = outbound_of(effects, "ask")
        assert len(outs) == 1 and outs[0].receiver == "za:Z1"

    def test_zone_free_request_goes_national(self):
        logic, _ = pa_logic()
        effects = logic.handle(Command("submit", {"fields": submit_fields(),
                                                  "token": "sub-0"}), 0)
        outs = outbound_of(effects, "ask")
        assert len(outs) == 1 and outs[0].receiver == "na"

    def test_unknown_zone_rejected(self):
        logic, _ = pa_logic()
        ticket = Ticket()
        effects = logic.handle(Command("submit", {"fields": submit_fields(zone="Z9"),
                                                  "token": "sub-0"}, ticket), 0)
        assert outbound_of(effects) == []
        assert ticket.outcome["outcome"] == "error"

    def test_classify_then_select_routes_book(self):
        logic, history = pa_logic()
        logic.handle(Command("submit", {"fields": submit_fields(), "token": "sub-0"}), 0)
        classification = classify("sub-0", [proposal_for(rid="sub-0", pid="a")])
        logic.handle(envelope("na", "pa:u1", "classify",
                              {"classification": classification_to_dict(classification)},
                              rid="sub-0"), 5)
        assert logic.status("sub-0")["status"] == "classified"
        assert len(history) == 1 and history[0]["outcome"] is None

        ticket = Ticket()
        effects = logic.handle(Command("select", {"token": "sub-0", "proposal_id": "a"},
                                       ticket), 6)
        books = outbound_of(effects, "book")
        assert books and books[0].receiver == "na"

        effects = logic.handle(envelope("na", "pa:u1", "booked",
                                        {"booking_id": "b-1", "proposal_id": "a"},
                                        rid="sub-0", msg="m2"), 8)
        assert ticket.outcome == {"outcome": "booked", "booking_id": "b-1",
                                  "proposal_id": "a"}
        assert len(history) == 2 and history[1]["outcome"] == "b-1"
        assert logic.status("sub-0")["status"] == "booked"

    def test_bypass_ranks_locally(self):
        logic, _ = pa_logic()
        logic.handle(Command("submit", {"fields": submit_fields(zone="Z1"),
                                        "token": "sub-0"}), 0)
        props = [codec.proposal_to_dict(proposal_for(rid="sub-0", pid="a", price=700)),
                 codec.proposal_to_dict(proposal_for(gh="G1", rid="sub-0", pid="b", price=650))]
        logic.handle(envelope("za:Z1", "pa:u1", "tell", {"proposals": props}, rid="sub-0"), 4)
        status = logic.status("sub-0")
        assert status["status"] == "classified"
        assert [p["proposal_id"] for p in status["classification"]["proposals"]] == ["b", "a"]

    def test_select_unknown_proposal_errors(self):
        logic, _ = pa_logic()
        logic.handle(Command("submit", {"fields": submit_fields(zone="Z1"),
                                        "token": "sub-0"}), 0)
        logic.handle(envelope("za:Z1", "pa:u1", "tell", {"proposals": []}, rid="sub-0"), 4)
        ticket = Ticket()
        logic.handle(Command("select", {"token": "sub-0", "proposal_id": "ghost"}, ticket), 5)
        assert ticket.outcome["reason"] == "unknown-proposal"

    def test_select_while_pending_errors(self):
        logic, _ = pa_logic()
        logic.handle(Command("submit", {"fields": submit_fields(), "token": "sub-0"}), 0)
        ticket = Ticket()
        logic.handle(Command("select", {"token": "sub-0", "proposal_id": "a"}, ticket), 1)
        assert ticket.outcome["reason"] == "pending"

    def test_repeat_select_after_booked_is_idempotent(self):
        logic, _ = pa_logic()
        logic.handle(Command("submit", {"fields": submit_fields(zone="Z1"),
                                        "token": "sub-0"}), 0)
        props = [codec.proposal_to_dict(proposal_for(rid="sub-0", pid="a"))]
        logic.handle(envelope("za:Z1", "pa:u1", "tell", {"proposals": props}, rid="sub-0"), 4)
        logic.handle(Command("select", {"token": "sub-0", "proposal_id": "a"}), 5)
        logic.handle(envelope("za:Z1", "pa:u1", "booked",
                              {"booking_id": "b-1", "proposal_id": "a"}, rid="sub-0", msg="m2"), 6)
        ticket = Ticket()
        effects = logic.handle(Command("select", {"token": "sub-0", "proposal_id": "a"}, ticket), 7)
        assert outbound_of(effects) == []
        assert ticket.outcome["outcome"] == "booked"

    def test_failed_attempt_allows_retry(self):
        logic, _ = pa_logic()
        logic.handle(Command("submit", {"fields": submit_fields(zone="Z1"),
                                        "token": "sub-0"}), 0)
        props = [codec.proposal_to_dict(proposal_for(rid="sub-0", pid="a")),
                 codec.proposal_to_dict(proposal_for(gh="G1", rid="sub-0", pid="b", price=900))]
        logic.handle(envelope("za:Z1", "pa:u1", "tell", {"proposals": props}, rid="sub-0"), 4)
        first = Ticket()
        logic.handle(Command("select", {"token": "sub-0", "proposal_id": "a"}, first), 5)
        logic.handle(envelope("za:Z1", "pa:u1", "failed",
                              {"reason": "hold-failed"}, rid="sub-0", msg="m2"), 6)
        assert first.outcome["outcome"] == "failed"
        second = Ticket()
        effects = logic.handle(Command("select", {"token": "sub-0", "proposal_id": "b"}, second), 7)
        assert outbound_of(effects, "book")
