import json

import pytest

from staybroker.errors import RegistryError
from staybroker.protocol import Envelope
from staybroker.router import (
    AgentRecord,
    PermissionMatrix,
    Role,
    Router,
    SimTransport,
    sign,
    verify,
)


def record(agent_id, role, zone=None, key=b"k" * 32):
    return AgentRecord(agent_id=agent_id, role=role, key=key, zone_id=zone)


def fresh_router():
    return Router(SimTransport(seed=1))


def signed(router, sender, receiver, performative="ask", body=None, rid="req-1", msg="m-1"):
    env = Envelope(
        msg_id=msg, request_id=rid, sender=sender, receiver=receiver,
        performative=performative, body=body or {}, sent_at=router.transport.clock(),
    )
    key = router.registry.get(sender).key
    return sign(env, key)


class TestRegistration:
    def test_roster_lists_zone_guesthouses(self):
        router = fresh_router()
        router.register(record("za:Z1", Role.ZA, "Z1"))
        for gh in ("ga:G2", "ga:G1", "ga:G3"):
            router.register(record(gh, Role.GA, "Z1"))
        assert router.roster("Z1") == ["ga:G1", "ga:G2", "ga:G3"]
        assert router.roster("Z9") == []

    def test_duplicate_id_rejected(self):
        router = fresh_router()
        router.register(record("pa:u1", Role.PA))
        with pytest.raises(RegistryError):
            router.register(record("pa:u1", Role.PA))

    def test_second_national_agent_rejected(self):
        router = fresh_router()
        router.register(record("na", Role.NA))
        with pytest.raises(RegistryError):
            router.register(record("na2", Role.NA))

    def test_second_zonal_agent_for_zone_rejected(self):
        router = fresh_router()
        router.register(record("za:Z1", Role.ZA, "Z1"))
        with pytest.raises(RegistryError):
            router.register(record("za:Z1b", Role.ZA, "Z1"))

    def test_guesthouse_needs_existing_zone(self):
        router = fresh_router()
        with pytest.raises(RegistryError):
            router.register(record("ga:G1", Role.GA, "Z1"))

    def test_zonal_roles_need_zone(self):
        with pytest.raises(RegistryError):
            record("za:Z1", Role.ZA)

    def test_zone_lookups(self):
        router = fresh_router()
        router.register(record("za:Z1", Role.ZA, "Z1"))
        router.register(record("za:Z2", Role.ZA, "Z2"))
        router.register(record("na", Role.NA))
        assert router.zones() == ["Z1", "Z2"]
        assert router.za_ids() == ["za:Z1", "za:Z2"]
        assert router.na_id == "na"


class TestSendGate:
    def _router_with_agents(self):
        router = fresh_router()
        delivered = []
        router.register(record("pa:u1", Role.PA, key=b"a" * 32))
        router.register(record("na", Role.NA, key=b"b" * 32))
        router.register(record("za:Z1", Role.ZA, "Z1", key=b"c" * 32))
        router.register(record("ga:G1", Role.GA, "Z1", key=b"d" * 32))
        for agent in ("pa:u1", "na", "za:Z1", "ga:G1"):
            router.transport.bind(agent, delivered.append)
        return router, delivered

    def test_personal_agent_cannot_reach_guesthouse(self):
        router, delivered = self._router_with_agents()
        result = router.send(signed(router, "pa:u1", "ga:G1"))
        assert (result.accepted, result.reason) == (False, "permission")
        router.transport.run()
        assert delivered == []
        assert router.trace[-1]["event"] == "rejected"
        assert router.trace[-1]["reason"] == "permission"

    def test_allowed_pair_is_delivered_exactly_once(self):
        router, delivered = self._router_with_agents()
        result = router.send(signed(router, "za:Z1", "ga:G1"))
        assert result.accepted
        router.transport.run()
        assert len(delivered) == 1
        assert delivered[0].sender == "za:Z1"

    def test_tampered_body_rejected(self):
        router, delivered = self._router_with_agents()
        env = signed(router, "za:Z1", "ga:G1", body={"n": 1})
        tampered = Envelope(
            msg_id=env.msg_id, request_id=env.request_id, sender=env.sender,
            receiver=env.receiver, performative=env.performative,
            body={"n": 0}, sent_at=env.sent_at, auth_tag=env.auth_tag,
        )
        result = router.send(tampered)
        assert (result.accepted, result.reason) == (False, "auth")
        router.transport.run()
        assert delivered == []

    def test_unknown_receiver_is_routing_error(self):
        router, _ = self._router_with_agents()
        result = router.send(signed(router, "na", "za:Z9"))
        assert (result.accepted, result.reason) == (False, "routing")

    def test_unknown_sender_is_routing_error(self):
        router, _ = self._router_with_agents()
        env = Envelope(
            msg_id="m-x", request_id="req-1", sender="pa:ghost", receiver="na",
            performative="ask", body={}, sent_at=0, auth_tag="feed",
        )
        assert router.send(env).reason == "routing"

    def test_single_bit_flips_always_rejected(self):
        router, delivered = self._router_with_agents()
        base = signed(router, "za:Z1", "ga:G1", body={"text": "hello", "n": 7})
        flips = []
        for field in ("sender", "performative"):
            value = getattr(base, field)
            flipped = chr(ord(value[0]) ^ 1) + value[1:]
            flips.append({**_as_kwargs(base), field: flipped})
        flips.append({**_as_kwargs(base), "body": {"text": "hellp", "n": 7}})
        flips.append({**_as_kwargs(base), "body": {"text": "hello", "n": 6}})
        for kwargs in flips:
            try:
                env = Envelope(**kwargs)
            except Exception:
                continue
            result = router.send(env)
            assert not result.accepted
        router.transport.run()
        assert delivered == []


def _as_kwargs(env):
    return {
        "msg_id": env.msg_id, "request_id": env.request_id, "sender": env.sender,
        "receiver": env.receiver, "performative": env.performative,
        "body": dict(env.body), "sent_at": env.sent_at, "auth_tag": env.auth_tag,
    }


class TestAuthPrimitives:
    def test_sign_verify_round_trip(self):
        env = Envelope(msg_id="m", request_id="r", sender="na", receiver="za:Z1",
                       performative="ask", body={"x": 1}, sent_at=3)
        signed_env = sign(env, b"secret")
        assert verify(signed_env, b"secret")
        assert not verify(signed_env, b"other")

    def test_permission_matrix_defaults(self):
        matrix = PermissionMatrix()
        assert matrix.allows(Role.PA, Role.NA)
        assert matrix.allows(Role.ZA, Role.PA)
        assert matrix.allows(Role.GA, Role.GA)
        assert not matrix.allows(Role.PA, Role.GA)
        assert not matrix.allows(Role.CMA, Role.ZA)
        assert not matrix.allows(Role.NA, Role.GA)


class TestSimTransport:
    def test_deliveries_ordered_by_time_then_msg_id(self):
        sim = SimTransport(seed=0, latency="fixed")
        got = []
        sim.bind("x", got.append)
        for msg in ("m-2", "m-1"):
            sim.deliver(Envelope(msg_id=msg, request_id="r", sender="a", receiver="x",
                                 performative="ask", body={}, sent_at=5, auth_tag="t"))
        sim.deliver(Envelope(msg_id="m-0", request_id="r", sender="a", receiver="x",
                             performative="ask", body={}, sent_at=1, auth_tag="t"))
        sim.run()
        assert [e.msg_id for e in got] == ["m-0", "m-1", "m-2"]

    def test_horizon_zero_delivers_nothing_scheduled_later(self):
        sim = SimTransport(seed=0)
        got = []
        sim.bind("x", got.append)
        sim.deliver(Envelope(msg_id="m", request_id="r", sender="a", receiver="x",
                             performative="ask", body={}, sent_at=0, auth_tag="t"))
        quiescent = sim.run(horizon=0)
        assert not quiescent
        assert got == []
        assert sim.pending() == 1

    def test_seeded_latency_is_reproducible(self):
        delays = []
        for _ in range(2):
            sim = SimTransport(seed=42, latency="seeded")
            run = [sim._delay("a", "b") for _ in range(5)]
            delays.append(run)
        assert delays[0] == delays[1]
        assert all(1 <= d <= 10 for d in delays[0])

    def test_timer_fires_after_envelope_at_same_instant(self):
        sim = SimTransport(seed=0)
        order = []
        sim.bind("x", lambda e: order.append(type(e).__name__))
        sim.schedule_timer("x", 1, {"kind": "t"})
        sim.deliver(Envelope(msg_id="m", request_id="r", sender="a", receiver="x",
                             performative="ask", body={}, sent_at=0, auth_tag="t"))
        sim.run()
        assert order == ["Envelope", "Timer"]
