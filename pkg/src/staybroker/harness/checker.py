"""Pure trace checker: replays the invariant catalog over a trace file.

Trace lines are canonical JSON objects: envelopes (they have a
"performative" key) interleaved with event records ("event" key). A final
`{"event": "snapshot", ...}` record, when present, enables the
conservation check.
"""

from __future__ import annotations

import json
from typing import Mapping

from ..domain import codec
from ..errors import ValidationError
from ..naming import role_of
from ..router.permissions import PermissionMatrix, Role


def _result(name: str, passed: bool, detail: str = "") -> dict:
    return {"name": name, "passed": passed, "detail": detail}


def _envelopes(lines) -> list[dict]:
    return [line for line in lines if "performative" in line]


def _events(lines) -> list[dict]:
    return [line for line in lines if "event" in line]


def _requests_by_id(envelopes) -> dict[str, dict]:
    requests = {}
    for env in envelopes:
        if env["performative"] == "ask":
            request = env.get("body", {}).get("request")
            if isinstance(request, Mapping) and env["request_id"] not in requests:
                requests[env["request_id"]] = dict(request)
    return requests


def check_permission(lines) -> dict:
    matrix = PermissionMatrix()
    for env in _envelopes(lines):
        sender_role = role_of(env.get("sender", ""))
        receiver_role = role_of(env.get("receiver", ""))
        if sender_role is None or receiver_role is None:
            return _result("permission", False,
                           f"{env.get('msg_id')}: unrecognizable agent id")
        if not matrix.allows(Role(sender_role), Role(receiver_role)):
            return _result(
                "permission", False,
                f"{env.get('msg_id')}: {env['sender']} -> {env['receiver']} is forbidden",
            )
    return _result("permission", True)


def check_exclusivity(lines) -> dict:
    seen: dict[str, dict[str, str]] = {}
    for env in _envelopes(lines):
        if env["performative"] != "tell" or role_of(env.get("sender", "")) != "GA":
            continue
        rid = env["request_id"]
        proposal = env.get("body", {}).get("proposal", {})
        for leg in proposal.get("legs", []):
            gh = leg.get("guesthouse_id", "?")
            already = seen.setdefault(rid, {})
            if gh in already:
                return _result(
                    "exclusivity", False,
                    f"guesthouse {gh} appears in proposals {already[gh]} and "
                    f"{proposal.get('proposal_id')} for request {rid}",
                )
            already[gh] = proposal.get("proposal_id", "?")
    return _result("exclusivity", True)


def check_proposal_validity(lines) -> dict:
    envelopes = _envelopes(lines)
    requests = _requests_by_id(envelopes)
    for env in envelopes:
        if env["performative"] != "tell" or role_of(env.get("sender", "")) != "GA":
            continue
        rid = env["request_id"]
        raw_request = requests.get(rid)
        if raw_request is None:
            return _result("proposal-validity", False,
                           f"{env.get('msg_id')}: tell for a request never asked ({rid})")
        try:
            request = codec.request_from_dict(raw_request)
            proposal = codec.proposal_from_dict(env.get("body", {}).get("proposal", {}))
            proposal.validate_against(request)
        except ValidationError as exc:
            return _result("proposal-validity", False,
                           f"{env.get('msg_id')}: {exc}")
    return _result("proposal-validity", True)


def check_bypass(lines) -> dict:
    envelopes = _envelopes(lines)
    requests = _requests_by_id(envelopes)
    zoned = {rid for rid, req in requests.items() if req.get("zone") is not None}
    for env in envelopes:
        if env["request_id"] in zoned and (
            env.get("sender") == "na" or env.get("receiver") == "na"
        ):
            return _result(
                "bypass", False,
                f"{env.get('msg_id')}: national agent touched zone-targeted "
                f"request {env['request_id']}",
            )
    return _result("bypass", True)


_REPLIES = {
    ("ZA", "GA", "ask"): ("tell", "sorry"),
    ("NA", "ZA", "ask"): ("tell",),
    ("GA", "GA", "collab-ask"): ("collab-tell", "collab-sorry"),
}


def check_reply_completeness(lines) -> dict:
    envelopes = _envelopes(lines)
    events = _events(lines)
    timeouts: set[tuple[str, str]] = set()  # (request_id, missing agent)
    for event in events:
        if event.get("event") == "timeout":
            for missing in event.get("missing", []):
                timeouts.add((event.get("request_id", ""), missing))
    replies: set[tuple[str, str, str]] = set()  # (request_id, from, to)
    for env in envelopes:
        key = (role_of(env.get("sender", "")), role_of(env.get("receiver", "")))
        for (s_role, r_role, ask), answers in _REPLIES.items():
            if key == (r_role, s_role) and env["performative"] in answers:
                replies.add((env["request_id"], env["sender"], env["receiver"]))
    for env in envelopes:
        key = (role_of(env.get("sender", "")), role_of(env.get("receiver", "")),
               env["performative"])
        if key not in _REPLIES:
            continue
        rid = env["request_id"]
        answered = (rid, env["receiver"], env["sender"]) in replies
        timed_out = (rid, env["receiver"]) in timeouts
        if not answered and not timed_out:
            return _result(
                "reply-completeness", False,
                f"{env.get('msg_id')}: {env['receiver']} never answered "
                f"{env['performative']} for {rid} and no deadline fired",
            )
    return _result("reply-completeness", True)


def check_delivery_uniqueness(lines) -> dict:
    seen = set()
    for env in _envelopes(lines):
        msg_id = env.get("msg_id")
        if msg_id in seen:
            return _result("delivery-uniqueness", False,
                           f"msg_id {msg_id} appears twice in the trace")
        seen.add(msg_id)
    return _result("delivery-uniqueness", True)


def check_conservation(lines) -> dict:
    snapshots = [e for e in _events(lines) if e.get("event") == "snapshot"]
    if not snapshots:
        return _result("conservation", True, "no snapshot in trace; skipped")
    data = snapshots[-1].get("data", {})
    recount: dict[tuple, int] = {}
    for booking in data.get("bookings", []):
        state = booking.get("state")
        if state not in ("held", "confirmed"):
            continue
        for leg in booking.get("legs", []):
            try:
                parsed = codec.leg_from_dict(leg)
            except ValidationError as exc:
                return _result("conservation", False, f"unreadable booking leg: {exc}")
            for night in parsed.interval.iter_nights():
                for room_type, count in parsed.rooms.counts().items():
                    if count:
                        key = (parsed.guesthouse_id, night.isoformat(),
                               room_type.value, state)
                        recount[key] = recount.get(key, 0) + count
    for gh, entry in data.get("guesthouses", {}).items():
        inventory = entry.get("profile", {}).get("inventory", {})
        for row in entry.get("rows", []):
            where = f"{gh} {row['date']} {row['type']}"
            if row["free"] < 0 or row["held"] < 0 or row["confirmed"] < 0:
                return _result("conservation", False, f"{where}: negative count")
            if row["free"] + row["held"] + row["confirmed"] != row["capacity"]:
                return _result("conservation", False,
                               f"{where}: free+held+confirmed != capacity")
            if row["capacity"] > inventory.get(row["type"], 0):
                return _result("conservation", False,
                               f"{where}: capacity exceeds inventory")
            for state in ("held", "confirmed"):
                counted = recount.pop((gh, row["date"], row["type"], state), 0)
                if counted != row[state]:
                    return _result(
                        "conservation", False,
                        f"{where}: booking ledger says {counted} {state}, "
                        f"snapshot says {row[state]}",
                    )
    if recount:
        leftover = next(iter(recount))
        return _result("conservation", False,
                       f"booking ledger has commitments missing from rows: {leftover}")
    return _result("conservation", True)


CHECKS = (
    check_permission,
    check_exclusivity,
    check_proposal_validity,
    check_bypass,
    check_reply_completeness,
    check_delivery_uniqueness,
    check_conservation,
)


def check_lines(lines: list[dict]) -> list[dict]:
    """Evaluate the whole catalog; returns one result record per property."""
    return [check(lines) for check in CHECKS]


def check_trace_text(text: str) -> list[dict]:
    """Parse a trace file's text and check it; raises ValueError on bad JSON."""
    lines = []
    for i, raw in enumerate(text.splitlines(), start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            lines.append(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise ValueError(f"trace line {i} is not valid JSON: {exc.msg}")
    return check_lines(lines)
