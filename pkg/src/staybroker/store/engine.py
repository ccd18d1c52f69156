"""Embedded storage engine with an in-memory mode and a file-backed mode.

Layout on disk (all canonical JSON): `registry.json` snapshots zones,
users, and guesthouse profiles; `calendar-<guesthouse>.log` is an
append-only log of capacity overrides and booking lifecycle events;
`history-<user>.log` appends one line per history entry.

Calendar semantics: each guesthouse offers `capacity(date, type)` rooms
per night, defaulting to the profile inventory and overridable per date
by its administrator. Free rooms are capacity minus held and confirmed
room-nights, so `free + held + confirmed = capacity` holds at every
quiescent point by construction; tests recount it from the booking
ledger independently.

Concurrency: one writer lock per guesthouse; operations spanning several
guesthouses take their locks in guesthouse-id order.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Iterable, Mapping

from ..domain import codec
from ..domain.types import (
    AvailabilityCalendar,
    GuesthouseProfile,
    ProposalLeg,
    RoomType,
)
from ..errors import ConsistencyError, PrincipalError, StoreError, ValidationError

DEFAULT_HOLD_TTL = 300  # logical units


@dataclass
class Booking:
    """A (possibly multi-leg) reservation moving through hold/confirm/release."""

    booking_id: str
    request_id: str
    user_id: str
    legs: list[ProposalLeg]
    state: str  # held | confirmed | released | failed
    hold_expiry: int

    def to_dict(self) -> dict:
        return {
            "booking_id": self.booking_id,
            "request_id": self.request_id,
            "user_id": self.user_id,
            "legs": [codec.leg_to_dict(leg) for leg in self.legs],
            "state": self.state,
            "hold_expiry": self.hold_expiry,
        }


@dataclass(frozen=True)
class HistoryEntry:
    user_id: str
    timestamp: int
    request: Mapping
    classification: Mapping | None
    outcome: str | None  # booking id, or None
    seq: int = 0

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "timestamp": self.timestamp,
            "request": dict(self.request),
            "classification": dict(self.classification) if self.classification else None,
            "outcome": self.outcome,
            "seq": self.seq,
        }


@dataclass
class _GuesthouseState:
    profile: GuesthouseProfile
    admin: str
    # Per-date offered capacity; unlisted dates offer the full inventory.
    cap_overrides: dict[tuple[date, RoomType], int] = field(default_factory=dict)
    held: dict[tuple[date, RoomType], int] = field(default_factory=dict)
    confirmed: dict[tuple[date, RoomType], int] = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)

    def capacity(self, night: date, room_type: RoomType) -> int:
        return self.cap_overrides.get((night, room_type), self.profile.inventory[room_type])

    def committed(self, night: date, room_type: RoomType) -> int:
        key = (night, room_type)
        return self.held.get(key, 0) + self.confirmed.get(key, 0)

    def free(self, night: date, room_type: RoomType) -> int:
        return self.capacity(night, room_type) - self.committed(night, room_type)


def _bump(counter: dict, leg: ProposalLeg, delta: int, bucket: str | None = None) -> None:
    for night in leg.interval.iter_nights():
        for room_type, count in leg.rooms.counts().items():
            if count:
                key = (night, room_type)
                counter[key] = counter.get(key, 0) + delta * count
                if counter[key] == 0:
                    del counter[key]


class Store:
    def __init__(
        self,
        data_dir: str | Path | None = None,
        clock: Callable[[], int] | None = None,
        hold_ttl: int = DEFAULT_HOLD_TTL,
    ):
        self.data_dir = Path(data_dir) if data_dir else None
        self.clock = clock or (lambda: 0)
        self.hold_ttl = hold_ttl
        self.zones: dict[str, str] = {}
        self.users: dict[str, str] = {}
        self._guesthouses: dict[str, _GuesthouseState] = {}
        self._bookings: dict[str, Booking] = {}
        self._bookings_lock = threading.RLock()
        self._history: dict[str, list[HistoryEntry]] = {}
        self._history_seq = 0
        self._history_lock = threading.RLock()
        self._faults: dict[str, int] = {}
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def bind_clock(self, clock: Callable[[], int]) -> None:
        self.clock = clock

    # ------------------------------------------------------------------
    # registry
    # ------------------------------------------------------------------

    def add_zone(self, zone_id: str, name: str = "") -> None:
        if zone_id in self.zones:
            raise StoreError(f"zone already registered: {zone_id}")
        self.zones[zone_id] = name or zone_id
        self._save_registry()

    def add_user(self, user_id: str, name: str = "") -> None:
        if user_id in self.users:
            raise StoreError(f"user already registered: {user_id}")
        self.users[user_id] = name or user_id
        self._save_registry()

    def add_guesthouse(self, profile: GuesthouseProfile, admin: str | None = None) -> None:
        if profile.guesthouse_id in self._guesthouses:
            raise StoreError(f"guesthouse already registered: {profile.guesthouse_id}")
        if profile.zone_id not in self.zones:
            raise StoreError(f"unknown zone for guesthouse: {profile.zone_id}")
        self._guesthouses[profile.guesthouse_id] = _GuesthouseState(
            profile=profile, admin=admin or f"admin:{profile.guesthouse_id}"
        )
        self._save_registry()

    def has_guesthouse(self, guesthouse_id: str) -> bool:
        return guesthouse_id in self._guesthouses

    def guesthouse_ids(self, zone_id: str | None = None) -> list[str]:
        if zone_id is None:
            return sorted(self._guesthouses)
        return sorted(
            gh for gh, st in self._guesthouses.items() if st.profile.zone_id == zone_id
        )

    def profile(self, guesthouse_id: str) -> GuesthouseProfile:
        return self._state(guesthouse_id).profile

    def admin_principal(self, guesthouse_id: str) -> str:
        return self._state(guesthouse_id).admin

    def _state(self, guesthouse_id: str) -> _GuesthouseState:
        state = self._guesthouses.get(guesthouse_id)
        if state is None:
            raise StoreError(f"unknown guesthouse: {guesthouse_id}")
        return state

    # ------------------------------------------------------------------
    # calendar views
    # ------------------------------------------------------------------

    def calendar_view(self, guesthouse_id: str, now: int | None = None) -> AvailabilityCalendar:
        """Snapshot of true availability (capacity minus commitments)."""
        self.expire_holds(now)
        state = self._state(guesthouse_id)
        with state.lock:
            keys = set(state.cap_overrides) | set(state.held) | set(state.confirmed)
            overrides = {key: state.free(*key) for key in keys}
            return AvailabilityCalendar(
                guesthouse_id=guesthouse_id,
                inventory=dict(state.profile.inventory),
                free_overrides=overrides,
            )

    # ------------------------------------------------------------------
    # booking lifecycle
    # ------------------------------------------------------------------

    def inject_hold_fault(self, guesthouse_id: str, count: int = 1) -> None:
        """Make the next `count` holds on this guesthouse fail (for tests)."""
        self._faults[guesthouse_id] = self._faults.get(guesthouse_id, 0) + count

    def hold(
        self,
        booking_id: str,
        request_id: str,
        user_id: str,
        leg: ProposalLeg,
        now: int | None = None,
    ) -> bool:
        """Atomically decrement every room-night of the leg, or nothing."""
        if now is None:
            now = self.clock()
        self.expire_holds(now)
        guesthouse_id = leg.guesthouse_id
        state = self._state(guesthouse_id)
        with state.lock:
            if self._faults.get(guesthouse_id, 0) > 0:
                self._faults[guesthouse_id] -= 1
                return False
            for night in leg.interval.iter_nights():
                for room_type, count in leg.rooms.counts().items():
                    if count and state.free(night, room_type) < count:
                        return False
            with self._bookings_lock:
                booking = self._bookings.get(booking_id)
                if booking is None:
                    booking = Booking(
                        booking_id=booking_id,
                        request_id=request_id,
                        user_id=user_id,
                        legs=[],
                        state="held",
                        hold_expiry=now + self.hold_ttl,
                    )
                    self._bookings[booking_id] = booking
                elif booking.state != "held":
                    return False
                booking.legs.append(leg)
            _bump(state.held, leg, +1)
            self._log_calendar(
                guesthouse_id,
                {
                    "op": "hold",
                    "booking_id": booking_id,
                    "request_id": request_id,
                    "user_id": user_id,
                    "leg": codec.leg_to_dict(leg),
                    "expiry": booking.hold_expiry,
                },
            )
        return True

    def _locks_for(self, booking: Booking) -> list[threading.RLock]:
        # Guesthouse-id order prevents deadlock between concurrent sagas.
        ids = sorted({leg.guesthouse_id for leg in booking.legs})
        return [self._state(gh).lock for gh in ids]

    def _restore(self, booking: Booking, final_state: str, op: str) -> None:
        for leg in booking.legs:
            _bump(self._state(leg.guesthouse_id).held, leg, -1)
        booking.state = final_state
        for gh in sorted({leg.guesthouse_id for leg in booking.legs}):
            self._log_calendar(gh, {"op": op, "booking_id": booking.booking_id})

    def confirm(self, booking_id: str, now: int | None = None) -> str:
        """Freeze a held booking. Idempotent; "failed" after expiry."""
        if now is None:
            now = self.clock()
        with self._bookings_lock:
            booking = self._bookings.get(booking_id)
        if booking is None:
            raise StoreError(f"unknown booking: {booking_id}")
        locks = self._locks_for(booking)
        for lock in locks:
            lock.acquire()
        try:
            with self._bookings_lock:
                if booking.state == "confirmed":
                    return "confirmed"
                if booking.state != "held":
                    return "failed"
                if booking.hold_expiry < now:
                    self._restore(booking, "failed", "expire")
                    return "failed"
                for leg in booking.legs:
                    state = self._state(leg.guesthouse_id)
                    _bump(state.held, leg, -1)
                    _bump(state.confirmed, leg, +1)
                booking.state = "confirmed"
                for gh in sorted({leg.guesthouse_id for leg in booking.legs}):
                    self._log_calendar(gh, {"op": "confirm", "booking_id": booking_id})
                return "confirmed"
        finally:
            for lock in reversed(locks):
                lock.release()

    def release(self, booking_id: str) -> str:
        """Undo a held booking exactly; confirmed bookings never change."""
        with self._bookings_lock:
            booking = self._bookings.get(booking_id)
        if booking is None:
            raise StoreError(f"unknown booking: {booking_id}")
        locks = self._locks_for(booking)
        for lock in locks:
            lock.acquire()
        try:
            with self._bookings_lock:
                if booking.state == "confirmed":
                    raise StoreError("confirmed bookings never change")
                if booking.state in ("released", "failed"):
                    return booking.state
                self._restore(booking, "released", "release")
                return "released"
        finally:
            for lock in reversed(locks):
                lock.release()

    def expire_holds(self, now: int | None = None) -> list[str]:
        """Auto-release held bookings past their expiry; returns their ids."""
        if now is None:
            now = self.clock()
        with self._bookings_lock:
            expired = [
                b for b in self._bookings.values()
                if b.state == "held" and b.hold_expiry < now
            ]
        out = []
        for booking in expired:
            locks = self._locks_for(booking)
            for lock in locks:
                lock.acquire()
            try:
                with self._bookings_lock:
                    if booking.state == "held" and booking.hold_expiry < now:
                        self._restore(booking, "failed", "expire")
                        out.append(booking.booking_id)
            finally:
                for lock in reversed(locks):
                    lock.release()
        return out

    def booking(self, booking_id: str) -> Booking:
        with self._bookings_lock:
            booking = self._bookings.get(booking_id)
        if booking is None:
            raise StoreError(f"unknown booking: {booking_id}")
        return booking

    def bookings(self) -> list[Booking]:
        with self._bookings_lock:
            return list(self._bookings.values())

    # ------------------------------------------------------------------
    # history
    # ------------------------------------------------------------------

    def append_history(self, entry: Mapping | HistoryEntry) -> HistoryEntry:
        if isinstance(entry, HistoryEntry):
            data = entry.to_dict()
        else:
            data = dict(entry)
        user_id = data.get("user_id", "")
        if user_id not in self.users:
            raise StoreError(f"unknown user: {user_id}")
        with self._history_lock:
            self._history_seq += 1
            record = HistoryEntry(
                user_id=user_id,
                timestamp=int(data.get("timestamp", self.clock())),
                request=data.get("request") or {},
                classification=data.get("classification"),
                outcome=data.get("outcome"),
                seq=self._history_seq,
            )
            self._history.setdefault(user_id, []).append(record)
        self._log_history(user_id, record.to_dict())
        return record

    def query_history(self, user_id: str) -> list[HistoryEntry]:
        """The user's entries, newest first. Unknown users simply have none."""
        with self._history_lock:
            entries = list(self._history.get(user_id, []))
        return sorted(entries, key=lambda e: (e.timestamp, e.seq), reverse=True)

    # ------------------------------------------------------------------
    # administration
    # ------------------------------------------------------------------

    def update_guesthouse(
        self,
        guesthouse_id: str,
        principal: str,
        profile_delta: Mapping | None = None,
        calendar_delta: Iterable[Mapping] | None = None,
    ) -> None:
        """Apply profile and per-date capacity changes for one guesthouse.

        Rejects any change that would leave committed bookings without a
        room (ConsistencyError) and any principal other than the
        guesthouse's own administrator (PrincipalError).
        """
        state = self._state(guesthouse_id)
        if principal != state.admin:
            raise PrincipalError(
                f"principal {principal!r} may not update {guesthouse_id}"
            )
        with state.lock:
            if profile_delta:
                self._apply_profile_delta(state, profile_delta)
            if calendar_delta is not None:
                self._apply_calendar_delta(guesthouse_id, state, calendar_delta)
        self._save_registry()

    def _apply_profile_delta(self, state: _GuesthouseState, delta: Mapping) -> None:
        allowed = {"name", "address", "telephone", "facilities", "inventory", "nightly_rate"}
        unknown = set(delta) - allowed
        if unknown:
            raise ValidationError(f"profile delta has unknown fields: {sorted(unknown)}")
        current = codec.profile_to_dict(state.profile)
        merged = dict(current)
        for key, value in delta.items():
            merged[key] = value
        new_profile = codec.profile_from_dict(merged)
        # A smaller inventory must still cover every commitment and every
        # explicit per-date capacity already promised.
        for (night, room_type), cap in state.cap_overrides.items():
            if cap > new_profile.inventory[room_type]:
                raise ConsistencyError(
                    f"date {night} offers {cap} {room_type.value} rooms; "
                    f"lower that capacity before shrinking inventory"
                )
        commitments = set(state.held) | set(state.confirmed)
        for night, room_type in commitments:
            cap = state.cap_overrides.get(
                (night, room_type), new_profile.inventory[room_type]
            )
            committed = state.committed(night, room_type)
            if committed > cap:
                raise ConsistencyError(
                    f"{committed} {room_type.value} rooms are booked on {night}; "
                    f"inventory cannot shrink below that"
                )
        state.profile = new_profile

    def _apply_calendar_delta(
        self, guesthouse_id: str, state: _GuesthouseState, delta: Iterable[Mapping]
    ) -> None:
        staged: list[tuple[date, RoomType, int]] = []
        for entry in delta:
            try:
                room_type = RoomType(entry.get("type"))
            except ValueError:
                raise ValidationError(f"unknown room type: {entry.get('type')!r}")
            night = codec.parse_date(entry.get("date"))
            cap = entry.get("free")
            if not isinstance(cap, int) or isinstance(cap, bool) or cap < 0:
                raise ValidationError(f"free({night}, {room_type.value}) must be >= 0")
            if cap > state.profile.inventory[room_type]:
                raise ConsistencyError(
                    f"free({night}, {room_type.value}) = {cap} exceeds inventory "
                    f"{state.profile.inventory[room_type]}"
                )
            committed = state.committed(night, room_type)
            if cap < committed:
                raise ConsistencyError(
                    f"{committed} {room_type.value} rooms are already booked on "
                    f"{night}; capacity cannot drop below that"
                )
            staged.append((night, room_type, cap))
        for night, room_type, cap in staged:
            if cap == state.profile.inventory[room_type]:
                state.cap_overrides.pop((night, room_type), None)
            else:
                state.cap_overrides[(night, room_type)] = cap
            self._log_calendar(
                guesthouse_id,
                {"op": "cap", "date": night.isoformat(), "type": room_type.value, "cap": cap},
            )

    # ------------------------------------------------------------------
    # snapshot (conservation checks, report)
    # ------------------------------------------------------------------

    def snapshot(self, now: int | None = None) -> dict:
        self.expire_holds(now)
        guesthouses = {}
        for gh in sorted(self._guesthouses):
            state = self._guesthouses[gh]
            with state.lock:
                keys = sorted(
                    set(state.cap_overrides) | set(state.held) | set(state.confirmed),
                    key=lambda k: (k[0].isoformat(), k[1].value),
                )
                rows = [
                    {
                        "date": night.isoformat(),
                        "type": room_type.value,
                        "capacity": state.capacity(night, room_type),
                        "free": state.free(night, room_type),
                        "held": state.held.get((night, room_type), 0),
                        "confirmed": state.confirmed.get((night, room_type), 0),
                    }
                    for night, room_type in keys
                ]
                guesthouses[gh] = {
                    "profile": codec.profile_to_dict(state.profile),
                    "rows": rows,
                }
        with self._bookings_lock:
            bookings = [
                self._bookings[b].to_dict() for b in sorted(self._bookings)
            ]
        return {
            "zones": [{"zone_id": z, "name": self.zones[z]} for z in sorted(self.zones)],
            "users": sorted(self.users),
            "guesthouses": guesthouses,
            "bookings": bookings,
        }

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def _registry_path(self) -> Path:
        return self.data_dir / "registry.json"

    def _calendar_path(self, guesthouse_id: str) -> Path:
        return self.data_dir / f"calendar-{guesthouse_id}.log"

    def _history_path(self, user_id: str) -> Path:
        return self.data_dir / f"history-{user_id}.log"

    def _save_registry(self) -> None:
        if self.data_dir is None:
            return
        payload = {
            "zones": [{"zone_id": z, "name": n} for z, n in sorted(self.zones.items())],
            "users": [{"user_id": u, "name": n} for u, n in sorted(self.users.items())],
            "guesthouses": [
                {
                    "profile": codec.profile_to_dict(self._guesthouses[gh].profile),
                    "admin": self._guesthouses[gh].admin,
                }
                for gh in sorted(self._guesthouses)
            ],
        }
        self._registry_path().write_text(codec.canonical_json(payload) + "\n")

    def _log_calendar(self, guesthouse_id: str, record: dict) -> None:
        if self.data_dir is None:
            return
        with self._calendar_path(guesthouse_id).open("a") as fh:
            fh.write(codec.canonical_json(record) + "\n")

    def _log_history(self, user_id: str, record: dict) -> None:
        if self.data_dir is None:
            return
        with self._history_path(user_id).open("a") as fh:
            fh.write(codec.canonical_json(record) + "\n")

    def _load(self) -> None:
        registry = self._registry_path()
        if not registry.exists():
            return
        payload = json.loads(registry.read_text())
        for zone in payload.get("zones", []):
            self.zones[zone["zone_id"]] = zone["name"]
        for user in payload.get("users", []):
            self.users[user["user_id"]] = user["name"]
        for entry in payload.get("guesthouses", []):
            profile = codec.profile_from_dict(entry["profile"])
            self._guesthouses[profile.guesthouse_id] = _GuesthouseState(
                profile=profile, admin=entry["admin"]
            )
        for gh in sorted(self._guesthouses):
            path = self._calendar_path(gh)
            if path.exists():
                with path.open() as fh:
                    for line in fh:
                        if line.strip():
                            self._replay_calendar(gh, json.loads(line))
        for user_id in sorted(self.users):
            path = self._history_path(user_id)
            if path.exists():
                with path.open() as fh:
                    for line in fh:
                        if line.strip():
                            record = json.loads(line)
                            entry = HistoryEntry(
                                user_id=record["user_id"],
                                timestamp=record["timestamp"],
                                request=record["request"],
                                classification=record.get("classification"),
                                outcome=record.get("outcome"),
                                seq=record.get("seq", 0),
                            )
                            self._history.setdefault(user_id, []).append(entry)
                            self._history_seq = max(self._history_seq, entry.seq)

    def _replay_calendar(self, guesthouse_id: str, record: dict) -> None:
        state = self._guesthouses[guesthouse_id]
        op = record["op"]
        if op == "cap":
            room_type = RoomType(record["type"])
            night = date.fromisoformat(record["date"])
            cap = record["cap"]
            if cap == state.profile.inventory[room_type]:
                state.cap_overrides.pop((night, room_type), None)
            else:
                state.cap_overrides[(night, room_type)] = cap
            return
        booking_id = record["booking_id"]
        if op == "hold":
            leg = codec.leg_from_dict(record["leg"])
            booking = self._bookings.get(booking_id)
            if booking is None:
                booking = Booking(
                    booking_id=booking_id,
                    request_id=record["request_id"],
                    user_id=record["user_id"],
                    legs=[],
                    state="held",
                    hold_expiry=record["expiry"],
                )
                self._bookings[booking_id] = booking
            booking.legs.append(leg)
            _bump(state.held, leg, +1)
            return
        booking = self._bookings.get(booking_id)
        if booking is None:
            return
        # confirm/release/expire lines appear in every involved guesthouse
        # log; apply the state change once, move this file's legs.
        legs_here = [leg for leg in booking.legs if leg.guesthouse_id == guesthouse_id]
        if op == "confirm":
            for leg in legs_here:
                _bump(state.held, leg, -1)
                _bump(state.confirmed, leg, +1)
            booking.state = "confirmed"
        elif op in ("release", "expire"):
            for leg in legs_here:
                _bump(state.held, leg, -1)
            booking.state = "released" if op == "release" else "failed"
