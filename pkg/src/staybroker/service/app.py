"""FastAPI application: the online booking surface for users and admins.

All JSON bodies reuse the domain serializations (dates as YYYY-MM-DD,
money as integer minor units). Authentication is a bearer token from
POST /api/login. Booking selection accepts an idempotency key so a
double-submit cannot double-book.
"""

from __future__ import annotations

import json
import threading
from contextlib import asynccontextmanager
from datetime import timedelta
from pathlib import Path
from typing import Mapping

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query
from fastapi.responses import JSONResponse

from ..agents.topology import Topology, load_topology, zone_roster
from ..domain import codec
from ..domain.types import ROOM_TYPES
from ..errors import (
    ConsistencyError,
    PrincipalError,
    ScenarioError,
    StoreError,
    ValidationError,
)
from ..harness.scenario import BUNDLED, load_scenario
from .sessions import Principal, SessionManager
from .system import LiveSystem

SELECT_TIMEOUT_SECONDS = 15.0


def topology_from_source(source: str | Mapping) -> Topology:
    """Load a topology from a dict, a topology/scenario file, or a bundled
    scenario name."""
    if isinstance(source, Mapping):
        data = source
    else:
        path = Path(source)
        if path.exists():
            data = json.loads(path.read_text())
        elif source in BUNDLED:
            return load_scenario(source).topology
        else:
            raise ScenarioError([f"no such topology file or bundled name: {source}"])
    if "topology" in data:  # a scenario file; use its cast
        data = data["topology"]
    return load_topology(data)


def create_app(
    topology: Topology | Mapping | str,
    static_dir: str | Path | None = None,
    data_dir: str | Path | None = None,
    scale: float = 0.005,
    select_timeout: float = SELECT_TIMEOUT_SECONDS,
) -> FastAPI:
    if not isinstance(topology, Topology):
        topology = topology_from_source(topology)

    system = LiveSystem(topology, scale=scale, data_dir=data_dir)
    sessions = SessionManager(topology)
    idempotency: dict[tuple[str, str], object] = {}
    idempotency_lock = threading.Lock()

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        system.start()
        try:
            yield
        finally:
            system.stop()

    app = FastAPI(title="staybroker", version="0.1.0", lifespan=lifespan)
    app.state.system = system
    app.state.sessions = sessions

    # -- auth helpers -------------------------------------------------------

    def current_principal(authorization: str | None = Header(default=None)) -> Principal:
        token = None
        if authorization and authorization.startswith("Bearer "):
            token = authorization.removeprefix("Bearer ")
        principal = sessions.principal(token)
        if principal is None:
            raise HTTPException(status_code=401, detail="missing or expired token")
        return principal

    def current_user(principal: Principal = Depends(current_principal)) -> Principal:
        if principal.kind != "user":
            raise HTTPException(status_code=403, detail="a user session is required")
        return principal

    def admin_of(guesthouse_id: str, principal: Principal) -> None:
        if principal.kind != "admin" or principal.id != guesthouse_id:
            raise HTTPException(
                status_code=403,
                detail=f"session does not administer guesthouse {guesthouse_id}",
            )

    # -- sessions ------------------------------------------------------------

    @app.post("/api/login")
    def login(body: dict = Body(...)):
        password = body.get("password")
        user_id = body.get("user_id")
        guesthouse_id = body.get("guesthouse_id")
        if not isinstance(password, str) or bool(user_id) == bool(guesthouse_id):
            raise HTTPException(
                status_code=422,
                detail="provide password plus exactly one of user_id or guesthouse_id",
            )
        kind = "user" if user_id else "admin"
        token = sessions.login(kind, user_id or guesthouse_id, password)
        if token is None:
            raise HTTPException(status_code=401, detail="bad credentials")
        return {"token": token, "kind": kind, "principal_id": user_id or guesthouse_id}

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    # -- public directory -------------------------------------------------------

    @app.get("/api/facilities")
    def facilities():
        from ..domain.types import FACILITIES

        return {"facilities": sorted(FACILITIES)}

    @app.get("/api/zones")
    def zones(_: Principal = Depends(current_principal)):
        return {"zones": [{"zone_id": z, "name": system.store.zones[z]}
                          for z in sorted(system.store.zones)]}

    @app.get("/api/zones/{zone_id}/guesthouses")
    def zone_guesthouses(zone_id: str, _: Principal = Depends(current_principal)):
        if zone_id not in system.store.zones:
            raise HTTPException(status_code=404, detail=f"unknown zone: {zone_id}")
        roster = zone_roster(system.store, zone_id)
        return {"guesthouses": list(roster.guesthouses)}

    # -- the reservation flow ------------------------------------------------------

    @app.post("/api/requests")
    def submit_request(body: dict = Body(...), user: Principal = Depends(current_user)):
        pa = system.pa(user.id)
        if pa is None:
            raise HTTPException(status_code=404, detail="no personal agent for user")
        fields = {
            "zone": body.get("zone"),
            "persons": body.get("persons"),
            "arrival": body.get("arrival"),
            "departure": body.get("departure"),
            "rooms": body.get("rooms"),
            "max_total_price": body.get("max_total_price"),
            "required_facilities": body.get("required_facilities", []),
        }
        try:
            token = pa.submit(fields)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"request_id": token}

    def _owned_status(token: str, user: Principal) -> dict:
        pa = system.pa(user.id)
        status = pa.status(token) if pa else None
        if status is None:
            raise HTTPException(status_code=404, detail=f"unknown request: {token}")
        return status

    @app.get("/api/requests/{token}/classification")
    def classification(token: str, user: Principal = Depends(current_user)):
        status = _owned_status(token, user)
        if status["status"] == "pending":
            return {"status": "pending", "request_id": token}
        return {
            "status": status["status"],
            "request_id": token,
            "classification": status["classification"],
            "booking": status["booking"],
        }

    @app.post("/api/requests/{token}/select")
    def select(token: str, body: dict = Body(...),
               user: Principal = Depends(current_user)):
        status = _owned_status(token, user)
        proposal_id = body.get("proposal_id")
        if not isinstance(proposal_id, str) or not proposal_id:
            raise HTTPException(status_code=422, detail="proposal_id is required")
        pa = system.pa(user.id)
        key = body.get("idempotency_key")
        if isinstance(key, str) and key:
            with idempotency_lock:
                ticket = idempotency.get((user.id, key))
                if ticket is None:
                    ticket = pa.select(token, proposal_id)
                    idempotency[(user.id, key)] = ticket
        else:
            ticket = pa.select(token, proposal_id)
        outcome = ticket.wait(timeout=select_timeout)
        if outcome is None:
            raise HTTPException(status_code=409, detail="booking did not settle in time")
        if outcome["outcome"] == "booked":
            return {"outcome": "booked", "booking_id": outcome["booking_id"],
                    "proposal_id": outcome.get("proposal_id")}
        if outcome["outcome"] == "failed":
            return JSONResponse(
                status_code=409,
                content={"outcome": "failed", "reason": outcome.get("reason")},
            )
        reason = outcome.get("reason", "rejected")
        if reason in ("unknown-request", "unknown-proposal"):
            raise HTTPException(status_code=404, detail=reason)
        return JSONResponse(status_code=409,
                            content={"outcome": "error", "reason": reason})

    @app.get("/api/users/me/history")
    def history(user: Principal = Depends(current_user)):
        entries = [e.to_dict() for e in system.store.query_history(user.id)]
        return {"entries": entries}

    # -- administration ---------------------------------------------------------

    def _parse_range(from_: str | None, to: str | None):
        if not from_ or not to:
            raise HTTPException(status_code=422, detail="from and to dates are required")
        try:
            start = codec.parse_date(from_, "from")
            end = codec.parse_date(to, "to")
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if end <= start or (end - start).days > 120:
            raise HTTPException(status_code=422,
                                detail="to must be after from, at most 120 days")
        return start, end

    @app.get("/api/guesthouses/{guesthouse_id}/calendar")
    def get_calendar(guesthouse_id: str,
                     principal: Principal = Depends(current_principal),
                     from_: str | None = Query(default=None, alias="from"),
                     to: str | None = Query(default=None)):
        admin_of(guesthouse_id, principal)
        if not system.store.has_guesthouse(guesthouse_id):
            raise HTTPException(status_code=404, detail="unknown guesthouse")
        start, end = _parse_range(from_, to)
        snapshot = system.store.snapshot()
        rows_by_key = {
            (row["date"], row["type"]): row
            for row in snapshot["guesthouses"][guesthouse_id]["rows"]
        }
        profile = system.store.profile(guesthouse_id)
        entries = []
        night = start
        while night < end:
            for room_type in ROOM_TYPES:
                row = rows_by_key.get((night.isoformat(), room_type.value))
                if row is None:
                    capacity = profile.inventory[room_type]
                    booked = 0
                else:
                    capacity = row["capacity"]
                    booked = row["held"] + row["confirmed"]
                entries.append({
                    "date": night.isoformat(),
                    "type": room_type.value,
                    "free": capacity,  # the editable offered-rooms count
                    "available": capacity - booked,
                    "booked": booked,
                })
            night += timedelta(days=1)
        return {"guesthouse_id": guesthouse_id, "entries": entries}

    def _apply_update(guesthouse_id: str, **kwargs):
        try:
            system.store.update_guesthouse(
                guesthouse_id, system.store.admin_principal(guesthouse_id), **kwargs
            )
        except ConsistencyError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except PrincipalError as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except StoreError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"applied": True}

    @app.put("/api/guesthouses/{guesthouse_id}/calendar")
    def put_calendar(guesthouse_id: str, body: dict = Body(...),
                     principal: Principal = Depends(current_principal)):
        admin_of(guesthouse_id, principal)
        entries = body.get("entries")
        if not isinstance(entries, list):
            raise HTTPException(status_code=422, detail="body needs an entries list")
        return _apply_update(guesthouse_id, calendar_delta=entries)

    @app.put("/api/guesthouses/{guesthouse_id}/profile")
    def put_profile(guesthouse_id: str, body: dict = Body(...),
                    principal: Principal = Depends(current_principal)):
        admin_of(guesthouse_id, principal)
        return _apply_update(guesthouse_id, profile_delta=body)

    # -- static web UI -----------------------------------------------------------

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="webui")

    return app
