"""Independent brute-force oracles the test suite checks implementations against.

Everything here is written as plainly as possible, sharing no code path with
the package: explicit loops, no calendar/matching helpers, no sort keys.
"""

from __future__ import annotations

from datetime import date, timedelta

BEDS = {"single": 1, "double": 2, "triple": 3}
TYPES = ("single", "double", "triple")


def oracle_subset(have, need):
    for token in need:
        found = False
        for offered in have:
            if offered == token:
                found = True
        if not found:
            return False
    return True


def oracle_free(calendar_entries, inventory, night, room_type):
    """calendar_entries: {(iso_date, type): free}; default is the inventory."""
    key = (night.isoformat(), room_type)
    if key in calendar_entries:
        return calendar_entries[key]
    return inventory[room_type]


def oracle_nights(arrival: date, departure: date):
    out = []
    night = arrival
    while night < departure:
        out.append(night)
        night = night + timedelta(days=1)
    return out


def oracle_available(calendar_entries, inventory, rooms, arrival, departure):
    for night in oracle_nights(arrival, departure):
        for room_type in TYPES:
            wanted = rooms[room_type]
            if wanted > 0:
                if oracle_free(calendar_entries, inventory, night, room_type) < wanted:
                    return False
    return True


def oracle_longest_prefix(calendar_entries, inventory, rooms, arrival, departure):
    """Returns ("full", None) / ("prefix", cover_until) / ("none", None)."""
    covered = arrival
    for night in oracle_nights(arrival, departure):
        night_ok = True
        for room_type in TYPES:
            wanted = rooms[room_type]
            if wanted > 0:
                if oracle_free(calendar_entries, inventory, night, room_type) < wanted:
                    night_ok = False
        if not night_ok:
            break
        covered = night + timedelta(days=1)
    if covered == departure:
        return ("full", None)
    if covered == arrival:
        return ("none", None)
    return ("prefix", covered)


def oracle_price(rates, rooms, arrival, departure):
    nights = len(oracle_nights(arrival, departure))
    total = 0
    for room_type in TYPES:
        total = total + rooms[room_type] * rates[room_type] * nights
    return total


def oracle_evaluate(profile, calendar_entries, request):
    """Mirror of the guesthouse-side request evaluation, field by field.

    profile: {"facilities": [...], "inventory": {...}, "nightly_rate": {...}}
    request: {"persons", "arrival", "departure", "rooms", "max_total_price",
              "required_facilities"}
    Returns (kind, cover_until, price) with kind in {"full", "prefix", "none"}.
    """
    if not oracle_subset(profile["facilities"], request["required_facilities"]):
        return ("none", None, 0)
    beds = 0
    for room_type in TYPES:
        beds = beds + request["rooms"][room_type] * BEDS[room_type]
    if beds < request["persons"]:
        return ("none", None, 0)
    kind, cover = oracle_longest_prefix(
        calendar_entries,
        profile["inventory"],
        request["rooms"],
        request["arrival"],
        request["departure"],
    )
    if kind == "none":
        return ("none", None, 0)
    if kind == "full":
        price = oracle_price(
            profile["nightly_rate"], request["rooms"], request["arrival"], request["departure"]
        )
        cap = request["max_total_price"]
        if cap is not None and price > cap:
            return ("none", None, 0)
        return ("full", None, price)
    price = oracle_price(
        profile["nightly_rate"], request["rooms"], request["arrival"], cover
    )
    return ("prefix", cover, price)


def oracle_rank(proposals):
    """Insertion sort by (price, leg count, guesthouse-id sequence), stable.

    proposals: list of dicts with "total_price", "legs" (list of dicts with
    "guesthouse_id"). Returns a new list, input untouched.
    """

    def key_of(p):
        return (
            p["total_price"],
            len(p["legs"]),
            tuple(leg["guesthouse_id"] for leg in p["legs"]),
        )

    out = []
    for item in proposals:
        placed = False
        for i in range(len(out)):
            if key_of(item) < key_of(out[i]):
                out.insert(i, item)
                placed = True
                break
        if not placed:
            out.append(item)
    return out
