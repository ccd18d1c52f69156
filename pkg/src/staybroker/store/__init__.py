"""Persistence: guesthouse registry, calendars, bookings, user history."""

from .engine import Booking, HistoryEntry, Store

__all__ = ["Booking", "HistoryEntry", "Store"]
