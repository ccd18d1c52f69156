"""Reservation brokering for rural guesthouses.

Autonomous agent roles (personal, national, zonal, guesthouse, and a text
channel gateway) negotiate over a permission-enforced message bus to find,
compose, rank, and atomically book accommodation offers matching a user's
preferences.
"""

__version__ = "0.1.0"
