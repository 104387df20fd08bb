"""Calendar/day-index conversions.

All internal day indices count days since 2020-01-01 (day 0). The epidemic
start time T0 lives on this axis, with its prior window [0, 50] covering
1 January through 20 February 2020.
"""

import datetime as dt

EPOCH = dt.date(2020, 1, 1)


def day_of(d: dt.date) -> int:
    """Day index of a calendar date (EPOCH = 0)."""
    return (d - EPOCH).days


def date_of(day: int) -> dt.date:
    """Calendar date of a day index."""
    return EPOCH + dt.timedelta(days=int(day))
