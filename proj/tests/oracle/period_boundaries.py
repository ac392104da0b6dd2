#!/usr/bin/env python3
"""Generates calendar-boundary vectors for flush-policy tests.

For a sample of UTC timestamps, emits the first day/month/quarter boundary
strictly after each timestamp, computed with Python's datetime (independent
of the C++ implementation). Output: tests/golden/period_boundaries.csv with
columns ts,day,month,quarter (all epoch seconds).
"""

import calendar
import csv
import os
import sys
from datetime import datetime, timezone


def next_day(ts):
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    floor = datetime(d.year, d.month, d.day, tzinfo=timezone.utc)
    return int(floor.timestamp()) + 86400


def next_month(ts):
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    y, m = (d.year + 1, 1) if d.month == 12 else (d.year, d.month + 1)
    return int(datetime(y, m, 1, tzinfo=timezone.utc).timestamp())


def next_quarter(ts):
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    qm = ((d.month - 1) // 3) * 3 + 4
    y, m = (d.year + 1, 1) if qm > 12 else (d.year, qm)
    return int(datetime(y, m, 1, tzinfo=timezone.utc).timestamp())


def main():
    samples = [
        0,
        1,
        86399,
        86400,
        1704067199,  # 2023-12-31 23:59:59
        1704067200,  # 2024-01-01 00:00:00
        1706745599,  # 2024-01-31 23:59:59 (month/non-quarter boundary next)
        1709164800,  # 2024-02-29 00:00:00 (leap February)
        1711929599,  # 2024-03-31 23:59:59 (quarter boundary next)
        1719791999,  # 2024-06-30 23:59:59
        1735689599,  # 2024-12-31 23:59:59 (year + quarter boundary)
        4102444799,  # 2099-12-31 23:59:59
    ]
    # deterministic pseudo-random spread, no RNG module needed
    x = 0x243F6A8885A308D3
    for _ in range(120):
        x = (x * 6364136223846793005 + 1442695040888963407) % (1 << 64)
        samples.append(x % 4102444800)

    out = os.path.join(os.path.dirname(__file__), "..", "golden",
                       "period_boundaries.csv")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["ts", "day", "month", "quarter"])
        for ts in samples:
            w.writerow([ts, next_day(ts), next_month(ts), next_quarter(ts)])
    print("wrote", os.path.abspath(out))
    # calendar import keeps leap handling honest in review builds
    assert calendar.isleap(2024)
    return 0


if __name__ == "__main__":
    sys.exit(main())
