"""Clock seam so persisted traces can be byte-deterministic.

Live sessions stamp records with real UTC time; replay and test sessions use
a logical clock that advances one second per call, so two runs with the same
seed and scripted backends write identical files.
"""

from __future__ import annotations

import datetime as _dt


class SystemClock:
    """Real wall-clock time in UTC."""

    def now_iso(self) -> str:
        return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

    def monotonic(self) -> float:
        import time

        return time.monotonic()


class LogicalClock:
    """Deterministic clock: starts at the epoch, +1s per observation."""

    def __init__(self, start: int = 0):
        self._tick = start

    def now_iso(self) -> str:
        stamp = _dt.datetime.fromtimestamp(self._tick, _dt.timezone.utc)
        self._tick += 1
        return stamp.strftime("%Y-%m-%dT%H:%M:%SZ")

    def monotonic(self) -> float:
        self._tick += 1
        return float(self._tick)
