"""Timestamp sources.

Replay-verified runs must be byte-reproducible, so anything persisted into
snapshots, revisions, or exports takes its timestamps from a ``Clock``. Live
runs use UTC wall time; deterministic runs use a logical clock that starts at
a fixed epoch and advances one second per tick.
"""

from __future__ import annotations

import datetime as dt
import threading

_EPOCH = dt.datetime(2026, 1, 1, tzinfo=dt.timezone.utc)


class SystemClock:
    def now_iso(self) -> str:
        return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


class LogicalClock:
    """Fixed epoch plus one second per call. Thread-safe."""

    def __init__(self, start: dt.datetime = _EPOCH):
        self._current = start
        self._lock = threading.Lock()

    def now_iso(self) -> str:
        with self._lock:
            stamp = self._current
            self._current = stamp + dt.timedelta(seconds=1)
        return stamp.isoformat(timespec="seconds")
