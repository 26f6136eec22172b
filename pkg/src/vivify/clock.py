"""Injected time sources. Everything that reads time takes one of these, so
simulated sessions run faster than real time with exact timing metrics.
"""

from __future__ import annotations

import time


class VirtualClock:
    """Manually advanced clock, in milliseconds."""

    def __init__(self, start_ms: float = 0.0):
        self._now = float(start_ms)

    def now_ms(self) -> float:
        return self._now

    def advance(self, ms: float) -> None:
        if ms < 0:
            raise ValueError("cannot advance a clock backwards")
        self._now += ms

    def advance_to(self, ms: float) -> None:
        if ms > self._now:
            self._now = float(ms)


class RealClock:
    """Wall clock, zeroed at construction. advance() is a no-op: real work
    already took real time."""

    def __init__(self):
        self._start = time.monotonic()

    def now_ms(self) -> float:
        return (time.monotonic() - self._start) * 1000.0

    def advance(self, ms: float) -> None:
        pass

    def advance_to(self, ms: float) -> None:
        pass
