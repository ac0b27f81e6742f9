"""Damped-window frequency table over cell signatures.

Counters decay exponentially with age. An arrival scales each of its k
addressed counters by ``2 ** (-decay_rate * elapsed)`` before adding 1
and stamping the counter with the arrival time, so a counter always
holds the decayed weight of everything ever hashed into it. A cell's
density estimate is the minimum of its k counters; hash collisions can
only add weight, so the estimate never underestimates.

Concurrency: one writer. ``query`` may run concurrently with other
queries but not with ``update``.
"""

from __future__ import annotations

import math
from array import array

from .hashcore import CellSignature


def is_dense(density: float, density_threshold: float) -> bool:
    """Strictly above the threshold counts as dense."""
    return density > density_threshold


class DecayedCountMin:
    """k x p counter table with per-counter timestamps.

    Stored flat and partition-major so that the absolute indices of a
    cell signature address counters directly.
    """

    __slots__ = ("hash_count", "partition_size", "decay_rate", "clock", "_count", "_tstamp")

    def __init__(self, hash_count: int, partition_size: int, decay_rate: float):
        if hash_count < 1 or partition_size < 1:
            raise ValueError("hash_count and partition_size must be >= 1")
        if not 0.0 < decay_rate < 1.0:
            raise ValueError("decay_rate must lie in (0, 1)")
        self.hash_count = hash_count
        self.partition_size = partition_size
        self.decay_rate = decay_rate
        self.clock = 0.0
        size = hash_count * partition_size
        self._count = array("d", bytes(8 * size))
        self._tstamp = array("d", bytes(8 * size))

    @property
    def table_size(self) -> int:
        return self.hash_count * self.partition_size

    def update(self, sig: CellSignature, t: float) -> float:
        """Fold one arrival at time ``t`` into the cell's counters and
        return the cell's density at ``t``.

        ``t`` must not regress below any previously passed time.
        """
        if t < self.clock:
            raise ValueError(f"clock regression: {t} < {self.clock}")
        self.clock = t
        lam = self.decay_rate
        count = self._count
        tstamp = self._tstamp
        density = math.inf
        for idx in sig:
            c = count[idx]
            if c != 0.0:
                c *= 2.0 ** (-lam * (t - tstamp[idx]))
            c += 1.0
            count[idx] = c
            tstamp[idx] = t
            if c < density:
                density = c
        return density

    def query(self, sig: CellSignature, t: float | None = None) -> float:
        """Density estimate of a cell at time ``t`` (default: now).

        Read-only; counters are decayed to ``t`` on the fly so queries
        at different times stay comparable.
        """
        if t is None:
            t = self.clock
        elif t < self.clock:
            raise ValueError(f"cannot query the past: {t} < {self.clock}")
        lam = self.decay_rate
        count = self._count
        tstamp = self._tstamp
        density = math.inf
        for idx in sig:
            c = count[idx]
            if c != 0.0:
                c *= 2.0 ** (-lam * (t - tstamp[idx]))
            if c < density:
                density = c
        return density if density != math.inf else 0.0

    def fill_ratio(self) -> float:
        """Fraction of counters ever touched."""
        touched = sum(1 for c in self._count if c != 0.0)
        return touched / self.table_size
