"""Thread-safe, append-only cache for mixture coefficients.

A distribution object owns one cache. Raising the number of terms extends the
cached prefix in place; the prefix already computed is never recomputed.
"""

from __future__ import annotations

import threading
from typing import Protocol

from app.numerics.specialfn import CompensatedSum


class CoefficientRecursion(Protocol):
    """Stateful generator of c_0, c_1, ... in order."""

    def extend(self, count: int) -> list[float]:
        ...


class CoefficientCache:
    """Append-only store of coefficients and their running partial sums.

    Extension happens under a lock; reads of an already computed prefix take
    no lock because the backing lists only ever grow.
    """

    def __init__(self, recursion: CoefficientRecursion) -> None:
        self._recursion = recursion
        self._values: list[float] = []
        self._partial_sums: list[float] = []
        self._running = CompensatedSum()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._values)

    def ensure(self, count: int) -> None:
        """Make sure at least `count` coefficients are cached."""
        if len(self._values) >= count:
            return
        with self._lock:
            missing = count - len(self._values)
            if missing <= 0:
                return
            fresh = self._recursion.extend(missing)
            sums = []
            for value in fresh:
                self._running.add(value)
                sums.append(self._running.value)
            # partial sums first so a reader seeing a value always sees its sum
            self._partial_sums.extend(sums)
            self._values.extend(fresh)

    def prefix(self, count: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Return (c_0..c_{count-1}, partial sums) as immutable snapshots."""
        self.ensure(count)
        return tuple(self._values[:count]), tuple(self._partial_sums[:count])
