"""Memory-traffic and flop accounting.

Kernels call :func:`record` with the number of FP64 elements they stream
from/to the tall matrix and the nominal flop count of the performance model.
Traffic on n-by-n matrices is never recorded. Counting is scoped with
:func:`track`; nested scopes all receive every record, so an outer scope
always holds the sum of its inner ones.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field, fields
from typing import Iterator

_active: ContextVar[tuple["TrafficCounters", ...]] = ContextVar("skinny_qr_counters", default=())


@dataclass
class TrafficCounters:
    large_reads: int = 0
    large_writes: int = 0
    flops: int = 0
    # multiply-adds actually issued (symmetry exploited etc.)
    flops_executed: int = 0
    # copies made to stage data for a kernel, e.g. assembling [A b]
    staging_reads: int = 0
    staging_writes: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, reads=0, writes=0, flops=0, executed=0, staging_reads=0, staging_writes=0):
        with self._lock:
            self.large_reads += int(reads)
            self.large_writes += int(writes)
            self.flops += int(flops)
            self.flops_executed += int(executed)
            self.staging_reads += int(staging_reads)
            self.staging_writes += int(staging_writes)

    def reset(self) -> None:
        with self._lock:
            for f in fields(self):
                if not f.name.startswith("_"):
                    setattr(self, f.name, 0)

    @property
    def bytes(self) -> int:
        """Bytes moved to/from the tall-matrix store (FP64)."""
        return 8 * (self.large_reads + self.large_writes)

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self) if not f.name.startswith("_")}


def record(reads=0, writes=0, flops=0, executed=0, staging_reads=0, staging_writes=0) -> None:
    for c in _active.get():
        c.add(reads, writes, flops, executed, staging_reads, staging_writes)


@contextmanager
def track(counters: TrafficCounters | None = None) -> Iterator[TrafficCounters]:
    """Collect every :func:`record` call made inside the block.

    >>> with track() as c:
    ...     tsmttsm(X)
    >>> c.large_reads == X.size
    True
    """
    c = TrafficCounters() if counters is None else counters
    token = _active.set(_active.get() + (c,))
    try:
        yield c
    finally:
        _active.reset(token)
