"""Row-block / panel partitioning and the worker pool."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Sequence

GRAM_PANEL_BYTES = 32 * 1024
TSQR_WORKSPACE_BYTES = 192 * 1024
TSQR_MAX_COLS = 64

_num_threads = os.cpu_count() or 1


def set_num_threads(n: int) -> None:
    global _num_threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _num_threads = int(n)


def get_num_threads() -> int:
    return _num_threads


@dataclass(frozen=True)
class PanelPlan:
    """Split of the m rows into ``num_blocks`` contiguous row blocks, each
    streamed in panels of ``panel_rows`` rows (the last one may be short)."""

    num_blocks: int
    panel_rows: int
    deterministic: bool = True

    def __post_init__(self):
        if self.num_blocks < 1:
            raise ValueError(f"num_blocks must be >= 1, got {self.num_blocks}")
        if self.panel_rows < 1:
            raise ValueError(f"panel_rows must be >= 1, got {self.panel_rows}")

    def blocks(self, m: int) -> list[tuple[int, int]]:
        size = -(-m // self.num_blocks) if m else 0
        out = []
        for i in range(self.num_blocks):
            start = min(i * size, m)
            out.append((start, min(start + size, m)))
        return out


def gram_plan(m: int, n: int, num_blocks: int | None = None) -> PanelPlan:
    # b*n doubles ~ 32 KiB so a panel stays cache resident
    b = max(n, GRAM_PANEL_BYTES // (8 * n))
    return PanelPlan(num_blocks or get_num_threads(), b)


def tsqr_panel_rows(n: int) -> int:
    """Largest b with a (b+n) x n FP64 workspace within 192 KiB, at least 2n."""
    if n > TSQR_MAX_COLS:
        raise ValueError(f"TSQR supports at most {TSQR_MAX_COLS} columns, got {n}")
    return max(2 * n, TSQR_WORKSPACE_BYTES // (8 * n) - n)


def tsqr_plan(m: int, n: int, num_blocks: int | None = None) -> PanelPlan:
    return PanelPlan(num_blocks or get_num_threads(), tsqr_panel_rows(n))


def map_blocks(fn: Callable, blocks: Sequence[tuple[int, int]], ordered: bool = True) -> list:
    """Run ``fn(start, stop)`` for each block on the worker pool.

    With ``ordered`` the results come back in block order; otherwise in
    completion order.
    """
    workers = min(get_num_threads(), len(blocks))
    if workers <= 1:
        return [fn(s, e) for s, e in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, s, e) for s, e in blocks]
        if ordered:
            return [f.result() for f in futures]
        return [f.result() for f in as_completed(futures)]
