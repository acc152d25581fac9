"""Constant-mn benchmark grid: time each method, check accuracy, compare
with the Roofline prediction."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .counters import TrafficCounters, track
from .errors import BreakdownError, ZeroMatrixError
from .gramqr import TOL_ORTH, cholqr2, orthogonality_residual, reconstruct_q, svqb2
from .matgen import Decay, SpectrumSpec, generate
from .matrix import EPS, frobenius_norm, gram_reference
from .perfmodel import composite_time, load_hardware
from .plan import gram_plan, tsqr_plan
from .tsqr import reference_hhqr, tsqr_qless

METHODS = ("tsqr", "cholqr2", "svqb2", "hhqr-ref")
DEFAULT_COLS = (1, 8, 16, 32, 64)
DEFAULT_MN = 2**23

COLUMNS = (
    "method",
    "m",
    "n",
    "kappa",
    "seed",
    "reps",
    "t_mean_s",
    "t_min_s",
    "orth_resid",
    "gram_resid",
    "large_reads",
    "flops",
    "model_time_s",
    "model_ratio",
)
EXTRA_COLUMNS = ("t_median_s", "status", "message")
ALL_COLUMNS = COLUMNS + EXTRA_COLUMNS
_INT_COLUMNS = {"m", "n", "seed", "reps", "large_reads", "flops"}
_STR_COLUMNS = {"method", "status", "message"}


def gram_tolerance(n: int) -> float:
    return 50 * n * EPS


@dataclass
class GridConfig:
    mn_product: int = DEFAULT_MN
    cols: tuple[int, ...] = DEFAULT_COLS
    methods: tuple[str, ...] = METHODS
    kappa: float = 1e6
    decay: str = "geometric"
    seed: int = 0
    reps: int = 50
    warmups: int = 3
    hw: str = "h100"

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.warmups < 0:
            raise ValueError(f"warmups must be >= 0, got {self.warmups}")
        if self.mn_product < 1:
            raise ValueError(f"mn_product must be >= 1, got {self.mn_product}")
        if not self.cols or any(n < 1 for n in self.cols):
            raise ValueError(f"column counts must be >= 1, got {self.cols}")
        bad = [mth for mth in self.methods if mth not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
        if self.kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        Decay(self.decay)


def _runner(method: str, m: int, n: int):
    """(factorize, verify) for one method; verify maps a result to (orth, gram Z)."""
    if method == "tsqr":
        plan = tsqr_plan(m, n)  # raises for n > 64
        return (lambda X: tsqr_qless(X, plan)), (lambda X, R: (_orth(reconstruct_q(X, R)), R))
    if method == "hhqr-ref":
        return reference_hhqr, (lambda X, R: (_orth(reconstruct_q(X, R)), R))
    plan = gram_plan(m, n)
    if method == "cholqr2":

        def verify(X, res):
            R, passes = res
            return _orth(reconstruct_q(X, *passes, plan=plan)), R

        return (lambda X: cholqr2(X, plan, return_passes=True)), verify

    def verify_qz(X, res):
        return _orth(res.basis(X, plan), res.rank), res.z

    return (lambda X: svqb2(X, plan)), verify_qz


def _orth(Q, rank=None) -> float:
    return float(orthogonality_residual(Q, rank))


def _gram_residual(X, Z, norm2: float) -> float:
    G = gram_reference(X)
    return frobenius_norm(Z.T @ Z - G) / norm2


def run_cell(X, method: str, config: GridConfig, hw) -> dict:
    m, n = X.shape
    kappa = config.kappa if n > 1 else 1.0
    row = dict.fromkeys(ALL_COLUMNS)
    row.update(method=method, m=m, n=n, kappa=kappa, seed=config.seed, reps=config.reps, message="")
    row["model_time_s"] = composite_time(hw, method, m, n)
    try:
        factorize, verify = _runner(method, m, n)
    except ValueError as exc:
        row.update(status="skipped", message=str(exc))
        return row
    try:
        for _ in range(config.warmups):
            factorize(X)
        times = []
        counters = TrafficCounters()
        for _ in range(config.reps):
            counters.reset()
            with track(counters):
                t0 = time.perf_counter()
                result = factorize(X)
                times.append(time.perf_counter() - t0)
    except (BreakdownError, ZeroMatrixError) as exc:
        row.update(status="error", message=f"{type(exc).__name__}: {exc}")
        return row
    orth, Z = verify(X, result)
    gram = float(_gram_residual(X, Z, frobenius_norm(X) ** 2))
    t_mean = statistics.fmean(times)
    row.update(
        t_mean_s=t_mean,
        t_min_s=min(times),
        t_median_s=statistics.median(times),
        orth_resid=orth,
        gram_resid=gram,
        large_reads=counters.large_reads,
        flops=counters.flops,
        model_ratio=t_mean / row["model_time_s"],
    )
    failures = []
    if not orth <= TOL_ORTH:
        failures.append(f"orth_resid {orth:.2e} > {TOL_ORTH:.0e}")
    if not gram <= gram_tolerance(n):
        failures.append(f"gram_resid {gram:.2e} > {gram_tolerance(n):.2e}")
    row.update(status="fail" if failures else "ok", message="; ".join(failures))
    return row


def run_grid(config: GridConfig, on_row: Callable[[list[dict]], None] | None = None) -> list[dict]:
    """One row per (n, method), in column-then-method order."""
    hw = load_hardware(config.hw)
    rows: list[dict] = []
    for n in config.cols:
        m = max(n, round(config.mn_product / n))
        kappa = config.kappa if n > 1 else 1.0
        X = generate(m, n, SpectrumSpec(kappa, config.decay, config.seed))
        for method in config.methods:
            rows.append(run_cell(X, method, config, hw))
            if on_row is not None:
                on_row(rows)
    return rows


def rows_pass(rows: Iterable[dict]) -> bool:
    return all(r["status"] in ("ok", "skipped") for r in rows)


def _cell(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    if isinstance(v, np.generic):
        return v.item()
    return v


def render(rows: list[dict], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ALL_COLUMNS)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in ALL_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        data = [{c: _json_value(r.get(c)) for c in ALL_COLUMNS} for r in rows]
        return json.dumps(data, indent=1) + "\n"
    if fmt == "text":
        shown = ("method", "m", "n", "t_mean_s", "orth_resid", "gram_resid", "large_reads", "model_time_s", "status")
        table = [list(shown)]
        for r in rows:
            table.append([_fmt_text(r.get(c)) for c in shown])
        widths = [max(len(row[i]) for row in table) for i in range(len(shown))]
        return "\n".join("  ".join(s.rjust(w) for s, w in zip(row, widths)) for row in table) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose csv, json or text")


def _fmt_text(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def report(rows: list[dict], path: str | Path | None, fmt: str = "csv") -> str:
    """Render rows and write them to ``path`` (stdout text returned either way)."""
    text = render(rows, fmt)
    if path is not None:
        p = Path(path)
        try:
            p.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write results to {p}: {exc.strerror or exc}") from exc
    return text


def parse_csv(text: str) -> list[dict]:
    """Inverse of the CSV rendering (empty cells become None)."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in rec.items():
            if v == "":
                row[k] = None if k not in _STR_COLUMNS else ""
            elif k in _STR_COLUMNS:
                row[k] = v
            elif k in _INT_COLUMNS:
                row[k] = int(v)
            else:
                row[k] = float(v)
        out.append(row)
    return out
