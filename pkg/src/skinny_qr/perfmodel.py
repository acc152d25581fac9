"""Roofline performance model for the tall-skinny kernels.

Attainable rate R = min(R_peak, I * b) with arithmetic intensity I in
flops/byte and memory bandwidth b. Only traffic and flops that scale with m
are modeled; n x n work is neglected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

REQUIRED_FIELDS = ("name", "mem_bandwidth", "peak_fp64", "sm_count", "shared_mem_per_unit", "hbm_capacity")


@dataclass(frozen=True)
class HardwareSpec:
    name: str
    mem_bandwidth: float  # bytes/s, measured
    peak_fp64: float  # flops/s, vector FMA
    sm_count: int
    shared_mem_per_unit: int  # bytes
    hbm_capacity: int  # bytes
    mem_bandwidth_theoretical: float | None = None
    peak_fp64_tensor: float | None = None  # stored, not used by the model

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "name" or v is None:
                continue
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"hardware field {f.name} must be a positive number, got {v!r}")

    def with_bandwidth(self, bw: float) -> "HardwareSpec":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["mem_bandwidth"] = bw
        return HardwareSpec(**d)


_INT_FIELDS = {"sm_count", "shared_mem_per_unit", "hbm_capacity"}


def parse_hardware(text: str, source: str = "<string>") -> HardwareSpec:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    known = {f.name for f in fields(HardwareSpec)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in known:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        if key == "name":
            values[key] = value
        else:
            try:
                num = float(value)
            except ValueError:
                raise ValueError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
            values[key] = int(num) if key in _INT_FIELDS else num
    missing = [k for k in REQUIRED_FIELDS if k not in values]
    if missing:
        raise ValueError(f"{source}: missing keys {', '.join(missing)}")
    return HardwareSpec(**values)


def format_hardware(hw: HardwareSpec) -> str:
    lines = []
    for f in fields(hw):
        v = getattr(hw, f.name)
        if v is None:
            continue
        lines.append(f"{f.name} = {v if isinstance(v, str) else repr(v)}")
    return "\n".join(lines) + "\n"


def hardware_names() -> list[str]:
    data = resources.files("skinny_qr") / "data"
    return sorted(p.name[:-3] for p in data.iterdir() if p.name.endswith(".hw"))


def load_hardware(name_or_path: str | Path) -> HardwareSpec:
    """Built-in device by name (``h100``, ``b100``, ``mi300x``, ``mi350x``) or a path to a ``.hw`` file."""
    p = Path(name_or_path)
    if p.suffix == ".hw" or p.exists():
        return parse_hardware(p.read_text(encoding="utf-8"), str(p))
    key = str(name_or_path).lower()
    res = resources.files("skinny_qr") / "data" / f"{key}.hw"
    if not res.is_file():
        raise ValueError(f"unknown hardware {name_or_path!r}; built-in: {', '.join(hardware_names())}")
    return parse_hardware(res.read_text(encoding="utf-8"), f"{key}.hw")


@dataclass(frozen=True)
class KernelModel:
    kernel: str
    bytes: Callable[[int, int], int]
    flops: Callable[[int, int], int]
    description: str = ""


KERNELS: dict[str, KernelModel] = {
    k.kernel: k
    for k in (
        KernelModel("tsmttsm", lambda m, n: 8 * m * n, lambda m, n: 2 * m * n * n, "C = X^T X"),
        KernelModel("tsmRttsmR", lambda m, n: 8 * m * n, lambda m, n: 3 * m * n * n, "C = (X R^-1)^T (X R^-1)"),
        KernelModel("tsmmttsmm", lambda m, n: 8 * m * n, lambda m, n: 4 * m * n * n, "C = (X B)^T (X B)"),
        KernelModel("tsqr", lambda m, n: 8 * m * n, lambda m, n: 2 * m * n * n, "Q-less TSQR, X read once"),
        KernelModel(
            "hhqr_readwrite", lambda m, n: 16 * m * n, lambda m, n: 2 * m * n * n, "Householder QR, X read, Q written"
        ),
        KernelModel("tsmm", lambda m, n: 16 * m * n, lambda m, n: 2 * m * n * n, "Q = X B written out"),
    )
}

METHOD_KERNELS: dict[str, tuple[str, ...]] = {
    "cholqr2": ("tsmttsm", "tsmRttsmR"),
    "svqb2": ("tsmttsm", "tsmmttsmm"),
    "svqb2_naive": ("tsmttsm", "tsmm", "tsmttsm"),
    "tsqr": ("tsqr",),
    "hhqr": ("hhqr_readwrite",),
    "hhqr-ref": ("hhqr_readwrite",),
}


def kernel_model(kernel: str) -> KernelModel:
    try:
        return KERNELS[kernel]
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {', '.join(KERNELS)}") from None


def intensity_exact(kernel: str, n: int) -> Fraction:
    """flops/byte as an exact rational (m cancels)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    k = kernel_model(kernel)
    return Fraction(k.flops(1, n), k.bytes(1, n))


def intensity(kernel: str, n: int) -> float:
    return float(intensity_exact(kernel, n))


def tsqr_blocked_flops(m: int, n: int, panel_rows: int, num_blocks: int) -> int:
    """Stage-1 flops as counted per panel: a panel of r rows costs 2 (r+1) n^2.

    Equals 2 m n^2 (1 + 1/b) when b divides every block, and tends to the
    2 m n^2 of the ``tsqr`` model as b grows.
    """
    size = -(-m // num_blocks)
    total = 0
    for i in range(num_blocks):
        rows = max(0, min(size, m - i * size))
        total += 2 * (rows + -(-rows // panel_rows)) * n * n
    return total


def machine_balance(hw: HardwareSpec) -> float:
    return hw.peak_fp64 / hw.mem_bandwidth


def roofline_rate(hw: HardwareSpec, I: float) -> float:
    if I < 0:
        raise ValueError(f"intensity must be >= 0, got {I}")
    return min(hw.peak_fp64, I * hw.mem_bandwidth)


def predict_time(hw: HardwareSpec, kernel: str, m: int, n: int) -> float:
    """Roofline runtime in seconds.

    Written as max(bytes/b, flops/peak), which equals flops/roofline_rate and
    gives bytes/b exactly in the memory-bound regime.
    """
    k = kernel_model(kernel)
    return max(k.bytes(m, n) / hw.mem_bandwidth, k.flops(m, n) / hw.peak_fp64)


def composite_time(hw: HardwareSpec, method: str, m: int, n: int) -> float:
    try:
        seq = METHOD_KERNELS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHOD_KERNELS)}") from None
    return sum(predict_time(hw, k, m, n) for k in seq)


def composite_bytes(method: str, m: int, n: int) -> int:
    return sum(KERNELS[k].bytes(m, n) for k in METHOD_KERNELS[method])
