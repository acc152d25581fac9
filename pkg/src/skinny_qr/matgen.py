"""Reproducible tall-skinny test matrices with a prescribed spectrum.

X = U diag(sigma) V^T with sigma_1 = 1 and sigma_n = 1/kappa. U is built by
applying n seeded Householder reflectors to the first n columns of the
identity, so its orthonormality does not depend on any factorization under
test. V is an n x n product of seeded reflectors.

Random stream (portable across languages): splitmix64 over (seed, stream,
index)::

    GOLDEN = 0x9E3779B97F4A7C15
    mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27; z *= 0x94D049BB133111EB
            z ^= z >> 31                       (all mod 2**64)
    key     = mix(seed + GOLDEN * (stream + 1))
    z_i     = mix(key + GOLDEN * (i + 1))
    u_i     = ((z_i >> 11) + 0.5) * 2**-53     in (0, 1)

Gaussians come from Box-Muller on consecutive pairs (u_{2j}, u_{2j+1}):
g_{2j} = r cos(t), g_{2j+1} = r sin(t), r = sqrt(-2 ln u_{2j}),
t = 2 pi u_{2j+1}. Reflector j of U uses stream j; reflector j of V uses
stream 2**32 + j.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
V_STREAM_OFFSET = 1 << 32

_MASK = (1 << 64) - 1


class Decay(str, enum.Enum):
    GEOMETRIC = "geometric"
    LINEAR = "linear"


@dataclass(frozen=True)
class SpectrumSpec:
    kappa: float = 1.0
    decay: Decay = Decay.GEOMETRIC
    seed: int = 0

    def __post_init__(self):
        kappa = float(self.kappa)
        if not np.isfinite(kappa) or kappa < 1.0:
            raise ValueError(f"kappa must be a finite value >= 1, got {self.kappa}")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "decay", Decay(self.decay))
        object.__setattr__(self, "seed", int(self.seed) & _MASK)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def uniform_stream(seed: int, stream: int, count: int) -> np.ndarray:
    """``count`` uniforms in (0, 1) from the counter-based stream."""
    base = (int(seed) + GOLDEN * (int(stream) + 1)) & _MASK
    with np.errstate(over="ignore"):
        key = _mix(np.array([base], dtype=np.uint64))[0]
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = _mix(key + np.uint64(GOLDEN) * idx)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def gaussian_stream(seed: int, stream: int, count: int) -> np.ndarray:
    u = uniform_stream(seed, stream, count + (count & 1))
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    t = 2.0 * np.pi * u[1::2]
    g = np.empty(u.size)
    g[0::2] = r * np.cos(t)
    g[1::2] = r * np.sin(t)
    return g[:count]


def singular_values(n: int, kappa: float, decay: Decay | str = Decay.GEOMETRIC) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    i = np.arange(n)
    if Decay(decay) is Decay.GEOMETRIC:
        sigma = kappa ** (-i / (n - 1))
    else:
        sigma = 1.0 - (1.0 - 1.0 / kappa) * i / (n - 1)
    sigma[0], sigma[-1] = 1.0, 1.0 / kappa
    return sigma


def _reflect_identity(rows: int, cols: int, seed: int, stream0: int) -> np.ndarray:
    """H_0 H_1 ... H_{cols-1} applied to I[:, :cols]; reflector j acts on rows j.."""
    Q = np.zeros((rows, cols), order="F")
    Q[np.arange(cols), np.arange(cols)] = 1.0
    for j in reversed(range(cols)):
        v = gaussian_stream(seed, stream0 + j, rows - j)
        vv = v @ v
        if vv == 0.0:
            continue
        # only columns >= j are nonzero in rows j.. at this point
        block = Q[j:, j:]
        block -= np.outer(v, (2.0 / vv) * (v @ block))
    return Q


def generate(m: int, n: int, spec: SpectrumSpec | None = None) -> np.ndarray:
    """m x n Fortran-ordered matrix with singular values 1 .. 1/kappa."""
    spec = spec or SpectrumSpec()
    if n < 1 or m < n:
        raise ValueError(f"need m >= n >= 1, got m={m}, n={n}")
    if n == 1 and spec.kappa != 1.0:
        raise ValueError("a single column has condition number 1; use kappa=1")
    sigma = singular_values(n, spec.kappa, spec.decay)
    U = _reflect_identity(m, n, spec.seed, 0)
    V = _reflect_identity(n, n, spec.seed, V_STREAM_OFFSET)
    return np.asfortranarray((U * sigma) @ V.T)
