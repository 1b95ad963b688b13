"""Synthetic noiseless compressed-sensing instances.

Signals are Bernoulli-Gaussian, the measurement matrix has i.i.d.
``N(0, 1/N)`` entries and ``y = A x0``.  Randomness comes from the Philox4x64
counter-based generator keyed by ``(seed, stream)``.  Gaussian variates are
produced by Box-Muller from the raw 64-bit output, so an instance depends only
on the seed and not on numpy's distribution code.

Streams:
    0  support indicators (one uniform per coordinate)
    1  nonzero values (one normal per coordinate, drawn for every coordinate)
    2  matrix entries, row-major
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_N = 10_000_000
MAGIC = b"NCVXCS1\x00"
_HEADER = struct.Struct("<8sQQQddd")

STREAM_SUPPORT = 0
STREAM_VALUES = 1
STREAM_MATRIX = 2


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    alpha: float
    rho: float
    sigma_x2: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.n > MAX_N:
            raise ValueError(f"n={self.n} exceeds the supported maximum {MAX_N}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho!r}")
        if not self.sigma_x2 > 0:
            raise ValueError(f"sigma_x2 must be positive, got {self.sigma_x2!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.m_rows < 1:
            raise ValueError("alpha * n rounds to zero measurements")

    @property
    def m_rows(self) -> int:
        return int(round(self.alpha * self.n))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    params: EnsembleParams
    x0: np.ndarray
    matrix: np.ndarray
    y: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    @property
    def m(self) -> int:
        return self.y.shape[0]


class CounterStream:
    """Sequential reader over one Philox substream."""

    def __init__(self, seed: int, stream: int):
        self._bitgen = np.random.Philox(key=np.array([int(seed), int(stream)], dtype=np.uint64))

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(n)

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, n: int) -> np.ndarray:
        """Box-Muller pairs; an odd request discards the last sine variate."""
        k = (n + 1) // 2
        r = self.raw(2 * k) >> np.uint64(11)
        u1 = (r[0::2].astype(np.float64) + 1.0) * 2.0 ** -53  # (0, 1]
        u2 = r[1::2].astype(np.float64) * 2.0 ** -53
        rad = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * np.pi * u2
        out = np.empty(2 * k)
        out[0::2] = rad * np.cos(ang)
        out[1::2] = rad * np.sin(ang)
        return out[:n]


def gen_signal(params: EnsembleParams) -> np.ndarray:
    n = params.n
    support = CounterStream(params.seed, STREAM_SUPPORT).uniform(n) < params.rho
    values = CounterStream(params.seed, STREAM_VALUES).normal(n) * math.sqrt(params.sigma_x2)
    return np.where(support, values, 0.0)


def gen_matrix(params: EnsembleParams, chunk_rows: int | None = None) -> np.ndarray:
    n, m = params.n, params.m_rows
    out = np.empty((m, n))
    stream = CounterStream(params.seed, STREAM_MATRIX)
    # keep chunks even-sized so Box-Muller pairs never straddle a boundary
    rows = chunk_rows or max(1, (1 << 22) // n)
    scale = 1.0 / math.sqrt(n)
    for r0 in range(0, m, rows):
        r1 = min(m, r0 + rows)
        cnt = (r1 - r0) * n
        block = stream.normal(cnt + (cnt & 1))[:cnt]
        out[r0:r1] = block.reshape(r1 - r0, n) * scale
    return out


def gen_instance(params: EnsembleParams) -> ProblemInstance:
    """Draw ``(x0, A, y)``; deterministic given ``params``."""
    x0 = gen_signal(params)
    a = gen_matrix(params)
    y = a @ x0
    for arr in (x0, a, y):
        arr.setflags(write=False)
    return ProblemInstance(params, x0, a, y)


def mse_against_truth(xhat, inst: ProblemInstance) -> float:
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape != inst.x0.shape:
        raise ValueError(f"estimate has shape {xhat.shape}, truth has {inst.x0.shape}")
    d = xhat - inst.x0
    return float(np.dot(d, d) / d.size)


# -- binary container ---------------------------------------------------------

def dump_instance(inst: ProblemInstance, path) -> None:
    p = inst.params
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, inst.n, inst.m, int(p.seed), p.rho, p.alpha, p.sigma_x2))
        for arr in (inst.x0, inst.matrix, inst.y):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_instance(path) -> ProblemInstance:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("file too short for an instance header")
    magic, n, m, seed, rho, alpha, sx2 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * (n + m * n + m)
    if len(data) != expected:
        raise ValueError(f"size mismatch: expected {expected} bytes, found {len(data)}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    x0, a, y = body[:n], body[n:n + m * n].reshape(m, n), body[n + m * n:]
    params = EnsembleParams(int(n), alpha, rho, sx2, int(seed))
    if params.m_rows != m:
        params = _with_rows(params, m)
    for arr in (x0, a, y):
        arr.setflags(write=False)
    return ProblemInstance(params, x0, a, y)


def _with_rows(params: EnsembleParams, m: int) -> EnsembleParams:
    # stored alpha may not round back to m exactly; trust the stored shape
    return EnsembleParams(params.n, m / params.n, params.rho, params.sigma_x2, params.seed)
