"""Standard-Gaussian expectations and the two-point sigma average.

The measure ``Dz`` is the standard normal density.  Smooth integrands are
handled with Gauss-Hermite quadrature; integrands with kinks (threshold
functions) should pass their breakpoints so that each smooth segment is
integrated separately with Gauss-Legendre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

DEFAULT_ORDER = 101
# |z| beyond this carries < 1e-32 of Gaussian mass
Z_CUTOFF = 12.0


class QuadratureError(ArithmeticError):
    """Raised when an integrand is not finite at a quadrature node."""

    def __init__(self, node: float, value: float):
        super().__init__(f"integrand is not finite at node z={node!r} (value {value!r})")
        self.node = node
        self.value = value


@dataclass(frozen=True)
class GaussQuadrature:
    """Nodes and weights for the standard normal measure."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def expect(self, f: Callable) -> float:
        vals = _evaluate(f, self.nodes)
        return float(np.dot(self.weights, vals))


@lru_cache(maxsize=16)
def gauss_hermite(order: int = DEFAULT_ORDER) -> GaussQuadrature:
    """Probabilists' Gauss-Hermite rule normalised to a probability measure."""
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return GaussQuadrature(nodes=x, weights=w, order=order)


@lru_cache(maxsize=16)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _evaluate(f: Callable, nodes: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(nodes), dtype=float)
        if vals.shape != nodes.shape:
            vals = np.broadcast_to(vals, nodes.shape).astype(float)
    except (TypeError, ValueError):
        vals = np.array([float(f(float(z))) for z in nodes])
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureError(float(nodes[i]), float(vals[i]))
    return vals


def segment_rule(breakpoints: Iterable[float], order: int = 20,
                 max_width: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule for Dz on [-Z_CUTOFF, Z_CUTOFF].

    The interval is split at every breakpoint and then into pieces no wider
    than ``max_width``.  Returns ``(nodes, weights)`` with the Gaussian density
    folded into the weights.
    """
    cuts = sorted({float(b) for b in breakpoints if abs(b) < Z_CUTOFF})
    edges = [-Z_CUTOFF, *cuts, Z_CUTOFF]
    gx, gw = _legendre(order)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        npieces = max(1, math.ceil((hi - lo) / max_width))
        sub = np.linspace(lo, hi, npieces + 1)
        for a, b in zip(sub[:-1], sub[1:]):
            half = 0.5 * (b - a)
            z = 0.5 * (a + b) + half * gx
            nodes.append(z)
            weights.append(half * gw * np.exp(-0.5 * z * z) / SQRT_2PI)
    return np.concatenate(nodes), np.concatenate(weights)


def gauss_expect(f: Callable, order: int = DEFAULT_ORDER,
                 breakpoints: Sequence[float] | None = None) -> float:
    """Return the expectation of ``f(z)`` for ``z ~ N(0, 1)``.

    ``f`` should accept a numpy array; scalar-only callables are evaluated
    node by node.  Without breakpoints a Gauss-Hermite rule of the given order
    is used.  With breakpoints the integrand is assumed smooth between them and
    a composite Gauss-Legendre rule is applied per segment (``order`` is then
    capped at 40 points per piece).

    Raises:
        QuadratureError: if ``f`` is not finite at some node.
    """
    if breakpoints is None:
        return gauss_hermite(order).expect(f)
    nodes, weights = segment_rule(breakpoints, order=min(order, 40))
    return float(np.dot(weights, _evaluate(f, nodes)))


def erfc(x):
    """Complementary error function (scalar or array)."""
    out = special.erfc(x)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_moments(lo, hi, width):
    """Partial moments of ``N(0, width**2)`` over ``[lo, hi]``.

    Returns ``(I0, I1, I2)`` with ``Ik = E[m**k; lo < m <= hi]``.  Accepts
    arrays (broadcast together) with ``0 <= lo``, ``hi`` possibly ``inf``.
    Short segments use Gauss-Legendre to avoid cancellation between the
    closed-form terms; ``width == 0`` is not allowed here.
    """
    lo, hi, width = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float),
                                        np.asarray(width, float))
    shape = lo.shape
    lo, hi, width = (np.atleast_1d(v).ravel() for v in (lo, hi, width))
    ul = lo / width
    uh = hi / width
    finite = np.isfinite(uh)
    short = finite & (uh - ul < 1.0)

    uh_f = np.where(finite, uh, 0.0)
    with np.errstate(over="ignore"):   # huge |u|: the density underflows to 0 anyway
        pl = np.exp(-0.5 * ul * ul) / SQRT_2PI
        ph = np.where(finite, np.exp(-0.5 * uh_f * uh_f) / SQRT_2PI, 0.0)
    i0 = 0.5 * (special.erfc(ul / SQRT2) - special.erfc(uh / SQRT2))
    i1 = pl - ph
    i2 = i0 + ul * pl - uh_f * ph

    if short.any():
        gx, gw = _legendre(16)
        a = ul[short][:, None]
        b = uh[short][:, None]
        half = 0.5 * (b - a)
        u = 0.5 * (a + b) + half * gx
        dens = half * gw * np.exp(-0.5 * u * u) / SQRT_2PI
        i0[short] = dens.sum(axis=1)
        i1[short] = (dens * u).sum(axis=1)
        i2[short] = (dens * u * u).sum(axis=1)
    i1 = width * i1
    i2 = width * width * i2
    return i0.reshape(shape), i1.reshape(shape), i2.reshape(shape)


@dataclass(frozen=True)
class SigmaMixture:
    """Two-point law of the effective field strength.

    ``sigma_minus`` applies with probability ``1 - rho`` (zero components of
    the signal) and ``sigma_plus`` with probability ``rho``.
    """

    rho: float
    sigma_minus: float
    sigma_plus: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.sigma_minus < 0 or self.sigma_plus < 0:
            raise ValueError("sigma values must be non-negative")

    @classmethod
    def from_conjugates(cls, rho: float, chit: float, mt: float,
                        sigma_x2: float) -> "SigmaMixture":
        return cls(rho, math.sqrt(chit), math.sqrt(chit + mt * mt * sigma_x2))


def sigma_average(g: Callable[[float], float], mix: SigmaMixture) -> float:
    """``(1 - rho) g(sigma_-) + rho g(sigma_+)``; skips a branch of zero weight."""
    total = 0.0
    if mix.rho < 1.0:
        total += (1.0 - mix.rho) * g(mix.sigma_minus)
    if mix.rho > 0.0:
        total += mix.rho * g(mix.sigma_plus)
    return total
