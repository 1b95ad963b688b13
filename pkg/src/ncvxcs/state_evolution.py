"""State evolution of AMP on the macroscopic pair (V, eps).

With ``s = V / alpha`` and ``tau**2 = eps / alpha`` one step reads

    V'   = s * E[ d prox(m; s) / dm ]
    eps' = E[ (prox(m; s) - x0)**2 ],      m = x0 + tau z,

for Bernoulli-Gaussian ``x0``.  Conditioning on ``m`` reduces the average to
one-dimensional Gaussian integrals: a zero component has ``m ~ N(0, tau**2)``;
a nonzero one has ``m ~ N(0, tau**2 + sigma_x2)`` with
``x0 | m ~ N(kappa m, v_c)``.  Because the prox map is piecewise linear, all
integrals are closed-form partial Gaussian moments.

Everything here is vectorised over arrays of states so that grids (flow
fields, basins, multi-start searches) are evaluated in one pass.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .gauss import gaussian_moments
from ._io import text_sink
from .penalty import Family, PenaltySpec
from .replica import success_stable
from .schedule import ControlSchedule

SUCCESS_TOL = 1e-10
FIXED_POINT_TOL = 1e-12
DIVERGENCE = 1e8


class SeClass(str, enum.Enum):
    SUCCESS = "Success"
    FINITE = "FiniteFixedPoint"
    DIVERGED = "Diverged"
    MAX_ITERS = "MaxIters"
    INADMISSIBLE = "Inadmissible"


_CODES = list(SeClass)
_ACTIVE = -1


@dataclass(frozen=True)
class SePoint:
    V: float
    eps: float

    def as_tuple(self):
        return self.V, self.eps


@dataclass
class SeOutcome:
    classification: SeClass
    final: SePoint
    iters: int
    trace: list[SePoint] | None = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.classification in (SeClass.SUCCESS, SeClass.FINITE)


@dataclass(frozen=True)
class SeOptions:
    max_iters: int = 5000
    success_tol: float = SUCCESS_TOL
    fixed_point_tol: float = FIXED_POINT_TOL
    divergence: float = DIVERGENCE
    keep_trace: bool = False


class InadmissibleState(ValueError):
    pass


# -- the map -------------------------------------------------------------------

def admissible_mask(V, p: PenaltySpec, alpha: float):
    s = np.asarray(V, float) / alpha
    if p.family is Family.SCAD:
        return p.a > np.maximum(1.0, 1.0 + s)
    if p.family is Family.MCP:
        return p.a > np.maximum(1.0, s)
    return np.ones_like(s, dtype=bool)


def _pieces(p: PenaltySpec, s):
    """Vectorised prox pieces ``(lo, hi, slope, offset)`` on ``m > 0``."""
    lam, a = p.lam, p.a
    inf = np.full_like(s, np.inf)
    if p.family is Family.L1:
        return [(s * lam, inf, np.ones_like(s), -s * lam)]
    if p.family is Family.SCAD:
        k = (a - 1) / (a - 1 - s)
        return [(s * lam, lam * (1 + s), np.ones_like(s), -s * lam),
                (lam * (1 + s), np.full_like(s, a * lam), k, -k * s * a * lam / (a - 1)),
                (np.full_like(s, a * lam), inf, np.ones_like(s), np.zeros_like(s))]
    k = a / (a - s)
    return [(s * lam, np.full_like(s, a * lam), k, -k * s * lam),
            (np.full_like(s, a * lam), inf, np.ones_like(s), np.zeros_like(s))]


def se_map(V, eps, p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0):
    """One SE step on arrays.  Returns ``(V', eps', admissible)``.

    Inadmissible entries come back as NaN.
    """
    V, eps = np.broadcast_arrays(np.asarray(V, float), np.asarray(eps, float))
    adm = admissible_mask(V, p, alpha)
    s = np.where(adm, V / alpha, 0.0)
    tau2 = eps / alpha
    v_out = np.zeros_like(s)
    e_out = np.zeros_like(s)
    pieces = _pieces(p, s)
    for weight, sig2 in ((1.0 - rho, 0.0), (rho, sigma_x2)):
        if weight == 0.0:
            continue
        w2 = tau2 + sig2
        degenerate = w2 <= 0.0
        w2s = np.where(degenerate, 1.0, w2)
        width = np.sqrt(w2s)
        kappa = sig2 / w2s
        vc = sig2 * tau2 / w2s
        vp = np.zeros_like(s)
        ep = np.zeros_like(s)
        for lo, hi, c, d in pieces:
            i0, i1, i2 = gaussian_moments(lo, np.maximum(hi, lo), width)
            vp += 2.0 * s * c * i0
            k = c - kappa
            ep += 2.0 * (k * k * i2 + 2.0 * k * d * i1 + d * d * i0)
        _, _, i2 = gaussian_moments(np.zeros_like(s), s * p.lam, width)
        ep += 2.0 * kappa * kappa * i2 + vc
        # x0 = 0 and m = 0 surely: the estimate is exactly 0
        vp = np.where(degenerate, 0.0, vp)
        ep = np.where(degenerate, 0.0, ep)
        v_out += weight * vp
        e_out += weight * ep
    v_out = np.where(adm, v_out, np.nan)
    e_out = np.where(adm, e_out, np.nan)
    return v_out, e_out, adm


_GX, _GW = np.polynomial.legendre.leggauss(16)
_GX, _GW = [float(v) for v in _GX], [float(v) for v in _GW]
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _moments_scalar(lo: float, hi: float, width: float):
    """Scalar twin of :func:`gaussian_moments` (no numpy overhead)."""
    ul = lo / width
    if hi == math.inf:
        pl = math.exp(-0.5 * ul * ul) * _INV_SQRT2PI
        i0 = 0.5 * math.erfc(ul / math.sqrt(2.0))
        return i0, width * pl, width * width * (i0 + ul * pl)
    uh = hi / width
    if uh - ul < 1.0:
        half = 0.5 * (uh - ul)
        mid = 0.5 * (uh + ul)
        i0 = i1 = i2 = 0.0
        for x, w in zip(_GX, _GW):
            u = mid + half * x
            d = half * w * math.exp(-0.5 * u * u) * _INV_SQRT2PI
            i0 += d
            i1 += d * u
            i2 += d * u * u
        return i0, width * i1, width * width * i2
    pl = math.exp(-0.5 * ul * ul) * _INV_SQRT2PI
    ph = math.exp(-0.5 * uh * uh) * _INV_SQRT2PI
    i0 = 0.5 * (math.erfc(ul / math.sqrt(2.0)) - math.erfc(uh / math.sqrt(2.0)))
    return i0, width * (pl - ph), width * width * (i0 + ul * pl - uh * ph)


def _se_map_scalar(V: float, eps: float, p: PenaltySpec, alpha: float, rho: float,
                   sigma_x2: float):
    """Scalar SE step; returns ``None`` when inadmissible."""
    s = V / alpha
    lam, a = p.lam, p.a
    if p.family is Family.SCAD:
        if not a > max(1.0, 1.0 + s):
            return None
        k = (a - 1) / (a - 1 - s)
        pieces = ((s * lam, lam * (1 + s), 1.0, -s * lam),
                  (lam * (1 + s), a * lam, k, -k * s * a * lam / (a - 1)),
                  (a * lam, math.inf, 1.0, 0.0))
    elif p.family is Family.MCP:
        if not a > max(1.0, s):
            return None
        k = a / (a - s)
        pieces = ((s * lam, a * lam, k, -k * s * lam), (a * lam, math.inf, 1.0, 0.0))
    else:
        pieces = ((s * lam, math.inf, 1.0, -s * lam),)
    tau2 = eps / alpha
    v_out = e_out = 0.0
    for weight, sig2 in ((1.0 - rho, 0.0), (rho, sigma_x2)):
        w2 = tau2 + sig2
        if weight == 0.0 or w2 <= 0.0:
            continue
        width = math.sqrt(w2)
        kappa = sig2 / w2
        vp = ep = 0.0
        for lo, hi, c, d in pieces:
            i0, i1, i2 = _moments_scalar(lo, max(hi, lo), width)
            vp += 2.0 * s * c * i0
            kk = c - kappa
            ep += 2.0 * (kk * kk * i2 + 2.0 * kk * d * i1 + d * d * i0)
        if s > 0.0:
            ep += 2.0 * kappa * kappa * _moments_scalar(0.0, s * lam, width)[2]
        ep += sig2 * tau2 / w2
        v_out += weight * vp
        e_out += weight * ep
    return v_out, e_out


def se_step(pt: SePoint, p: PenaltySpec, alpha: float, rho: float,
            sigma_x2: float = 1.0) -> SePoint:
    """Single SE update.

    Raises:
        InadmissibleState: if ``a <= a_min`` at ``s = V / alpha``.
    """
    out = _se_map_scalar(float(pt.V), float(pt.eps), p, alpha, rho, sigma_x2)
    if out is None:
        raise InadmissibleState(f"{p} is inadmissible at V={pt.V!r}")
    return SePoint(*out)


# -- iteration -------------------------------------------------------------------

def se_run_many(V0, eps0, p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0,
                opts: SeOptions = SeOptions()):
    """Iterate many starts in lockstep.

    Returns ``(codes, V, eps, iters)`` where ``codes`` index ``list(SeClass)``.
    A trajectory that leaves the admissible region is ``Diverged``; only an
    inadmissible start is ``Inadmissible``.
    """
    V = np.array(V0, dtype=float, copy=True).ravel()
    E = np.array(eps0, dtype=float, copy=True).ravel()
    V, E = np.broadcast_arrays(V, E)
    V, E = V.copy(), E.copy()
    code = np.full(V.shape, _ACTIVE)
    iters = np.zeros(V.shape, dtype=int)
    code[~admissible_mask(V, p, alpha)] = _CODES.index(SeClass.INADMISSIBLE)
    done_s = (code == _ACTIVE) & (V <= opts.success_tol) & (E <= opts.success_tol)
    code[done_s] = _CODES.index(SeClass.SUCCESS)
    for t in range(1, opts.max_iters + 1):
        act = np.flatnonzero(code == _ACTIVE)
        if act.size == 0:
            break
        vn, en, adm = se_map(V[act], E[act], p, alpha, rho, sigma_x2)
        iters[act] = t
        bad = ~adm | ~np.isfinite(vn) | ~np.isfinite(en) | (vn > opts.divergence) | (en > opts.divergence)
        succ = ~bad & (vn <= opts.success_tol) & (en <= opts.success_tol)
        scale = opts.fixed_point_tol * np.maximum(vn, en)   # relative: no false stops near 0
        fixed = ~bad & ~succ & (np.abs(vn - V[act]) < scale) & (np.abs(en - E[act]) < scale)
        keep = ~bad
        V[act[keep]] = vn[keep]
        E[act[keep]] = en[keep]
        code[act[bad]] = _CODES.index(SeClass.DIVERGED)
        code[act[succ]] = _CODES.index(SeClass.SUCCESS)
        code[act[fixed]] = _CODES.index(SeClass.FINITE)
    code[code == _ACTIVE] = _CODES.index(SeClass.MAX_ITERS)
    return code, V, E, iters


def se_run(start: SePoint, p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0,
           opts: SeOptions = SeOptions()) -> SeOutcome:
    """Iterate SE from ``start`` until it is classified."""
    V, E = float(start.V), float(start.eps)
    trace = [SePoint(V, E)] if opts.keep_trace else None
    if not bool(admissible_mask(V, p, alpha)):
        return SeOutcome(SeClass.INADMISSIBLE, SePoint(V, E), 0, trace, "start is inadmissible")
    if V <= opts.success_tol and E <= opts.success_tol:
        return SeOutcome(SeClass.SUCCESS, SePoint(V, E), 0, trace)
    for t in range(1, opts.max_iters + 1):
        nxt = _se_map_scalar(V, E, p, alpha, rho, sigma_x2)
        if nxt is None:
            return SeOutcome(SeClass.DIVERGED, SePoint(V, E), t, trace, "admissibility")
        vn, en = nxt
        if not (math.isfinite(vn) and math.isfinite(en)) or max(vn, en) > opts.divergence:
            return SeOutcome(SeClass.DIVERGED, SePoint(vn, en), t, trace, "unbounded")
        if trace is not None:
            trace.append(SePoint(vn, en))
        if vn <= opts.success_tol and en <= opts.success_tol:
            return SeOutcome(SeClass.SUCCESS, SePoint(vn, en), t, trace)
        scale = opts.fixed_point_tol * max(vn, en)
        if abs(vn - V) < scale and abs(en - E) < scale:
            return SeOutcome(SeClass.FINITE, SePoint(vn, en), t, trace)
        V, E = vn, en
    return SeOutcome(SeClass.MAX_ITERS, SePoint(V, E), opts.max_iters, trace)


def se_trajectory(start: SePoint, schedule: ControlSchedule, family, alpha: float,
                  rho: float, sigma_x2: float = 1.0, n_iters: int | None = None):
    """SE under a control schedule, one entry per iteration (AMP-aligned).

    Returns a list of ``(t, penalty, SePoint)``; stops early on divergence.
    """
    n_iters = n_iters or schedule.scheduled_steps
    out = []
    V, E = start.V, start.eps
    for t, pen, _ in schedule.iter_steps(family, n_iters):
        nxt = _se_map_scalar(V, E, pen, alpha, rho, sigma_x2)
        if nxt is None or not (math.isfinite(nxt[0]) and math.isfinite(nxt[1])):
            break
        V, E = nxt
        out.append((t, pen, SePoint(V, E)))
    return out


# -- fixed points and their stability ---------------------------------------------

def jacobian(pt: SePoint, p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0,
             rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the SE map at ``pt``."""
    hv = rel_step * max(pt.V, 1e-8)
    he = rel_step * max(pt.eps, 1e-12)
    V = np.array([pt.V + hv, pt.V - hv, pt.V, pt.V])
    E = np.array([pt.eps, pt.eps, pt.eps + he, pt.eps - he])
    v, e, _ = se_map(V, E, p, alpha, rho, sigma_x2)
    return np.array([[(v[0] - v[1]) / (2 * hv), (v[2] - v[3]) / (2 * he)],
                     [(e[0] - e[1]) / (2 * hv), (e[2] - e[3]) / (2 * he)]])


def spectral_radius(pt: SePoint, p, alpha, rho, sigma_x2=1.0) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(jacobian(pt, p, alpha, rho, sigma_x2)))))


@dataclass(frozen=True)
class FixedPoint:
    V: float
    eps: float
    spectral_radius: float

    @property
    def stable(self) -> bool:
        return self.spectral_radius < 1.0

    @property
    def point(self) -> SePoint:
        return SePoint(self.V, self.eps)


def _v_ceiling(p: PenaltySpec, alpha: float) -> float:
    if p.family is Family.SCAD:
        return alpha * (p.a - 1)
    if p.family is Family.MCP:
        return alpha * p.a
    return math.inf


def newton_fixed_points(V0, eps0, p: PenaltySpec, alpha: float, rho: float,
                        sigma_x2: float = 1.0, iters: int = 80, tol: float = 1e-13):
    """Vectorised Newton on ``(V, log eps)`` for ``map(x) = x``.

    Returns arrays ``(V, eps, converged)``.
    """
    V = np.array(V0, float).ravel().copy()
    u = np.log(np.maximum(np.array(eps0, float).ravel(), 1e-300))
    V, u = np.broadcast_arrays(V, u)
    V, u = V.copy(), u.copy()
    vmax = _v_ceiling(p, alpha) * (1 - 1e-9)
    ok = np.zeros(V.shape, bool)
    live = np.ones(V.shape, bool)
    for _ in range(iters):
        idx = np.flatnonzero(live & ~ok)
        if idx.size == 0:
            break
        v, uu = V[idx], u[idx]
        hv = 1e-7 * np.maximum(v, 1e-8)
        hu = 1e-7
        vv = np.concatenate([v, v + hv, v])
        ee = np.exp(np.concatenate([uu, uu, uu + hu]))
        mv, me, adm = se_map(vv, ee, p, alpha, rho, sigma_x2)
        n = idx.size
        with np.errstate(divide="ignore", invalid="ignore"):
            f1 = mv - vv
            f2 = np.log(me) - np.log(ee)
        r1, r2 = f1[:n], f2[:n]
        j11 = (f1[n:2 * n] - r1) / hv
        j21 = (f2[n:2 * n] - r2) / hv
        j12 = (f1[2 * n:] - r1) / hu
        j22 = (f2[2 * n:] - r2) / hu
        det = j11 * j22 - j12 * j21
        dv = -(j22 * r1 - j12 * r2) / det
        du = -(-j21 * r1 + j11 * r2) / det
        fine = np.isfinite(dv) & np.isfinite(du) & adm[:n] & adm[n:2 * n] & adm[2 * n:]
        live[idx[~fine]] = False
        conv = fine & (np.abs(r1) <= tol + 1e-11 * v) & (np.abs(r2) <= 1e-11)
        ok[idx[conv]] = True
        step = fine & ~conv
        # limit the step so iterates stay inside the admissible strip
        dv = np.clip(dv, -0.5 * v, 0.5 * (vmax - v))
        du = np.clip(du, -3.0, 3.0)
        V[idx[step]] = v[step] + dv[step]
        u[idx[step]] = uu[step] + du[step]
        live &= (V > 1e-14) & (u > math.log(1e-300)) & (u < math.log(1e8))
    return V, np.exp(u), ok & live


def find_fixed_points(p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0,
                      n_seeds: int = 14, seeds=None) -> list[FixedPoint]:
    """All distinct fixed points with ``V > 0`` reachable by Newton from a seed grid."""
    if seeds is None:
        vtop = min(_v_ceiling(p, alpha), 4.0 * max(rho, 0.05) / alpha)
        vs = np.linspace(0.02, 0.98, n_seeds) * vtop
        es = np.geomspace(1e-6, 2.0 * sigma_x2, n_seeds)
        gv, ge = np.meshgrid(vs, es)
        seeds = (gv.ravel(), ge.ravel())
    V, E, ok = newton_fixed_points(seeds[0], seeds[1], p, alpha, rho, sigma_x2)
    found: list[FixedPoint] = []
    for v, e in zip(V[ok], E[ok]):
        if v <= 1e-9:
            continue
        if any(abs(v - f.V) <= 1e-7 * max(1, v) and abs(e - f.eps) <= 1e-7 * max(e, 1e-12)
               for f in found):
            continue
        pt = SePoint(float(v), float(e))
        found.append(FixedPoint(pt.V, pt.eps, spectral_radius(pt, p, alpha, rho, sigma_x2)))
    found.sort(key=lambda f: (f.V, f.eps))
    return found


def polish_fixed_point(pt: SePoint, p: PenaltySpec, alpha: float, rho: float,
                       sigma_x2: float = 1.0) -> SePoint | None:
    """Newton-refine an approximate fixed point; ``None`` if it does not converge."""
    V, E, ok = newton_fixed_points([pt.V], [pt.eps], p, alpha, rho, sigma_x2)
    if not ok[0]:
        return None
    return SePoint(float(V[0]), float(E[0]))


# -- grids ------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Cell-centred rectangle ``[v_lo, v_hi] x [e_lo, e_hi]`` with ``nv x ne`` cells."""

    v_hi: float
    e_hi: float
    nv: int = 50
    ne: int = 50
    v_lo: float = 0.0
    e_lo: float = 0.0
    spacing: str = "linear"

    def __post_init__(self):
        if self.nv < 1 or self.ne < 1:
            raise ValueError("grid counts must be positive")
        if not (self.v_hi > self.v_lo and self.e_hi > self.e_lo):
            raise ValueError("grid ranges must be non-empty")
        if self.spacing not in ("linear", "log"):
            raise ValueError("spacing must be 'linear' or 'log'")
        if self.spacing == "log" and (self.v_lo <= 0 or self.e_lo <= 0):
            raise ValueError("log spacing needs positive lower bounds")

    def _axis(self, lo, hi, n):
        if self.spacing == "linear":
            edges = np.linspace(lo, hi, n + 1)
            return 0.5 * (edges[:-1] + edges[1:]), np.diff(edges)
        edges = np.geomspace(lo, hi, n + 1)
        return np.sqrt(edges[:-1] * edges[1:]), np.diff(edges)

    def nodes(self):
        """``(V, eps, cell_area)`` arrays of shape ``(ne, nv)``."""
        v, dv = self._axis(self.v_lo, self.v_hi, self.nv)
        e, de = self._axis(self.e_lo, self.e_hi, self.ne)
        gv, ge = np.meshgrid(v, e)
        area = np.outer(de, dv)
        return gv, ge, area

    @property
    def area(self) -> float:
        return (self.v_hi - self.v_lo) * (self.e_hi - self.e_lo)


def default_grid(alpha: float, rho: float, sigma_x2: float = 1.0, n: int = 50) -> GridSpec:
    return GridSpec(v_hi=2 * rho / alpha, e_hi=2 * rho * sigma_x2, nv=n, ne=n)


@dataclass
class FlowField:
    V: np.ndarray
    eps: np.ndarray
    dV: np.ndarray
    deps: np.ndarray
    admissible: np.ndarray

    def direction(self):
        norm = np.hypot(self.dV, self.deps)
        with np.errstate(invalid="ignore", divide="ignore"):
            return (np.where(norm > 0, self.dV / norm, 0.0),
                    np.where(norm > 0, self.deps / norm, 0.0))

    def rows(self):
        for v, e, dv, de, ad in zip(self.V.ravel(), self.eps.ravel(), self.dV.ravel(),
                                    self.deps.ravel(), self.admissible.ravel()):
            yield float(v), float(e), float(dv), float(de), bool(ad)

    def write_csv(self, path) -> None:
        with text_sink(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["V", "eps", "dV", "deps", "admissible"])
            for v, e, dv, de, ad in self.rows():
                w.writerow([_g(v), _g(e), _g(dv), _g(de), int(ad)])


def flow_field(grid: GridSpec, p: PenaltySpec, alpha: float, rho: float,
               sigma_x2: float = 1.0, include_origin: bool = False) -> FlowField:
    """One SE displacement per grid node; inadmissible nodes carry NaN."""
    gv, ge, _ = grid.nodes()
    if include_origin:
        gv, ge = np.append(0.0, gv.ravel()), np.append(0.0, ge.ravel())
    vn, en, adm = se_map(gv, ge, p, alpha, rho, sigma_x2)
    return FlowField(gv, ge, vn - gv, en - ge, adm)


@dataclass
class BasinMap:
    grid: GridSpec
    classes: np.ndarray   # object array of SeClass, shape (ne, nv)
    volume: float
    eps_max: float
    params: dict = field(default_factory=dict)

    @property
    def success_fraction(self) -> float:
        return self.volume / self.grid.area

    def write_csv(self, path) -> None:
        gv, ge, _ = self.grid.nodes()
        with text_sink(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["V0", "eps0", "class"])
            for v, e, c in zip(gv.ravel(), ge.ravel(), self.classes.ravel()):
                w.writerow([_g(v), _g(e), c.value])

    def summary(self) -> dict:
        return {"volume": self.volume, "eps_max": self.eps_max,
                "grid": asdict(self.grid), "params": self.params}

    def write_json(self, path) -> None:
        with text_sink(path) as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def basin_map(grid: GridSpec, p: PenaltySpec, alpha: float, rho: float,
              sigma_x2: float = 1.0, opts: SeOptions = SeOptions()) -> BasinMap:
    """Classify every grid node by its SE fate.

    ``volume`` is the area of Success cells; ``eps_max`` the largest initial
    eps among them (0 when there are none).
    """
    gv, ge, area = grid.nodes()
    codes, _, _, _ = se_run_many(gv, ge, p, alpha, rho, sigma_x2, opts)
    codes = codes.reshape(gv.shape)
    classes = np.empty(gv.shape, dtype=object)
    for i, c in enumerate(_CODES):
        classes[codes == i] = c
    succ = codes == _CODES.index(SeClass.SUCCESS)
    volume = float(area[succ].sum())
    eps_max = float(ge[succ].max()) if succ.any() else 0.0
    params = {"family": p.family.value, "lambda": p.lam, "a": p.a, "alpha": alpha,
              "rho": rho, "sigma_x2": sigma_x2}
    return BasinMap(grid, classes, volume, eps_max, params)


# -- continuation in lambda -----------------------------------------------------------

MARGINAL_DROP = 0.5   # continuation only


def _creeping_to_origin(pt: SePoint, prev: SePoint, p, alpha, rho, sigma_x2) -> bool:
    """True when a stalled run is still contracting toward V = eps = 0."""
    if not (np.isfinite(pt.V) and 0 < pt.V < MARGINAL_DROP * prev.V):
        return False
    try:
        nxt = se_step(pt, p, alpha, rho, sigma_x2)
    except InadmissibleState:
        return False
    return nxt.V < pt.V and nxt.eps <= pt.eps


@dataclass
class ContinuationPoint:
    lam: float
    outcome: SeOutcome
    gap: bool
    how: str = ""   # warm, newton, search or extended


@dataclass
class Continuation:
    points: list[ContinuationPoint]
    family: Family
    a: float
    alpha: float
    rho: float

    @property
    def reached_success(self) -> bool:
        return bool(self.points) and self.points[-1].outcome.classification is SeClass.SUCCESS

    @property
    def has_gap(self) -> bool:
        return any(pt.gap for pt in self.points)

    def gap_intervals(self) -> list[tuple[float, float]]:
        """Maximal runs of gap-flagged lambdas as ``(upper, lower)`` pairs."""
        runs, cur = [], None
        for pt in self.points:
            if pt.gap:
                cur = (pt.lam, pt.lam) if cur is None else (cur[0], pt.lam)
            elif cur is not None:
                runs.append(cur)
                cur = None
        if cur is not None:
            runs.append(cur)
        return runs

    def write_csv(self, path) -> None:
        with text_sink(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "V", "eps", "class", "gap_flag"])
            for pt in self.points:
                f = pt.outcome.final
                w.writerow([_g(pt.lam), _g(f.V), _g(f.eps), pt.outcome.classification.value,
                            int(pt.gap)])


def fixed_point_continuation(lambdas: Sequence[float], a: float, family, alpha: float,
                             rho: float, sigma_x2: float = 1.0, start: SePoint | None = None,
                             opts: SeOptions = SeOptions(), search: bool = True,
                             stop_on_gap: bool = False,
                             stop_on_success: bool = False, extend: int = 40) -> Continuation:
    """Follow the SE fixed point while lambda decreases.

    Each lambda warm-starts from the previous accepted state.  When warm
    iteration fails, a Newton multi-start search looks for a stable
    admissible fixed point before the lambda is flagged as a gap.
    """
    family = Family.parse(family)
    lams = [float(x) for x in lambdas]
    if any(b >= a_ for a_, b in zip(lams[:-1], lams[1:])):
        raise ValueError("lambda path must be strictly decreasing")
    cur = start or SePoint(rho / alpha, rho / alpha)
    pts: list[ContinuationPoint] = []
    for lam in lams:
        p = PenaltySpec(family, lam, a if family is not Family.L1 else math.inf)
        out = se_run(cur, p, alpha, rho, sigma_x2, opts)
        how = "warm"
        if out.classification is SeClass.FINITE:
            pol = polish_fixed_point(out.final, p, alpha, rho, sigma_x2)
            if pol is not None:
                out.final = pol
        elif out.classification is SeClass.MAX_ITERS:
            pol = polish_fixed_point(out.final, p, alpha, rho, sigma_x2)
            if pol is not None and spectral_radius(pol, p, alpha, rho, sigma_x2) < 1:
                out = SeOutcome(SeClass.FINITE, pol, out.iters, reason="newton")
                how = "newton"
        if not out.ok and search:
            stable = [f for f in find_fixed_points(p, alpha, rho, sigma_x2) if f.stable]
            if stable:
                best = min(stable, key=lambda f: abs(math.log(f.eps / max(cur.eps, 1e-300))))
                out = SeOutcome(SeClass.FINITE, best.point, out.iters, reason="search")
                how = "search"
        if out.classification is SeClass.MAX_ITERS and extend > 1:
            # critical slowing (e.g. a branch merging into success): keep iterating
            more = replace(opts, max_iters=opts.max_iters * (extend - 1))
            nxt = se_run(out.final, p, alpha, rho, sigma_x2, more)
            nxt.iters += out.iters
            out, how = nxt, "extended"
        creeping = (out.classification is SeClass.MAX_ITERS
                    and _creeping_to_origin(out.final, cur, p, alpha, rho, sigma_x2))
        if creeping and success_stable(p, alpha, rho, sigma_x2):
            # branch merging into a barely stable success point: the approach is
            # algebraically slow but the destination is not in doubt
            out = SeOutcome(SeClass.SUCCESS, out.final, out.iters, reason="marginal")
            how = "marginal"
        # creeping without a success root yet: the merger falls between grid lambdas
        gap = not out.ok and not creeping
        if out.ok:
            cur = out.final
        elif out.classification is SeClass.MAX_ITERS and np.isfinite(out.final.V):
            # slow but bounded: keep the last iterate as the next warm start
            cur = out.final
        pts.append(ContinuationPoint(lam, out, gap, how))
        if (gap and stop_on_gap) or (stop_on_success and out.classification is SeClass.SUCCESS):
            break
    return Continuation(pts, family, a, alpha, rho)


def _g(x: float) -> str:
    return format(float(x), ".17g")
