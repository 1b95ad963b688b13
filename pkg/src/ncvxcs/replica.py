"""Replica-symmetric saddle point, success solution and phase boundaries.

Order parameters ``(Q, chi, m)`` and conjugates ``(Qt, chit, mt)`` with
``Qt = mt = alpha / chi`` and ``chit = alpha (Q - 2m + rho sigma_x2) / chi**2``.
The field strength takes ``sigma_- = sqrt(chit)`` with probability
``1 - rho`` and ``sigma_+ = sqrt(chit + mt**2 sigma_x2)`` with probability
``rho``.

The Omega update is written in terms of ``s = 1/Qt``.  Dividing every
threshold by ``Qt`` turns ``theta_i(sigma)`` into ``u_i / (sqrt(2) tau)`` with
prox-scale thresholds ``u_i`` and width ``tau = s sigma``.  In that form the
equations stay finite as ``chi -> 0``, which is where the success solution
lives.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .gauss import SQRT_PI, SigmaMixture, erfc
from .penalty import AdmissibilityError, Family, PenaltySpec, a_min

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
A_CAP = 1e6
LAMBDA_CAP = 1e6
# smallest a probed by boundary searches; the closed forms cancel badly as a -> 1
A_FLOOR = 1.0 + 1e-4


class SaddleError(RuntimeError):
    pass


class BracketError(SaddleError):
    def __init__(self, msg, history=()):
        super().__init__(msg)
        self.history = list(history)


# -- xi functions (free-energy pieces) ---------------------------------------------

def xi_scad(qt: float, sigma: float, p: PenaltySpec) -> float:
    """``xi(Qt, sigma) = 2 E_z L(Qt, sigma z)`` for SCAD."""
    lam, a = p.lam, p.a
    if not qt > 1.0 / (a - 1):
        raise AdmissibilityError(a, a_min(p, 1.0 / qt), "xi_scad")
    if sigma == 0.0:
        return 0.0
    t1 = lam / (SQRT2 * sigma)
    t2 = lam * (1 + qt) / (SQRT2 * sigma)
    t3 = a * lam * qt / (SQRT2 * sigma)
    e1, e2, e3 = math.exp(-t1 * t1), math.exp(-t2 * t2), math.exp(-t3 * t3)
    c = 1.0 / (qt * (a - 1))
    x4 = erfc(t2) - erfc(t3)
    x1 = sigma ** 2 / qt * (-2 * t1 / SQRT_PI * (e1 + (qt - 1) * e2)
                            + (1 + 2 * t1 * t1) * (erfc(t1) - erfc(t2)))
    x2 = sigma ** 2 / (qt - 1 / (a - 1)) * (
        2 / SQRT_PI * (t2 * e2 - t3 * e3 - 2 * t3 * c * (e2 - e3))
        + (1 + 2 * (t3 * c) ** 2) * x4)
    x3 = sigma ** 2 / qt * (2 * t3 / SQRT_PI * e3 + erfc(t3))
    neg = x1 + x2 + x3 + lam ** 2 * x4 / (a - 1) - (a + 1) * lam ** 2 * erfc(t3)
    return -neg


def xi_mcp(qt: float, sigma: float, p: PenaltySpec) -> float:
    """``xi(Qt, sigma)`` for MCP (large-field constant ``-a lam**2``)."""
    lam, a = p.lam, p.a
    if not qt > 1.0 / a:
        raise AdmissibilityError(a, a_min(p, 1.0 / qt), "xi_mcp")
    if sigma == 0.0:
        return 0.0
    t1 = lam / (SQRT2 * sigma)
    t2 = a * lam * qt / (SQRT2 * sigma)
    e1, e2 = math.exp(-t1 * t1), math.exp(-t2 * t2)
    x3 = erfc(t1) - erfc(t2)
    d = qt - 1 / a
    x1 = (-2 * sigma ** 2 / (SQRT_PI * d) * (t1 * (e1 - e2) - e2 * (t1 - t2))
          + (sigma ** 2 + lam ** 2) * x3 / d)
    x2 = sigma ** 2 / qt * (2 * t2 / SQRT_PI * e2 + erfc(t2)) - a * lam ** 2 * erfc(t2)
    return -(x1 + x2)


def xi_l1(qt: float, sigma: float, p: PenaltySpec) -> float:
    if sigma == 0.0:
        return 0.0
    t1 = p.lam / (SQRT2 * sigma)
    return -((sigma ** 2 + p.lam ** 2) * erfc(t1)
             - 2 * sigma ** 2 * t1 * math.exp(-t1 * t1) / SQRT_PI) / qt


def xi(qt: float, sigma: float, p: PenaltySpec) -> float:
    return {Family.SCAD: xi_scad, Family.MCP: xi_mcp, Family.L1: xi_l1}[p.family](qt, sigma, p)


# -- the Omega update --------------------------------------------------------------

@dataclass(frozen=True)
class OmegaUpdate:
    Q: float
    chi: float
    m: float
    rho_hat: float
    at_lhs: float


def omega_update(s: float, chit: float, p: PenaltySpec, alpha: float, rho: float,
                 sigma_x2: float = 1.0) -> OmegaUpdate:
    """Evaluate ``(Q, chi, m)``, ``rho_hat`` and the AT left-hand side.

    ``s = 1/Qt = chi/alpha`` and ``chit >= 0``.  ``s = 0`` gives the limit at
    the success point.
    """
    lam = p.lam
    if p.family is Family.SCAD:
        c = 1.0 / (p.a - 1)
        bounds = (s * lam, lam * (1 + s), p.a * lam)
    elif p.family is Family.MCP:
        c = 1.0 / p.a
        bounds = (s * lam, p.a * lam)
    else:
        c = 0.0
        bounds = (s * lam,)
    if not c * s < 1.0:
        raise AdmissibilityError(p.a, a_min(p, s), "omega_update")
    k = 1.0 / (1.0 - c * s)
    k2 = k * k
    k_ratio = c * s * k    # (1/(a-1)) / (Qt - 1/(a-1)) and its MCP analogue

    def per_sigma(tau: float, theta1: float):
        """Return (Q-part, rho_hat-part, band-part) for one field width."""
        if tau == 0.0:
            th = [theta1] + [math.inf] * (len(bounds) - 1)
        else:
            th = [b / (SQRT2 * tau) for b in bounds]
            th[0] = theta1
        e = [tau * math.exp(-t * t) if math.isfinite(t) else 0.0 for t in th]
        erf_c = [erfc(t) if math.isfinite(t) else 0.0 for t in th]
        g = math.sqrt(2.0 / math.pi)
        u1 = bounds[0]
        rh = erf_c[0]
        if p.family is Family.L1:
            q = (tau ** 2 + u1 ** 2) * erf_c[0] - g * u1 * e[0]
            return q, rh, 0.0
        if p.family is Family.SCAD:
            u2, u3 = bounds[1], bounds[2]
            x4 = erf_c[1] - erf_c[2]
            q1 = (tau ** 2 + u1 ** 2) * (erf_c[0] - erf_c[1]) - g * (u1 * e[0] + lam * (1 - s) * e[1])
            q2 = k2 * (g * (u2 * e[1] - u3 * e[2] - 2 * u3 * c * s * (e[1] - e[2]))
                       + (tau ** 2 + (u3 * c * s) ** 2) * x4)
            q3 = g * u3 * e[2] + tau ** 2 * erf_c[2]
            return q1 + q2 + q3, rh, x4
        u2 = bounds[1]
        x3 = erf_c[0] - erf_c[1]
        q1 = k2 * (-g * (u1 * e[0] - 2 * u1 * e[1] + u2 * e[1]) + (tau ** 2 + u1 ** 2) * x3)
        q2 = g * u2 * e[1] + tau ** 2 * erf_c[1]
        return q1 + q2, rh, x3

    # sigma_-: tau = s sqrt(chit), theta_1 = lam / sqrt(2 chit)
    tau_m = s * math.sqrt(chit)
    th1_m = lam / math.sqrt(2 * chit) if chit > 0 else math.inf
    # sigma_+: tau = sqrt(chit s^2 + sigma_x2)
    tau_p = math.sqrt(chit * s * s + sigma_x2)
    th1_p = s * lam / (SQRT2 * tau_p)
    qm, rm, bm = per_sigma(tau_m, th1_m)
    qp, rp, bp = per_sigma(tau_p, th1_p)
    mix = lambda a_, b_: (1 - rho) * a_ + rho * b_
    Q = mix(qm, qp)
    rho_hat = mix(rm, rp)
    band = mix(bm, bp)
    chi = s * (rho_hat + k_ratio * band)
    m = rho * sigma_x2 * (rp + k_ratio * bp)
    at = (rho_hat + (k2 - 1.0) * band) / alpha
    return OmegaUpdate(Q, chi, m, rho_hat, at)


# -- saddle-point solver -----------------------------------------------------------

@dataclass
class SaddleSolution:
    Q: float
    chi: float
    m: float
    Qt: float
    chit: float
    mt: float
    rho_hat: float
    eps: float
    at_lhs: float
    converged: bool
    status: str = "converged"
    sweeps: int = 0
    alpha: float = float("nan")
    rho: float = float("nan")
    sigma_x2: float = 1.0

    @property
    def is_success(self) -> bool:
        return self.status == "success"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SaddleOptions:
    damping: float = 0.5
    tol: float = 1e-12
    max_sweeps: int = 100_000
    divergence: float = 1e8
    success_chi: float = 1e-11
    inadmissible_patience: int = 200


def success_point(rho: float, sigma_x2: float = 1.0, t: float = 0.0):
    """``(Q, chi, m)`` at (or ``t`` away from) the success solution."""
    return rho * sigma_x2 + t, t, rho * sigma_x2


def _conjugates(Q, chi, m, alpha, rho, sigma_x2):
    eps = max(Q - 2 * m + rho * sigma_x2, 0.0)
    return eps, alpha / chi, alpha * eps / chi ** 2


def solve_saddle(p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0,
                 init=None, opts: SaddleOptions = SaddleOptions()) -> SaddleSolution:
    """Damped fixed-point iteration of the RS equations.

    ``init`` is ``(Q, chi, m)`` or a :class:`SaddleSolution`; the default
    starts from the zero estimator (``Q = m = 0``, ``chi = rho sigma_x2``).
    Conjugates are updated first, then ``(Q, chi, m)`` from the closed forms.
    The success solution is recognised when ``chi`` and ``eps`` both vanish.
    """
    if init is None:
        Q, chi, m = 0.0, max(rho * sigma_x2, 1e-3), 0.0
    elif isinstance(init, SaddleSolution):
        Q, chi, m = init.Q, init.chi, init.m
    else:
        Q, chi, m = (float(v) for v in init)
    if not all(math.isfinite(v) for v in (Q, chi, m)) or chi < 0:
        raise ValueError("initial order parameters must be finite with chi >= 0")
    g = opts.damping
    if not 0 < g <= 1:
        raise ValueError("damping must lie in (0, 1]")
    s_cap = _s_cap(p)
    projected = 0
    upd = None
    for sweep in range(1, opts.max_sweeps + 1):
        eps = max(Q - 2 * m + rho * sigma_x2, 0.0)
        if chi <= opts.success_chi and eps <= opts.success_chi:
            return _success_as_saddle(p, alpha, rho, sigma_x2, sweep)
        s = chi / alpha
        chit = alpha * eps / chi ** 2 if chi > 0 else 0.0
        if s >= s_cap:
            s = s_cap / (1 + 1e-9)
            projected += 1
            if projected >= opts.inadmissible_patience:
                return _failed(Q, chi, m, alpha, rho, sigma_x2, "inadmissible", sweep)
        else:
            projected = 0
        upd = omega_update(s, chit, p, alpha, rho, sigma_x2)
        nQ = g * upd.Q + (1 - g) * Q
        nchi = g * upd.chi + (1 - g) * chi
        nm = g * upd.m + (1 - g) * m
        if not all(math.isfinite(v) for v in (nQ, nchi, nm)) or max(nQ, nchi) > opts.divergence \
                or eps > opts.divergence:
            return _failed(nQ, nchi, nm, alpha, rho, sigma_x2, "diverged", sweep)
        change = max(abs(nQ - Q), abs(nchi - chi), abs(nm - m))
        Q, chi, m = nQ, nchi, nm
        if change < opts.tol:
            break
    else:
        return _finish(Q, chi, m, p, alpha, rho, sigma_x2, False, "max_sweeps", opts.max_sweeps)
    return _finish(Q, chi, m, p, alpha, rho, sigma_x2, True, "converged", sweep)


def _s_cap(p: PenaltySpec) -> float:
    if p.family is Family.SCAD:
        return p.a - 1
    if p.family is Family.MCP:
        return p.a
    return math.inf


def _finish(Q, chi, m, p, alpha, rho, sigma_x2, converged, status, sweeps) -> SaddleSolution:
    eps = max(Q - 2 * m + rho * sigma_x2, 0.0)
    if chi <= 0:
        return _success_as_saddle(p, alpha, rho, sigma_x2, sweeps)
    s = chi / alpha
    chit = alpha * eps / chi ** 2
    upd = omega_update(s, chit, p, alpha, rho, sigma_x2)
    if converged and not s < _s_cap(p):
        converged, status = False, "inadmissible"
    return SaddleSolution(Q, chi, m, alpha / chi, chit, alpha / chi, upd.rho_hat, eps,
                          upd.at_lhs, converged, status, sweeps, alpha, rho, sigma_x2)


def _failed(Q, chi, m, alpha, rho, sigma_x2, status, sweeps) -> SaddleSolution:
    eps = Q - 2 * m + rho * sigma_x2
    qt = alpha / chi if chi > 0 else math.inf
    chit = alpha * eps / chi ** 2 if chi > 0 else math.nan
    return SaddleSolution(Q, chi, m, qt, chit, qt, math.nan, eps, math.nan, False, status,
                          sweeps, alpha, rho, sigma_x2)


def _success_as_saddle(p, alpha, rho, sigma_x2, sweeps) -> SaddleSolution:
    try:
        suc = solve_success(p, alpha, rho, sigma_x2)
    except BracketError:
        return SaddleSolution(rho * sigma_x2, 0.0, rho * sigma_x2, math.inf, math.nan, math.inf,
                              math.nan, 0.0, math.nan, False, "success_without_chit", sweeps,
                              alpha, rho, sigma_x2)
    upd = omega_update(0.0, suc.chit, p, alpha, rho, sigma_x2)
    return SaddleSolution(rho * sigma_x2, 0.0, rho * sigma_x2, math.inf, suc.chit, math.inf,
                          upd.rho_hat, 0.0, upd.at_lhs, True, "success", sweeps,
                          alpha, rho, sigma_x2)


def at_condition_general(sol: SaddleSolution, p: PenaltySpec) -> float:
    """AT left-hand side for a (converged) saddle solution; ``< 1`` is stable."""
    s = 0.0 if sol.chi <= 0 else sol.chi / sol.alpha
    return omega_update(s, sol.chit, p, sol.alpha, sol.rho, sol.sigma_x2).at_lhs


def sigma_mixture(sol: SaddleSolution) -> SigmaMixture:
    return SigmaMixture.from_conjugates(sol.rho, sol.chit, sol.mt, sol.sigma_x2)


# -- success solution -----------------------------------------------------------------

@dataclass
class SuccessSolution:
    chit: float
    theta_minus: float
    theta_plus: float
    stable: bool
    stability_lhs: float
    method: str = ""


def success_g_closed(p: PenaltySpec, sigma_x2: float = 1.0) -> float:
    """Signal part of the success equation in the published closed form.

    Kept as a cross-check: for SCAD it cancels catastrophically as ``a -> 1``.
    """
    lam = p.lam
    tp = lam / math.sqrt(2 * sigma_x2)
    if p.family is Family.L1:
        return lam ** 2
    a = p.a
    if p.family is Family.SCAD:
        return (lam ** 2 * (1 - erfc(tp))
                + ((a * lam / (a - 1)) ** 2 + sigma_x2 / (a - 1) ** 2) * (erfc(tp) - erfc(a * tp))
                + 2 * sigma_x2 * tp / (SQRT_PI * (a - 1))
                * (a / (a - 1) * (math.exp(-a * a * tp * tp) - math.exp(-tp * tp))
                   - math.exp(-tp * tp)))
    return ((lam ** 2 + sigma_x2 / a ** 2) * (1 - erfc(a * tp))
            + 2 * sigma_x2 * tp / (a * SQRT_PI) * math.exp(-a * a * tp * tp)
            - 4 * sigma_x2 * tp / (a * SQRT_PI))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _band_square(lo: float, hi: float, centre: float, sigma: float) -> float:
    """``E[(|x| - centre)**2; lo < |x| <= hi]`` for ``x ~ N(0, sigma**2)``."""
    hi = min(hi, 40.0 * sigma)   # the density is below 1e-340 beyond
    if hi <= lo:
        return 0.0
    n = max(1, math.ceil((hi - lo) / sigma))
    edges = np.linspace(lo, hi, n + 1)
    half = 0.5 * np.diff(edges)[:, None]
    x = 0.5 * (edges[:-1] + edges[1:])[:, None] + half * _GL_X
    dens = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    return float(2.0 * np.sum(half * _GL_W * (x - centre) ** 2 * dens))


def _success_g(p: PenaltySpec, sigma_x2: float) -> float:
    """Signal part of the success equation, as a band expectation.

    With ``x0 ~ N(0, sigma_x2)``: ``lam**2 P(|x0| <= lam)`` plus
    ``E[(|x0| - a lam)**2; lam < |x0| <= a lam] / (a-1)**2`` for SCAD, and
    ``E[(|x0| - a lam)**2; |x0| <= a lam] / a**2`` for MCP.
    """
    lam = p.lam
    if p.family is Family.L1:
        return lam ** 2
    sig = math.sqrt(sigma_x2)
    a = p.a
    if p.family is Family.SCAD:
        inner = 1.0 - erfc(lam / (SQRT2 * sig))
        return lam ** 2 * inner + _band_square(lam, a * lam, a * lam, sig) / (a - 1) ** 2
    return _band_square(0.0, a * lam, a * lam, sig) / a ** 2


def success_rhs(chit: float, p: PenaltySpec, alpha: float, rho: float,
                sigma_x2: float = 1.0) -> float:
    """Right-hand side of the success-solution equation for ``chit``."""
    tm = p.lam / math.sqrt(2 * chit)
    zero_part = -2 * chit / SQRT_PI * tm * math.exp(-tm * tm) + (chit + p.lam ** 2) * erfc(tm)
    return ((1 - rho) * zero_part + rho * (chit + _success_g(p, sigma_x2))) / alpha


def stability_lhs(chit: float, lam: float, alpha: float, rho: float) -> float:
    return ((1 - rho) * erfc(lam / math.sqrt(2 * chit)) + rho) / alpha


def solve_success(p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0,
                  max_iter: int = 2000) -> SuccessSolution:
    """Smallest positive root of ``chit = rhs(chit)`` and its stability.

    Fixed-point iteration from 0 climbs monotonically to the smallest root;
    when it stalls the root is bracketed on a log grid and refined by Brent.

    Raises:
        BracketError: no positive root in ``[1e-16 sigma_x2, 1e3 max(sigma_x2, lam**2)]``.
    """
    f = lambda c: success_rhs(c, p, alpha, rho, sigma_x2) - c
    # chit scales like lam**2 once lam dominates sigma_x
    top = 1e3 * max(sigma_x2, p.lam ** 2)
    chit, method = None, ""
    c = max(rho * _success_g(p, sigma_x2) / alpha, 1e-16 * sigma_x2)
    for _ in range(max_iter):
        nc = success_rhs(c, p, alpha, rho, sigma_x2)
        if not math.isfinite(nc) or not 0 < nc <= top:
            break
        if abs(nc - c) <= 1e-14 * max(nc, 1e-300):
            chit, method = nc, "iteration"
            break
        c = nc
    if chit is None:
        grid = np.geomspace(1e-16 * sigma_x2, top, 400)
        vals = [f(g) for g in grid]
        hist = list(zip(grid.tolist(), vals))
        for (c0, f0), (c1, f1) in zip(hist[:-1], hist[1:]):
            if f0 > 0 >= f1:
                chit = optimize.brentq(f, c0, c1, xtol=1e-300, rtol=1e-15)
                method = "bisection"
                break
        else:
            chit = _root_near_tangency(f, grid, vals)
            method = "tangency"
        if chit is None:
            raise BracketError(f"no success-solution root for {p} at alpha={alpha}, rho={rho}"
                               f" in [{grid[0]:.1e}, {grid[-1]:.1e}]", hist)
    lhs = stability_lhs(chit, p.lam, alpha, rho)
    return SuccessSolution(chit, p.lam / math.sqrt(2 * chit), p.lam / math.sqrt(2 * sigma_x2),
                           lhs < 1.0, lhs, method)


def _root_near_tangency(f, grid, vals):
    """Smallest root hidden between grid points where ``f`` only dips below zero.

    Near a tangency the sign change can be narrower than the grid spacing, so
    each sampled local minimum is refined before giving up.
    """
    for i in range(1, len(grid) - 1):
        if not vals[i] <= min(vals[i - 1], vals[i + 1]):
            continue
        lo, hi = math.log(grid[i - 1]), math.log(grid[i + 1])
        res = optimize.minimize_scalar(lambda u: f(math.exp(u)), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        if res.fun <= 0.0:
            c_min = math.exp(res.x)
            if res.fun == 0.0:
                return c_min
            return optimize.brentq(f, grid[i - 1], c_min, xtol=1e-300, rtol=1e-15)
    return None


def success_stable(p: PenaltySpec, alpha: float, rho: float, sigma_x2: float = 1.0) -> bool:
    try:
        return solve_success(p, alpha, rho, sigma_x2).stable
    except BracketError:
        return False


# -- phase boundaries ---------------------------------------------------------------

@dataclass
class BoundaryResult:
    value: float
    history: list = field(default_factory=list)
    capped: bool = False


def _bisect(pred, lo: float, hi: float, tol: float, history: list, transform=None):
    """``pred(lo)`` true, ``pred(hi)`` false; shrink to ``tol`` (in transformed units)."""
    fwd, inv = transform or (lambda x: x, lambda x: x)
    a, b = fwd(lo), fwd(hi)
    while abs(b - a) > tol:
        mid = 0.5 * (a + b)
        ok = pred(inv(mid))
        history.append((inv(mid), ok))
        if ok:
            a = mid
        else:
            b = mid
    return inv(a), inv(b)


def alpha_c(rho: float, p: PenaltySpec, sigma_x2: float = 1.0, tol: float = 1e-5,
            detail: bool = False):
    """Smallest alpha with a stable success solution."""
    hist: list = []
    pred = lambda al: success_stable(p, al, rho, sigma_x2)
    hi = 1.0
    if not pred(hi):
        raise BracketError(f"success solution unstable even at alpha=1 for {p}, rho={rho}", hist)
    lo = rho
    if pred(lo):
        res = BoundaryResult(lo, hist)
        return res if detail else res.value
    # predicate is true at large alpha: bisect the flipped predicate
    a, b = _bisect(lambda al: not pred(al), lo, hi, tol, hist)
    log.debug("alpha_c bracket history: %s", hist)
    res = BoundaryResult(b, hist)
    return res if detail else res.value


def rho_c(alpha: float, p: PenaltySpec, sigma_x2: float = 1.0, tol: float = 1e-5,
          detail: bool = False):
    """Largest rho with a stable success solution."""
    hist: list = []
    pred = lambda r: success_stable(p, alpha, r, sigma_x2)
    lo, hi = 1e-9, min(alpha, 1.0)
    if not pred(lo):
        raise BracketError(f"success solution unstable even at rho~0 for {p}, alpha={alpha}", hist)
    if pred(hi):
        res = BoundaryResult(hi, hist)
        return res if detail else res.value
    a, _ = _bisect(pred, lo, hi, tol, hist)
    log.debug("rho_c bracket history: %s", hist)
    res = BoundaryResult(a, hist)
    return res if detail else res.value


def a_c_of_lambda(lam: float, alpha: float, rho: float, family, sigma_x2: float = 1.0,
                  tol: float = 1e-6, detail: bool = False):
    """Largest ``a`` with a stable success solution; 1 if none, capped at 1e6."""
    family = Family.parse(family)
    hist: list = []
    pred = lambda a: success_stable(PenaltySpec(family, lam, a), alpha, rho, sigma_x2)
    lo = A_FLOOR
    if pred(A_CAP):
        res = BoundaryResult(A_CAP, hist, capped=True)
        return res if detail else res.value
    if not pred(lo):
        res = BoundaryResult(1.0, hist)
        return res if detail else res.value
    fwd = lambda a: math.log(a - 1.0)
    inv = lambda u: 1.0 + math.exp(u)
    a, _ = _bisect(pred, lo, A_CAP, tol, hist, (fwd, inv))
    log.debug("a_c bracket history: %s", hist)
    res = BoundaryResult(a, hist)
    return res if detail else res.value


def lambda_c(alpha: float, rho: float, family, sigma_x2: float = 1.0, tol: float = 1e-4,
             detail: bool = False):
    """Largest lambda with ``a_c(lambda) > 1``; capped at 1e6 when it diverges."""
    family = Family.parse(family)
    hist: list = []

    def pred(lam):
        # a_c(lam) > 1 iff some a just above 1 gives a stable success point
        return success_stable(PenaltySpec(family, lam, A_FLOOR), alpha, rho, sigma_x2)

    grid = np.geomspace(1e-4, LAMBDA_CAP, 61)
    last_true = None
    for lam in grid:
        ok = pred(float(lam))
        hist.append((float(lam), ok))
        if ok:
            last_true = float(lam)
        elif last_true is not None:
            lo, hi = last_true, float(lam)
            a, _ = _bisect(pred, lo, hi, tol, hist, (math.log, math.exp))
            res = BoundaryResult(a, hist)
            return res if detail else res.value
    if last_true is None:
        res = BoundaryResult(0.0, hist)
    else:
        res = BoundaryResult(LAMBDA_CAP, hist, capped=True)
    return res if detail else res.value


def ncc_limit(alpha: float, a: float, family, sigma_x2: float = 1.0,
              lam_start: float = 1.0, lam_end: float = 0.1, lam_step: float = 0.002,
              rho_lo: float = 0.05, rho_hi: float | None = None, tol: float = 1e-3,
              detail: bool = False):
    """Largest rho whose lambda-continuation reaches success without a gap."""
    from .schedule import lambda_path
    from .state_evolution import fixed_point_continuation

    family = Family.parse(family)
    path = lambda_path(lam_start, lam_end, lam_step)
    hist: list = []

    def pred(rho):
        c = fixed_point_continuation(path, a, family, alpha, rho, sigma_x2,
                                     stop_on_gap=True, stop_on_success=True)
        return c.reached_success and not c.has_gap

    hi = rho_hi if rho_hi is not None else alpha
    if not pred(rho_lo):
        raise BracketError(f"continuation fails already at rho={rho_lo}", hist)
    if pred(hi):
        res = BoundaryResult(hi, hist, capped=True)
        return res if detail else res.value
    lo, _ = _bisect(pred, rho_lo, hi, tol, hist)
    log.debug("ncc bracket history: %s", hist)
    res = BoundaryResult(lo, hist)
    return res if detail else res.value


def ncc_limit_max_over_a(alpha: float, family, a_values=(2.0, 3.0, 5.0, 10.0), **kw):
    """Coarse maximisation of :func:`ncc_limit` over ``a``; returns ``(best, per_a)``."""
    per_a = {a: ncc_limit(alpha, a, family, **kw) for a in a_values}
    return max(per_a.values()), per_a
