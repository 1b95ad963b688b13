"""Independent reference computations used only by the tests."""

import numpy as np

from ncvxcs.penalty import Family, PenaltySpec, a_min, penalty_value


def brute_force_field(s, w, p: PenaltySpec, final_step=1e-7, npts=201):
    """Grid minimisation of ``x**2/(2s) - w x + J(x)`` by repeated zooming.

    ``s`` and ``w`` may be arrays (one problem per entry).  The objective is
    strictly convex for admissible parameters, so zooming on the best grid
    point cannot lose the global minimiser.
    """
    s = np.atleast_1d(np.asarray(s, float))
    w = np.atleast_1d(np.asarray(w, float))
    s, w = np.broadcast_arrays(s, w)
    bound = 1.1 * np.maximum(p.a * p.lam if p.family is not Family.L1 else 0.0,
                             s * np.abs(w)) + 1.0
    lo, hi = -bound, bound
    while True:
        grid = np.linspace(0.0, 1.0, npts)
        x = lo[:, None] + (hi - lo)[:, None] * grid[None, :]
        obj = x * x / (2 * s[:, None]) - w[:, None] * x + penalty_value(x, p)
        k = np.argmin(obj, axis=1)
        step = (hi - lo) / (npts - 1)
        best = x[np.arange(len(s)), k]
        if np.all(step <= final_step):
            return best, obj[np.arange(len(s)), k]
        lo, hi = best - 2 * step, best + 2 * step


def field_objective(x, s, w, p):
    return x * x / (2 * s) - w * x + penalty_value(x, p)


def random_threshold_cases(n, seed=0):
    """Random (family, s, lam, a, w) tuples in the admissible range."""
    rng = np.random.default_rng(seed)
    fams = [Family.SCAD, Family.MCP, Family.L1]
    out = []
    for _ in range(n):
        fam = fams[rng.integers(3)]
        s = rng.uniform(0.05, 5.0)
        lam = rng.uniform(0.05, 2.0)
        if fam is Family.L1:
            p = PenaltySpec(fam, lam)
        else:
            lo = a_min(PenaltySpec(fam, lam, 30.0), s) + 0.1
            p = PenaltySpec(fam, lam, rng.uniform(lo, max(20.0, lo + 1e-3)))
        out.append((p, s, rng.uniform(-10, 10)))
    return out


def trapezoid_gauss(f, lo=-12.0, hi=12.0, n=2_400_001):
    z = np.linspace(lo, hi, n)
    y = f(z) * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    return float(np.trapezoid(y, z))
