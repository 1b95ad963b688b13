"""Approximate message passing for SCAD / MCP / l1 with nonconvexity control.

One iteration (``V_hat = sum(vhat) / M``, ``alpha = M / N``)::

    R    = (y - A xhat) / (alpha V_hat) + R_prev      # Onsager-corrected residual
    m    = xhat + V_hat * A^T R                       # effective observation
    xhat, vhat = prox(m; s=V_hat), V_hat * prox'(m)

which costs one product with ``A`` and one with ``A^T``.  ``m`` equals
``V_hat`` times the local field ``h = xhat / V_hat + A^T R``, so the prox step
is the single-body minimiser ``x*(V_hat, h)``.  The penalty may change between
iterations according to a :class:`ControlSchedule`.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._io import text_sink
from .instance import ProblemInstance, mse_against_truth
from .penalty import Family, PenaltySpec, is_admissible, threshold_prox_array
from .schedule import ControlSchedule, Segment, as_schedule

V_FLOOR = 1e-300

__all__ = ["AmpOptions", "AmpRecord", "AmpReport", "AmpStatus", "ControlSchedule",
           "Segment", "amp_run", "success_indicator"]


class AmpStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"
    ADMISSIBILITY = "AdmissibilityViolation"


@dataclass(frozen=True)
class AmpOptions:
    max_iters: int = 1000
    tol: float = 1e-12
    divergence: float = 1e8
    damping: float = 1.0
    v_init: float | None = None   # per-coordinate vhat at t=0; default rho * sigma_x2

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class AmpRecord:
    t: int
    lam: float
    a: float
    mse: float
    V_hat: float
    residual: float


@dataclass
class AmpReport:
    trajectory: list[AmpRecord]
    status: AmpStatus
    final_xhat: np.ndarray
    violation_t: int | None = None
    clamp_events: list[int] = field(default_factory=list)
    initial: AmpRecord | None = None

    @property
    def final_mse(self) -> float:
        return self.trajectory[-1].mse if self.trajectory else math.nan

    @property
    def iterations(self) -> int:
        return len(self.trajectory)

    def write_csv(self, path) -> None:
        with text_sink(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "lambda", "a", "mse", "V_hat", "residual"])
            for r in self.trajectory:
                w.writerow([r.t, _g(r.lam), _g(r.a), _g(r.mse), _g(r.V_hat), _g(r.residual)])


def _g(x: float) -> str:
    return format(float(x), ".17g")


def amp_run(inst: ProblemInstance, schedule, family="scad",
            opts: AmpOptions = AmpOptions()) -> AmpReport:
    """Run AMP on ``inst`` under ``schedule``.

    ``schedule`` may be a :class:`ControlSchedule`, a :class:`PenaltySpec`
    (fixed penalty) or a JSON-style segment list.  The final segment is held
    until convergence or ``opts.max_iters``; the convergence test
    ``||xhat_t - xhat_{t-1}||^2 / N < tol`` only applies in that segment.
    """
    if isinstance(schedule, PenaltySpec):
        family = schedule.family
    sched = as_schedule(schedule)
    family = Family.parse(family)
    a_mat, y = inst.matrix, inst.y
    m_rows, n = a_mat.shape
    alpha = m_rows / n
    p = inst.params
    v0 = opts.v_init if opts.v_init is not None else p.rho * p.sigma_x2
    xhat = np.zeros(n)
    vhat = np.full(n, float(v0))
    ax = np.zeros(m_rows)
    r_prev = np.zeros(m_rows)
    V = vhat.sum() / m_rows
    traj: list[AmpRecord] = []
    clamps: list[int] = []
    truth = inst.x0 is not None
    first = sched.segments[0]
    init = AmpRecord(0, first.lam, first.a, mse_against_truth(xhat, inst) if truth else math.nan,
                     V, float(np.dot(y, y) / m_rows))
    status = AmpStatus.MAX_ITERS
    violation = None
    for t, pen, final_seg in sched.iter_steps(family, opts.max_iters):
        if V < V_FLOOR:
            V = V_FLOOR
            clamps.append(t)
        if not is_admissible(pen, V):
            status, violation = AmpStatus.ADMISSIBILITY, t
            break
        r = (y - ax) / (alpha * V) + r_prev
        mvec = xhat + V * (a_mat.T @ r)
        xnew, vnew = threshold_prox_array(mvec, V, pen)
        if opts.damping != 1.0:
            xnew = opts.damping * xnew + (1 - opts.damping) * xhat
        ax = a_mat @ xnew
        step = float(np.dot(xnew - xhat, xnew - xhat) / n)
        xhat, vhat, r_prev = xnew, vnew, r
        V = vhat.sum() / m_rows
        resid = float(np.dot(y - ax, y - ax) / m_rows)
        mse = mse_against_truth(xhat, inst) if truth else math.nan
        traj.append(AmpRecord(t, pen.lam, pen.a, mse, V, resid))
        if not (math.isfinite(V) and math.isfinite(resid)) or V > opts.divergence \
                or (truth and not mse <= opts.divergence):
            status = AmpStatus.DIVERGED
            break
        if final_seg and step < opts.tol:
            status = AmpStatus.CONVERGED
            break
    return AmpReport(traj, status, xhat, violation, clamps, init)


def success_indicator(report: AmpReport, tol: float = 1e-8) -> bool:
    """True when the final recorded mse is at most ``tol``."""
    mse = report.final_mse if report.trajectory else (report.initial.mse if report.initial else math.nan)
    return bool(mse <= tol)
