"""SCAD, MCP and l1 penalties with their exact single-body minimisers.

Two parameterisations of the same scalar problem are provided:

* field convention: ``x*(s, w) = argmin_x x**2 / (2 s) - w x + J(x)``
* prox convention:  ``x*(m; s) = argmin_x (x - m)**2 / (2 s) + J(x)``

They are related by ``m = s * w``.  The field form is written exactly as the
piecewise ``Sigma * M`` expressions; the prox form is assembled from linear
pieces and is the one used by AMP and state evolution, because it stays
well defined as ``s -> 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Family(str, enum.Enum):
    L1 = "l1"
    SCAD = "scad"
    MCP = "mcp"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown penalty family {value!r}; "
                             f"choose one of {[f.value for f in cls]}") from None


class Region(str, enum.Enum):
    ZERO = "Zero"
    L1_LIKE = "L1Like"
    TRANSITION = "Transition"
    OLS = "Ols"


class InvalidPenalty(ValueError):
    pass


class AdmissibilityError(ValueError):
    """The single-body problem has no finite closed-form minimiser (a <= a_min)."""

    def __init__(self, a: float, a_min: float, where: str = ""):
        msg = f"nonconvexity parameter a={a!r} is not above a_min={a_min!r}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)
        self.a = a
        self.a_min = a_min


@dataclass(frozen=True)
class PenaltySpec:
    family: Family
    lam: float
    a: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidPenalty(f"lambda must be in (0, inf), got {self.lam!r}")
        if self.family is not Family.L1 and not (self.a > 1 and math.isfinite(self.a)):
            raise InvalidPenalty(f"a must be in (1, inf) for {self.family.value}, got {self.a!r}")

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.family, lam, self.a)

    def with_a(self, a: float) -> "PenaltySpec":
        return PenaltySpec(self.family, self.lam, a)

    def __str__(self):
        if self.family is Family.L1:
            return f"l1(lambda={self.lam:g})"
        return f"{self.family.value}(lambda={self.lam:g}, a={self.a:g})"


@dataclass(frozen=True)
class ThresholdResult:
    x_star: float
    sigma_factor: float
    region: Region


def penalty_value(x, p: PenaltySpec):
    """J(x; lambda, a), vectorised over ``x``."""
    ax = np.abs(np.asarray(x, dtype=float))
    lam, a = p.lam, p.a
    if p.family is Family.L1:
        out = lam * ax
    elif p.family is Family.SCAD:
        out = np.where(
            ax <= lam, lam * ax,
            np.where(ax <= a * lam,
                     -(ax * ax - 2 * a * lam * ax + lam * lam) / (2 * (a - 1)),
                     (a + 1) * lam * lam / 2))
    else:
        out = np.where(ax <= a * lam, lam * ax - ax * ax / (2 * a), a * lam * lam / 2)
    return float(out) if np.ndim(out) == 0 else out


def a_min(p: PenaltySpec, s: float) -> float:
    """Smallest admissible ``a`` at curvature inverse ``s`` (= 1/Q~)."""
    if p.family is Family.SCAD:
        return max(1.0, 1.0 + s)
    if p.family is Family.MCP:
        return max(1.0, s)
    return 1.0


def is_admissible(p: PenaltySpec, s: float) -> bool:
    return p.family is Family.L1 or p.a > a_min(p, s)


def check_admissible(p: PenaltySpec, s: float, where: str = "") -> None:
    if not is_admissible(p, s):
        raise AdmissibilityError(p.a, a_min(p, s), where)


# -- field convention ------------------------------------------------------

def threshold_field(s: float, w: float, p: PenaltySpec) -> ThresholdResult:
    """Minimiser of ``x**2/(2s) - w x + J(x)`` in closed form.

    At exact region boundaries the formula of the lower-|w| region is used.

    Raises:
        AdmissibilityError: if ``a <= a_min(p, s)``.
    """
    if not s > 0:
        raise ValueError(f"s must be positive, got {s!r}")
    check_admissible(p, s, "threshold_field")
    lam, a = p.lam, p.a
    aw = abs(w)
    sgn = math.copysign(1.0, w)
    if aw <= lam:
        return ThresholdResult(0.0, 0.0, Region.ZERO)
    if p.family is Family.L1:
        return ThresholdResult(s * (w - sgn * lam), s, Region.L1_LIKE)
    if p.family is Family.SCAD:
        if aw <= lam * (1 + 1 / s):
            return ThresholdResult(s * (w - sgn * lam), s, Region.L1_LIKE)
        if aw <= a * lam / s:
            sig = 1.0 / (1.0 / s - 1.0 / (a - 1))
            return ThresholdResult(sig * (w - sgn * a * lam / (a - 1)), sig, Region.TRANSITION)
        return ThresholdResult(s * w, s, Region.OLS)
    # MCP
    if aw <= a * lam / s:
        sig = 1.0 / (1.0 / s - 1.0 / a)
        return ThresholdResult(sig * (w - sgn * lam), sig, Region.TRANSITION)
    return ThresholdResult(s * w, s, Region.OLS)


def threshold_deriv(s: float, w: float, p: PenaltySpec) -> float:
    """d x*/d w, i.e. the factor Sigma_p(s, w)."""
    return threshold_field(s, w, p).sigma_factor


def single_body_min_value(qtilde: float, field: float, p: PenaltySpec) -> float:
    """``L = min_x (Q~/2) x**2 - field * x + J(x)`` from the piecewise closed forms."""
    if not qtilde > 0:
        raise ValueError(f"qtilde must be positive, got {qtilde!r}")
    check_admissible(p, 1.0 / qtilde, "single_body_min_value")
    lam, a = p.lam, p.a
    aw = abs(field)
    if aw <= lam:
        return 0.0
    if p.family is Family.L1:
        return -0.5 * (aw - lam) ** 2 / qtilde
    if p.family is Family.SCAD:
        if aw <= lam * (1 + qtilde):
            m2 = (aw - lam) ** 2 / qtilde
        elif aw <= a * lam * qtilde:
            c = 1.0 / (a - 1)
            m2 = (aw - a * lam * c) ** 2 / (qtilde - c) + lam * lam * c
        else:
            m2 = aw * aw / qtilde - (a + 1) * lam * lam
        return -0.5 * m2
    if aw <= a * lam * qtilde:
        m2 = (aw - lam) ** 2 / (qtilde - 1.0 / a)
    else:
        m2 = aw * aw / qtilde - a * lam * lam
    return -0.5 * m2


def single_body_objective(x, qtilde: float, field: float, p: PenaltySpec):
    return 0.5 * qtilde * np.square(x) - field * np.asarray(x) + penalty_value(x, p)


# -- prox convention -------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """On ``lo < |m| <= hi`` the minimiser is ``slope * m + sign(m) * offset``."""

    lo: float
    hi: float
    slope: float
    offset: float
    region: Region


def prox_pieces(p: PenaltySpec, s: float) -> list[Piece]:
    """Linear pieces of the prox map on ``m > 0``; ``|m| <= s*lam`` maps to 0."""
    if s < 0:
        raise ValueError(f"s must be non-negative, got {s!r}")
    check_admissible(p, s, "prox_pieces")
    lam, a = p.lam, p.a
    if p.family is Family.L1:
        return [Piece(s * lam, math.inf, 1.0, -s * lam, Region.L1_LIKE)]
    if p.family is Family.SCAD:
        k = (a - 1) / (a - 1 - s)
        return [
            Piece(s * lam, lam * (1 + s), 1.0, -s * lam, Region.L1_LIKE),
            Piece(lam * (1 + s), a * lam, k, -k * s * a * lam / (a - 1), Region.TRANSITION),
            Piece(a * lam, math.inf, 1.0, 0.0, Region.OLS),
        ]
    k = a / (a - s)
    return [
        Piece(s * lam, a * lam, k, -k * s * lam, Region.TRANSITION),
        Piece(a * lam, math.inf, 1.0, 0.0, Region.OLS),
    ]


def threshold_prox_array(m, s: float, p: PenaltySpec):
    """Vectorised prox map.

    Returns ``(x, sigma)`` where ``sigma = s * dx/dm`` is the field-convention
    derivative Sigma_p, the quantity AMP accumulates into its variance.
    """
    m = np.asarray(m, dtype=float)
    am = np.abs(m)
    sgn = np.sign(m)
    x = np.zeros_like(m)
    slope = np.zeros_like(m)
    for pc in prox_pieces(p, s):
        sel = (am > pc.lo) & (am <= pc.hi)
        x = np.where(sel, pc.slope * m + sgn * pc.offset, x)
        slope = np.where(sel, pc.slope, slope)
    return x, s * slope


def threshold_prox(m: float, s: float, p: PenaltySpec) -> ThresholdResult:
    """Minimiser of ``(x - m)**2/(2s) + J(x)``; equal to ``threshold_field(s, m/s)``.

    ``s = 0`` is the analytic limit: the identity map with an empty dead zone.
    """
    check_admissible(p, s, "threshold_prox")
    am = abs(m)
    if am <= s * p.lam:
        return ThresholdResult(0.0, 0.0, Region.ZERO)
    for pc in prox_pieces(p, s):
        if pc.lo < am <= pc.hi:
            x = pc.slope * m + math.copysign(1.0, m) * pc.offset
            return ThresholdResult(x, s * pc.slope, pc.region)
    raise AssertionError("prox pieces do not cover the real line")  # pragma: no cover


def soft_threshold_field(s: float, w, lam: float):
    w = np.asarray(w, dtype=float)
    return np.where(np.abs(w) > lam, s * (w - lam * np.sign(w)), 0.0)
