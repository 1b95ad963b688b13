"""Nonconvexity-control schedules: piecewise-constant (lambda, a) over iterations."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Iterator, Sequence

from .penalty import Family, PenaltySpec


@dataclass(frozen=True)
class Segment:
    lam: float
    a: float
    steps: int

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"segment lambda must be positive, got {self.lam!r}")
        if not self.a > 1:
            raise ValueError(f"segment a must exceed 1, got {self.a!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"segment steps must be a positive integer, got {self.steps!r}")


@dataclass(frozen=True)
class ControlSchedule:
    """Segments applied in order; the last one is held until the run stops."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("a schedule needs at least one segment")

    @classmethod
    def constant(cls, lam: float, a: float = math.inf, steps: int = 1) -> "ControlSchedule":
        return cls((Segment(lam, a, steps),))

    @classmethod
    def parse(cls, text: str, a: float = math.inf) -> "ControlSchedule":
        """Parse ``"start:step:end@k"`` (fixed ``a``) or a JSON segment list.

        The JSON form is ``[[lam, a, k], ...]`` or ``[{"lambda":..,"a":..,"steps":..}]``.
        """
        text = text.strip()
        if text.startswith("["):
            return cls.from_json(json.loads(text), default_a=a)
        m = re.fullmatch(r"([^:@]+):([^:@]+):([^:@]+)@(\d+)", text)
        if not m:
            try:
                return cls.constant(float(text), a)
            except ValueError:
                raise ValueError(f"cannot parse schedule {text!r}; expected start:step:end@k") from None
        start, step, end = (float(g) for g in m.groups()[:3])
        k = int(m.group(4))
        if step == 0 or (end - start) * step < 0:
            raise ValueError(f"schedule step {step} does not move {start} towards {end}")
        n = int(math.floor((end - start) / step + 1e-9)) + 1
        lams = [round(start + i * step, 12) for i in range(n)]
        return cls(tuple(Segment(lam, a, k) for lam in lams))

    @classmethod
    def from_json(cls, obj, default_a: float = math.inf) -> "ControlSchedule":
        segs = []
        for item in obj:
            if isinstance(item, dict):
                segs.append(Segment(float(item["lambda"]), float(item.get("a", default_a)),
                                    int(item["steps"])))
            else:
                lam, a, k = item
                segs.append(Segment(float(lam), float(a), int(k)))
        return cls(tuple(segs))

    def to_json(self) -> list:
        return [{"lambda": s.lam, "a": s.a, "steps": s.steps} for s in self.segments]

    @property
    def scheduled_steps(self) -> int:
        return sum(s.steps for s in self.segments)

    def penalties(self, family: "Family | str") -> list[PenaltySpec]:
        family = Family.parse(family)
        return [PenaltySpec(family, s.lam, s.a if family is not Family.L1 else math.inf)
                for s in self.segments]

    def iter_steps(self, family, max_iters: int) -> Iterator[tuple[int, PenaltySpec, bool]]:
        """Yield ``(t, penalty, in_final_segment)`` for ``t = 1..max_iters``."""
        pens = self.penalties(family)
        t = 0
        for i, (seg, pen) in enumerate(zip(self.segments, pens)):
            last = i == len(pens) - 1
            reps = max_iters - t if last else seg.steps
            for _ in range(reps):
                if t >= max_iters:
                    return
                t += 1
                yield t, pen, last


def lambda_path(start: float, end: float, step: float) -> list[float]:
    """Strictly decreasing path ``start, start - step, ..., end`` (inclusive)."""
    if step <= 0 or end >= start:
        raise ValueError("need start > end and a positive step")
    n = int(math.floor((start - end) / step + 1e-9)) + 1
    return [round(start - i * step, 12) for i in range(n)]


def as_schedule(obj: "ControlSchedule | Sequence | PenaltySpec") -> ControlSchedule:
    if isinstance(obj, ControlSchedule):
        return obj
    if isinstance(obj, PenaltySpec):
        return ControlSchedule.constant(obj.lam, obj.a)
    return ControlSchedule.from_json(obj)
