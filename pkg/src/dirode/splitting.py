"""Operator-splitting composers for pluggable advection and diffusion steps.

A step operator maps (field, duration) -> field and must act as the identity
for duration zero.  The first-order composer applies advection then diffusion
over the full step; the second-order one wraps the diffusion step between two
advection half-steps (or the reverse, behind a flag).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Tuple

from .grid import Field

OPERATOR_TAGS = ("advection", "diffusion")


@dataclass
class StepOperator:
    """Named field transformer parameterized by duration."""

    name: str
    tag: str
    apply: Callable[[Field, float], Field]

    def __post_init__(self):
        if self.tag not in OPERATOR_TAGS:
            raise ValueError(f"unknown operator tag {self.tag!r}")

    def __call__(self, field: Field, duration: float) -> Field:
        if duration == 0:
            return field.copy()
        return self.apply(field, duration)


@dataclass
class SplitSchedule:
    """Ordered (operator, fraction-of-dt) pairs; fractions sum to 1 per operator."""

    stages: List[Tuple[StepOperator, float]]

    def __post_init__(self):
        totals = {}
        for op, frac in self.stages:
            totals[op.name] = totals.get(op.name, 0.0) + frac
        for name, total in totals.items():
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"fractions for operator {name!r} sum to {total}, expected 1")

    def run(self, field: Field, dt: float) -> Field:
        out = field
        for op, frac in self.stages:
            out = op(out, frac * dt)
        return out


def lie_schedule(adv: StepOperator, diff: StepOperator) -> SplitSchedule:
    return SplitSchedule([(adv, 1.0), (diff, 1.0)])


def strang_schedule(adv: StepOperator, diff: StepOperator, order: str = "ada") -> SplitSchedule:
    if order == "ada":
        return SplitSchedule([(adv, 0.5), (diff, 1.0), (adv, 0.5)])
    if order == "dad":
        return SplitSchedule([(diff, 0.5), (adv, 1.0), (diff, 0.5)])
    raise ValueError(f"unknown composition order {order!r}")


def lie_step(adv: StepOperator, diff: StepOperator, field: Field, dt: float) -> Field:
    """First-order composition: advection over dt, then diffusion over dt."""
    return lie_schedule(adv, diff).run(field, dt)


def strang_step(adv: StepOperator, diff: StepOperator, field: Field, dt: float,
                order: str = "ada") -> Field:
    """Second-order palindromic composition (half, full, half)."""
    return strang_schedule(adv, diff, order).run(field, dt)
