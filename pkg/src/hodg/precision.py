"""Mixed-precision control: run early iterations with 32-bit state storage
and flux arithmetic, then promote to 64-bit either at a fixed iteration or
when the density-residual convergence rebounds. A run promotes at most
once and never demotes back."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dg import DofState

__all__ = [
    "PrecisionSchedule",
    "PrecisionEvent",
    "PrecisionController",
    "decide",
    "demote",
    "promote",
]

_MODES = ("dp", "sp", "mp_fixed", "mp_rebound")


@dataclass(frozen=True)
class PrecisionSchedule:
    mode: str = "dp"
    switch_iter: int = 0  # mp_fixed: first iteration computed in 64-bit
    window: int = 200  # mp_rebound: trailing residual window
    factor: float = 2.0  # mp_rebound: rebound threshold over the window minimum

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if self.switch_iter < 0:
            raise ValueError("switch_iter must be non-negative")
        if self.window < 2:
            raise ValueError("window must be at least 2")
        if self.factor <= 1.0:
            raise ValueError("factor must exceed 1")


@dataclass(frozen=True)
class PrecisionEvent:
    iteration: int
    reason: str  # scheduled | rebound
    residual: float | None = None


class PrecisionController:
    """Issues the precision for each iteration; remembers the single
    promotion so the rebound trigger fires only once."""

    def __init__(self, schedule: PrecisionSchedule):
        self.schedule = schedule
        self.event: PrecisionEvent | None = None
        self._switched = False

    def decide(self, iteration: int, density_residuals) -> tuple[int, PrecisionEvent | None]:
        """Precision (bits) for the step about to be computed, plus the
        promotion event if this call triggers it.

        `density_residuals` is the logged density-residual sequence for
        all completed iterations.
        """
        s = self.schedule
        if s.mode == "dp":
            return 64, None
        if s.mode == "sp":
            return 32, None
        if self._switched:
            return 64, None
        if s.mode == "mp_fixed":
            if iteration < s.switch_iter:
                return 32, None
            self._switched = True
            last = float(density_residuals[-1]) if len(density_residuals) else None
            self.event = PrecisionEvent(iteration, "scheduled", last)
            return 64, self.event
        # mp_rebound: promote when the density residual rises by >= factor
        # over its minimum within the trailing window of prior iterations
        n = len(density_residuals)
        if n >= 2:
            lo = max(0, n - 1 - s.window)
            trailing = density_residuals[lo : n - 1]
            m = min(trailing)
            current = float(density_residuals[-1])
            if m > 0.0 and current >= s.factor * m:
                self._switched = True
                self.event = PrecisionEvent(iteration, "rebound", current)
                return 64, self.event
        return 32, None


def decide(schedule: PrecisionSchedule, iteration: int, density_residuals):
    """One-shot form of the controller decision: replays the history to
    honor the switch-once rule."""
    ctrl = PrecisionController(schedule)
    for it in range(iteration):
        ctrl.decide(it, density_residuals[:it])
    return ctrl.decide(iteration, density_residuals)


def demote(state: DofState) -> DofState:
    """Round the coefficients to 32-bit storage."""
    out = state.coeffs.astype(np.float32)
    if not np.all(np.isfinite(out)):
        raise ValueError("demotion to 32-bit overflowed to non-finite values")
    return DofState(coeffs=out, iteration=state.iteration)


def promote(state: DofState) -> DofState:
    """Exact embedding of the coefficients into 64-bit storage."""
    return DofState(coeffs=state.coeffs.astype(np.float64), iteration=state.iteration)
