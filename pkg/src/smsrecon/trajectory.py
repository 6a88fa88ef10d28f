"""Deterministic degradation path and its operator-aligned reverse updates.

Forward interpolation: x_t = k* + alpha_t * d_Omega, so x_0 = k* and
x_T = y_Omega.  Reverse: given a predicted degradation d^_t at step t,

    k^(t)   = x_t - alpha_t   * d^_t
    x_{t-1} = k^(t) + alpha_{t-1} * d^_t

with t running from T down to 1.  If d^_t equals the true d_Omega, a
single step recovers k* exactly; this oracle identity is the framework's
central correctness check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, ReconstructionError, ShapeError, StepUnderflowError
from .operators import Degradation, Stage


@dataclass(frozen=True)
class Schedule:
    """Monotone schedule alpha_0..alpha_T with alpha_0 = 0, alpha_T = 1."""

    alphas: tuple[float, ...]

    def __post_init__(self):
        a = self.alphas
        if len(a) < 2:
            raise ArgumentError("schedule needs at least T = 1 (two alphas)")
        if a[0] != 0.0 or a[-1] != 1.0:
            raise ArgumentError("schedule must satisfy alpha_0 = 0, alpha_T = 1")
        if any(x > y for x, y in zip(a, a[1:])) or any(not (0.0 <= x <= 1.0) for x in a):
            raise ArgumentError("schedule must be nondecreasing within [0, 1]")

    @property
    def T(self) -> int:
        return len(self.alphas) - 1


def linear_schedule(T: int) -> Schedule:
    """alpha_t = t / T."""
    if T < 1:
        raise ArgumentError("T must be >= 1")
    return Schedule(alphas=tuple(t / T for t in range(T + 1)))


@dataclass(frozen=True)
class TrajectoryState:
    """One point (x_t, t, Omega) on the deterministic path."""

    x: np.ndarray
    t: int
    stage: Stage


# predict(x_t, t_normalized in [0, 1], stage) -> predicted degradation
PredictorFn = Callable[[np.ndarray, float, Stage], Degradation]
# post_step transforms each produced next-state (projections live here)
PostStepFn = Callable[[TrajectoryState], TrajectoryState]


def forward_state(k_star: np.ndarray, d: Degradation, sched: Schedule, t: int) -> TrajectoryState:
    """x_t = k* + alpha_t * d (entrywise)."""
    k_star = np.asarray(k_star, dtype=np.complex128)
    if k_star.shape != d.data.shape:
        raise ShapeError(f"target {k_star.shape} vs degradation {d.data.shape}")
    if not (0 <= t <= sched.T):
        raise ArgumentError(f"step {t} outside [0, {sched.T}]")
    return TrajectoryState(x=k_star + sched.alphas[t] * d.data, t=t, stage=d.stage)


def reverse_step(
    state: TrajectoryState, d_hat: Degradation, sched: Schedule
) -> tuple[np.ndarray, TrajectoryState]:
    """One reverse update; returns (clean estimate k^(t), next state)."""
    if state.t < 1:
        raise StepUnderflowError("reverse_step requires t >= 1")
    if state.x.shape != d_hat.data.shape:
        raise ShapeError(f"state {state.x.shape} vs degradation {d_hat.data.shape}")
    a_t = sched.alphas[state.t]
    a_prev = sched.alphas[state.t - 1]
    k_hat = state.x - a_t * d_hat.data
    nxt = TrajectoryState(x=k_hat + a_prev * d_hat.data, t=state.t - 1, stage=state.stage)
    return k_hat, nxt


def run_reverse_chain(
    x_T: np.ndarray,
    stage: Stage,
    sched: Schedule,
    predict: PredictorFn,
    post_step: Optional[PostStepFn] = None,
) -> np.ndarray:
    """Iterate reverse_step from t = T down to 1; returns x_0."""
    state = TrajectoryState(x=np.asarray(x_T, dtype=np.complex128), t=sched.T, stage=stage)
    for t in range(sched.T, 0, -1):
        try:
            d_hat = predict(state.x, t / sched.T, stage)
        except Exception as exc:
            raise ReconstructionError(
                f"predictor failed at step t={t} (stage {stage.value}): {exc}"
            ) from exc
        _, state = reverse_step(state, d_hat, sched)
        if post_step is not None:
            state = post_step(state)
    return state.x


__all__ = [
    "Schedule",
    "linear_schedule",
    "TrajectoryState",
    "forward_state",
    "reverse_step",
    "run_reverse_chain",
    "PredictorFn",
    "PostStepFn",
]
