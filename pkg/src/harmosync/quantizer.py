"""Saturating uniform quantizer with zoom, the coupling law and the zoom schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ZoomError",
    "UniformQuantizer",
    "ZoomSchedule",
    "quantize",
    "coupling_input",
    "zoom_out_trigger",
    "zoom_in_step",
]


class ZoomError(ValueError):
    """Invalid zoom configuration or state transition."""


@dataclass(frozen=True)
class UniformQuantizer:
    """Mid-tread quantizer with step ``2*Delta`` saturating at ``+-2*Delta*K``.

    ``K = ceil(M / (2*Delta))``.  Inside ``|y| <= M`` the error is at most
    ``Delta``; outside, the output magnitude exceeds ``M - Delta``.  Ties
    round toward +inf, so odd symmetry holds everywhere except at the
    half-step points ``(2k+1)*Delta``.
    """

    Delta: float
    M: float

    def __post_init__(self):
        if not (self.Delta > 0 and math.isfinite(self.Delta)):
            raise ValueError(f"Delta must be positive, got {self.Delta}")
        if not (self.M > self.Delta and math.isfinite(self.M)):
            raise ValueError(f"range M={self.M} must exceed Delta={self.Delta}")

    @property
    def step(self) -> float:
        return 2.0 * self.Delta

    @property
    def K(self) -> int:
        return math.ceil(self.M / self.step)

    @property
    def levels(self) -> np.ndarray:
        return self.step * np.arange(-self.K, self.K + 1)

    def __call__(self, y):
        idx = np.floor(np.asarray(y, dtype=float) / self.step + 0.5)
        return self.step * np.clip(idx, -self.K, self.K)


def quantize(q: UniformQuantizer, mu: float, y):
    """Zoomed quantizer ``q_mu(y) = mu * q(y / mu)``; vectorised over ``y``."""
    if not mu > 0:
        raise ZoomError(f"zoom level must be positive, got {mu}")
    out = mu * q(np.asarray(y, dtype=float) / mu)
    return float(out) if np.ndim(out) == 0 else out


def coupling_input(L: np.ndarray, quantized_velocities: np.ndarray) -> np.ndarray:
    """``u = -L q``, held constant over one sampling interval."""
    qv = np.asarray(quantized_velocities, dtype=float)
    if L.shape[1] != qv.shape[0]:
        raise ValueError("dimension mismatch between Laplacian and velocity vector")
    return -(L @ qv)


def zoom_out_trigger(v_sample, mu: float, q: UniformQuantizer) -> bool:
    """True once every ``|v_i / mu| <= M - 2*Delta``: the quantizer has captured the state."""
    if not q.M > 2.0 * q.Delta:
        raise ZoomError(f"M={q.M} must exceed 2*Delta={2 * q.Delta} for the zoom-out stage to terminate")
    if not mu > 0:
        raise ZoomError("trigger is evaluated only for a positive zoom level")
    return bool(np.max(np.abs(np.asarray(v_sample, dtype=float) / mu)) <= q.M - 2.0 * q.Delta)


class ZoomSchedule:
    """Zoom level state machine for one simulation run.

    Fixed mode keeps ``mu`` constant with the coupling always on.  In
    adjustable mode the schedule starts zooming out (coupling off,
    ``mu = k*Delta`` at sample ``k``), latches ``k0`` at the first sample
    ``k >= 1`` where the trigger fires, then zooms in with
    ``mu = theta**floor((k - k0)/T_steps) * k0 * Delta``.
    """

    FIXED = "fixed"
    ADJUSTABLE = "adjustable"
    ZOOM_OUT = "zooming-out"
    ZOOM_IN = "zooming-in"

    def __init__(self, quantizer: UniformQuantizer, mode: str = "fixed", mu: float = 1.0,
                 theta: float | None = None, T_steps: int | None = None, tau: float = 1.0):
        self.quantizer = quantizer
        self.mode = mode
        self.tau = tau
        if mode == self.FIXED:
            if not mu > 0:
                raise ZoomError("fixed zoom level must be positive")
            self.mu = float(mu)
            self.stage = self.ZOOM_IN
            self.k0 = 0
        elif mode == self.ADJUSTABLE:
            if not quantizer.M > 2.0 * quantizer.Delta:
                raise ZoomError(f"adjustable zoom needs M > 2*Delta (M={quantizer.M}, Delta={quantizer.Delta})")
            if theta is None or not (0 < theta < 1):
                raise ZoomError(f"contraction factor theta={theta} must lie in (0, 1)")
            if T_steps is None or int(T_steps) < 1:
                raise ZoomError("dwell time must be at least one sampling period")
            self.mu = 0.0
            self.stage = self.ZOOM_OUT
            self.k0 = None
        else:
            raise ZoomError(f"unknown zoom mode {mode!r}")
        self.theta = theta
        self.T_steps = None if T_steps is None else int(T_steps)

    @property
    def T(self) -> float | None:
        return None if self.T_steps is None else self.T_steps * self.tau

    def observe(self, k: int, v_sample) -> tuple[float, bool]:
        """Advance to sample ``k`` given the sampled velocities; return ``(mu, coupling_on)``."""
        if self.mode == self.FIXED:
            return self.mu, True
        if self.stage == self.ZOOM_OUT:
            self.mu = k * self.quantizer.Delta
            if k >= 1 and zoom_out_trigger(v_sample, self.mu, self.quantizer):
                self.stage = self.ZOOM_IN
                self.k0 = k
                return self.mu, True
            return self.mu, False
        self.mu = self.mu_at_sample(k)
        return self.mu, True

    def mu_at_sample(self, k: int) -> float:
        if self.mode == self.FIXED:
            return self.mu
        if self.k0 is None or k < self.k0:
            return k * self.quantizer.Delta
        return self.theta ** ((k - self.k0) // self.T_steps) * self.k0 * self.quantizer.Delta

    def zoom_in_mus(self, k_start: int, count: int) -> np.ndarray:
        """Zoom levels for samples ``k_start .. k_start + count - 1`` once zooming in."""
        if self.stage != self.ZOOM_IN:
            raise ZoomError("zoom-in levels requested before the zoom-out stage ended")
        if self.mode == self.FIXED:
            return np.full(count, self.mu)
        k = np.arange(k_start, k_start + count)
        return self.theta ** ((k - self.k0) // self.T_steps) * (self.k0 * self.quantizer.Delta)


def zoom_in_step(schedule: ZoomSchedule, t: float) -> float:
    """``mu(t) = theta**floor((t - tau*k0)/T) * k0 * Delta`` during the zoom-in stage."""
    if schedule.stage != ZoomSchedule.ZOOM_IN or schedule.k0 is None:
        raise ZoomError("zoom_in_step is only defined in the zooming-in stage")
    if schedule.mode == ZoomSchedule.FIXED:
        return schedule.mu
    if not (schedule.theta is not None and schedule.theta < 1):
        raise ZoomError(f"contraction factor theta={schedule.theta} must be below 1")
    # t is measured on the sample grid; snap to it before taking the floor
    k = math.floor(t / schedule.tau + 1e-9)
    if k < schedule.k0:
        raise ZoomError(f"t={t} precedes the zoom-in start t={schedule.k0 * schedule.tau}")
    return schedule.mu_at_sample(k)
