"""Planar rigid-body model of a twin-thruster differential-drive boat.

Frame conventions used throughout the package:

- position x east, y north (meters, local frame)
- heading is compass-style: radians, 0 = north, clockwise-positive,
  always normalized to [-pi, pi)
- surge is body-forward speed; sway is neglected (thin drag-dominated
  hull, no lateral actuation)

Two fixed thrusters sit symmetrically off the centerline. Equal
commands drive straight; a split turns the boat toward the slower
side (left-heavy thrust => clockwise/right turn).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import active as _K

MAX_STEP_S = 0.1


@dataclass(frozen=True)
class VesselState:
    """Pose and rates at time t_s. Immutable; steps produce new values."""

    x_m: float = 0.0
    y_m: float = 0.0
    heading_rad: float = 0.0
    surge_mps: float = 0.0
    yaw_rate_radps: float = 0.0
    t_s: float = 0.0

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in
                   (self.x_m, self.y_m, self.heading_rad,
                    self.surge_mps, self.yaw_rate_radps, self.t_s))


@dataclass(frozen=True)
class ThrusterPair:
    """Normalized per-thruster commands, each in [-1, 1]."""

    left: float
    right: float


@dataclass(frozen=True)
class VesselParams:
    """Physical parameters; defaults sized for a ~0.8 m foam hull.

    With both thrusters at full command the default drag coefficients
    give a terminal speed of about 1.9 m/s.
    """

    mass_kg: float = 6.0
    yaw_inertia_kgm2: float = 0.35
    max_thrust_n: float = 15.0
    thruster_offset_m: float = 0.25
    drag_lin_surge: float = 0.5
    drag_quad_surge: float = 8.0
    drag_lin_yaw: float = 1.5
    drag_quad_yaw: float = 2.0
    max_speed_mps: float = 2.2

    def validate(self) -> None:
        for name in ("mass_kg", "yaw_inertia_kgm2", "max_thrust_n",
                     "thruster_offset_m", "max_speed_mps"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"VesselParams.{name} must be > 0")
        # drags may be zero (ideal hull) but never negative
        for name in ("drag_lin_surge", "drag_quad_surge",
                     "drag_lin_yaw", "drag_quad_yaw"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"VesselParams.{name} must be >= 0")

    def terminal_speed(self, command: float = 1.0) -> float:
        """Drag-balance surge speed for equal thruster commands."""
        thrust = 2.0 * self.max_thrust_n * abs(command)
        a, b = self.drag_quad_surge, self.drag_lin_surge
        if a == 0.0:
            return thrust / b if b > 0.0 else math.inf
        return (-b + math.sqrt(b * b + 4.0 * a * thrust)) / (2.0 * a)


@dataclass(frozen=True)
class EnvironmentModel:
    """Ambient water current plus seeded random force/moment noise.

    The std fields are 1-second-equivalent random-walk intensities:
    samples are scaled by 1/sqrt(dt) so trajectory statistics do not
    depend on the tick size.
    """

    current_mps: tuple[float, float] = (0.0, 0.0)
    surge_disturbance_std: float = 0.0
    yaw_disturbance_std: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.surge_disturbance_std < 0.0 or self.yaw_disturbance_std < 0.0:
            raise ValueError("disturbance std fields must be >= 0")
        if not all(math.isfinite(c) for c in self.current_mps):
            raise ValueError("current components must be finite")


class DisturbanceSampler:
    """Deterministic per-step (surge force, yaw moment) noise stream."""

    def __init__(self, env: EnvironmentModel):
        self.env = env
        self._rng = np.random.default_rng(env.seed)

    def sample(self, dt_s: float) -> tuple[float, float]:
        if self.env.surge_disturbance_std == 0.0 and self.env.yaw_disturbance_std == 0.0:
            return 0.0, 0.0
        zf, zm = self._rng.standard_normal(2)
        s = 1.0 / math.sqrt(dt_s)
        return (self.env.surge_disturbance_std * zf * s,
                self.env.yaw_disturbance_std * zm * s)


def mix_thrust(throttle: float, steering: float) -> ThrusterPair:
    """Map (throttle, steering) onto the thruster pair.

    Inputs outside [-1, 1] are clamped before mixing. Negative steering
    makes the right thruster faster than the left, turning the boat
    left (heading decreases).
    """
    if not (math.isfinite(throttle) and math.isfinite(steering)):
        raise ValueError("throttle and steering must be finite")
    left, right = _K.mix_thrust(throttle, steering)
    return ThrusterPair(left, right)


def forces_and_moments(state: VesselState, thr: ThrusterPair,
                       params: VesselParams,
                       env_sample: tuple[float, float] = (0.0, 0.0),
                       ) -> tuple[float, float]:
    """Net surge force (N) and yaw moment (N*m) including the noise draw."""
    force, moment = _K.thruster_forces(
        thr.left, thr.right, state.surge_mps, state.yaw_rate_radps,
        params.max_thrust_n, params.thruster_offset_m,
        params.drag_lin_surge, params.drag_quad_surge,
        params.drag_lin_yaw, params.drag_quad_yaw)
    return force + env_sample[0], moment + env_sample[1]


def step(state: VesselState, thr: ThrusterPair, params: VesselParams,
         env: EnvironmentModel, dt_s: float,
         disturbance: tuple[float, float] = (0.0, 0.0)) -> VesselState:
    """Advance one fixed tick with semi-implicit Euler integration.

    ``disturbance`` is the pre-drawn (force, moment) sample for this
    step (see DisturbanceSampler); passing it explicitly keeps this
    function pure and the RNG in one place.
    """
    if not (0.0 < dt_s <= MAX_STEP_S):
        raise ValueError(f"dt_s must be in (0, {MAX_STEP_S}], got {dt_s}")
    x, y, heading, surge, yaw_rate, t = _K.vessel_step(
        state.x_m, state.y_m, state.heading_rad,
        state.surge_mps, state.yaw_rate_radps, state.t_s,
        thr.left, thr.right,
        params.mass_kg, params.yaw_inertia_kgm2,
        params.max_thrust_n, params.thruster_offset_m,
        params.drag_lin_surge, params.drag_quad_surge,
        params.drag_lin_yaw, params.drag_quad_yaw,
        env.current_mps[0], env.current_mps[1],
        disturbance[0], disturbance[1], dt_s)
    new = VesselState(x, y, heading, surge, yaw_rate, t)
    if not new.is_finite():
        raise ArithmeticError("vessel state became non-finite")
    return new


class VesselSim:
    """Stateful convenience wrapper owning the disturbance stream."""

    def __init__(self, params: VesselParams, env: EnvironmentModel,
                 state: VesselState | None = None):
        params.validate()
        env.validate()
        self.params = params
        self.env = env
        self.state = state if state is not None else VesselState()
        self._sampler = DisturbanceSampler(env)

    def step(self, thr: ThrusterPair, dt_s: float) -> VesselState:
        draw = self._sampler.sample(dt_s)
        self.state = step(self.state, thr, self.params, self.env, dt_s, draw)
        return self.state
