"""Cascaded heading controller and speed loop.

The steering cascade is the autopilot-style arrangement: an outer
proportional loop turns heading error into a desired turn rate, a slew
limiter bounds how fast that target may change, and an inner rate PID
turns rate error into the steering command. The same scalar PID
primitive drives both the rate loop and the speed loop.

Controller defaults: angle P gain 1.0, rate PID (0.2, 0.2, 0.02),
rate limit 30 deg/s, target-rate slew limit 120 deg/s^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ._kernels import active as _K


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0

    def validate(self) -> None:
        if self.kp < 0.0 or self.ki < 0.0 or self.kd < 0.0:
            raise ValueError("PID gains must be >= 0")


@dataclass(frozen=True)
class PidState:
    """Accumulated integral and previous error of one PID loop.

    ``initialized`` suppresses the derivative kick on the first step.
    """

    integral: float = 0.0
    prev_error: float = 0.0
    initialized: bool = False


@dataclass(frozen=True)
class SteeringConfig:
    """Steering cascade parameters (stored in SI: radians)."""

    ang_p: float = 1.0
    rat_gains: PidGains = PidGains(kp=0.2, ki=0.2, kd=0.02)
    rat_max_radps: float = math.radians(30.0)
    acc_max_radps2: float = math.radians(120.0)
    integ_limit: float = 0.3

    def validate(self) -> None:
        self.rat_gains.validate()
        if not (self.ang_p > 0.0 and self.rat_max_radps > 0.0
                and self.acc_max_radps2 > 0.0 and self.integ_limit >= 0.0):
            raise ValueError("steering config out of range")

    # Config files carry these values in degree units with the
    # conventional autopilot key names; see harness.config. Rounding to
    # 12 decimals makes degrees->radians->degrees the exact identity at
    # config precision.
    def to_degrees(self) -> dict[str, float]:
        return {
            "ang_p": self.ang_p,
            "rat_p": self.rat_gains.kp,
            "rat_i": self.rat_gains.ki,
            "rat_d": self.rat_gains.kd,
            "rat_max_degps": round(math.degrees(self.rat_max_radps), 12),
            "acc_max_degps2": round(math.degrees(self.acc_max_radps2), 12),
            "integ_limit": self.integ_limit,
        }

    @classmethod
    def from_degrees(cls, ang_p: float = 1.0, rat_p: float = 0.2,
                     rat_i: float = 0.2, rat_d: float = 0.02,
                     rat_max_degps: float = 30.0,
                     acc_max_degps2: float = 120.0,
                     integ_limit: float = 0.3) -> "SteeringConfig":
        cfg = cls(ang_p=ang_p,
                  rat_gains=PidGains(kp=rat_p, ki=rat_i, kd=rat_d),
                  rat_max_radps=math.radians(rat_max_degps),
                  acc_max_radps2=math.radians(acc_max_degps2),
                  integ_limit=integ_limit)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class SpeedConfig:
    """Speed loop: PI by default (kd stays 0 unless configured)."""

    gains: PidGains = PidGains(kp=0.5, ki=0.2, kd=0.0)
    integ_limit: float = 1.0

    def validate(self) -> None:
        self.gains.validate()
        if self.integ_limit < 0.0:
            raise ValueError("speed integ_limit must be >= 0")


def wrap_angle(a: float) -> float:
    """Normalize an angle to [-pi, pi); idempotent."""
    if not math.isfinite(a):
        raise ValueError("angle must be finite")
    return _K.wrap_angle(a)


def pid_step(gains: PidGains, state: PidState, error: float, dt_s: float,
             integ_limit: float) -> tuple[float, PidState]:
    """One PID update: clamped-integral advance, then output.

    The derivative acts on the error and is zero on the first call.
    """
    if dt_s <= 0.0:
        raise ValueError("dt_s must be > 0")
    out, integral = _K.pid_step(
        gains.kp, gains.ki, gains.kd,
        state.integral, state.prev_error, state.initialized,
        error, dt_s, integ_limit)
    return out, PidState(integral=integral, prev_error=error, initialized=True)


def heading_to_rate(heading_err_rad: float, cfg: SteeringConfig) -> float:
    """Outer angle loop: P on heading error, clamped to the rate limit."""
    return _K.clamp(cfg.ang_p * heading_err_rad,
                    -cfg.rat_max_radps, cfg.rat_max_radps)


def slew_limit(desired_rate: float, prev_target: float,
               acc_max_radps2: float, dt_s: float) -> float:
    """Bound the per-step change of the rate target."""
    if dt_s <= 0.0:
        raise ValueError("dt_s must be > 0")
    return _K.slew_limit(desired_rate, prev_target, acc_max_radps2 * dt_s)


def rate_to_steering(target_rate: float, measured_rate: float,
                     cfg: SteeringConfig, pid: PidState, dt_s: float,
                     ) -> tuple[float, PidState]:
    """Inner rate loop: PID on rate error, output clamped to [-1, 1].

    When the output saturates the integral is not advanced that step,
    on top of the hard clamp inside pid_step.
    """
    out, new_state = pid_step(cfg.rat_gains, pid, target_rate - measured_rate,
                              dt_s, cfg.integ_limit)
    steering = _K.clamp(out, -1.0, 1.0)
    if steering != out:
        new_state = replace(new_state, integral=pid.integral)
    return steering, new_state


def speed_to_throttle(target_speed: float, measured_speed: float,
                      gains: PidGains, pid: PidState, dt_s: float,
                      integ_limit: float = 1.0,
                      out_min: float = -1.0, out_max: float = 1.0,
                      ) -> tuple[float, PidState]:
    """Speed loop with the same conditional anti-windup as the rate loop.

    ``out_min`` lets guidance forbid reverse thrust (floor at 0) in the
    autonomous modes.
    """
    out, new_state = pid_step(gains, pid, target_speed - measured_speed,
                              dt_s, integ_limit)
    throttle = _K.clamp(out, out_min, out_max)
    if throttle != out:
        new_state = replace(new_state, integral=pid.integral)
    return throttle, new_state


class HeadingCascade:
    """Stateful wrapper: heading error + measured rate -> steering.

    Keeps the rate-loop PID state and the slewed rate target between
    ticks. ``relax`` decays the target toward zero while another mode
    (e.g. manual) owns the actuators, keeping the target continuous.
    """

    def __init__(self, cfg: SteeringConfig):
        cfg.validate()
        self.cfg = cfg
        self.pid = PidState()
        self.rate_target_radps = 0.0

    def step(self, heading_err_rad: float, measured_rate: float,
             dt_s: float) -> tuple[float, float]:
        desired = heading_to_rate(heading_err_rad, self.cfg)
        self.rate_target_radps = slew_limit(
            desired, self.rate_target_radps, self.cfg.acc_max_radps2, dt_s)
        steering, self.pid = rate_to_steering(
            self.rate_target_radps, measured_rate, self.cfg, self.pid, dt_s)
        return steering, self.rate_target_radps

    def relax(self, dt_s: float) -> float:
        self.rate_target_radps = slew_limit(
            0.0, self.rate_target_radps, self.cfg.acc_max_radps2, dt_s)
        return self.rate_target_radps

    def reset(self) -> None:
        self.pid = PidState()
        self.rate_target_radps = 0.0


class SpeedLoop:
    """Stateful wrapper around speed_to_throttle."""

    def __init__(self, cfg: SpeedConfig):
        cfg.validate()
        self.cfg = cfg
        self.pid = PidState()

    def step(self, target_speed: float, measured_speed: float, dt_s: float,
             out_min: float = -1.0, out_max: float = 1.0) -> float:
        throttle, self.pid = speed_to_throttle(
            target_speed, measured_speed, self.cfg.gains, self.pid, dt_s,
            self.cfg.integ_limit, out_min, out_max)
        return throttle

    def reset(self) -> None:
        self.pid = PidState()
