"""Guidance: setpoints for the steering/speed loops plus the mode machine.

Waypoint routes are followed with pure pursuit (carrot point a fixed
lookahead along the active segment); moving targets are followed by
steering at a constant-velocity prediction and regulating distance to a
standoff. The mode machine covers manual passthrough, position-less
heading hold, waypoint auto, and target follow, with every failure
path (stale track, finished mission, link failsafe) degrading to hold.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

from .dynamics import VesselState
from .steering import (HeadingCascade, SpeedConfig, SpeedLoop, SteeringConfig,
                       wrap_angle)

log = logging.getLogger("usvsim.guidance")

DEFAULT_TRACK_MAX_AGE_S = 2.0


class GuidanceError(ValueError):
    """Malformed guidance input (degenerate segment, coincident points)."""


class TrackLostError(GuidanceError):
    """Target track is older than the configured maximum age."""


class _MissionComplete(GuidanceError):
    """Internal control flow: mission index reached the end."""


class Mode(enum.Enum):
    MANUAL = "manual"
    HOLD = "hold"
    AUTO = "auto"
    FOLLOW = "follow"

    @classmethod
    def parse(cls, name: str) -> "Mode":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise GuidanceError(f"unknown mode {name!r}") from None


@dataclass(frozen=True)
class Waypoint:
    x_m: float
    y_m: float
    speed_mps: float
    accept_radius_m: float

    def validate(self) -> None:
        if not (self.accept_radius_m > 0.0):
            raise ValueError("accept_radius_m must be > 0")
        if self.speed_mps < 0.0:
            raise ValueError("speed_mps must be >= 0")
        if not all(math.isfinite(v) for v in
                   (self.x_m, self.y_m, self.speed_mps, self.accept_radius_m)):
            raise ValueError("waypoint fields must be finite")


@dataclass(frozen=True)
class Mission:
    waypoints: tuple[Waypoint, ...]
    current_index: int = 0

    def validate(self) -> None:
        if not self.waypoints:
            raise ValueError("mission needs at least one waypoint")
        for wp in self.waypoints:
            wp.validate()
        if not (0 <= self.current_index <= len(self.waypoints)):
            raise ValueError("current_index out of range")

    @property
    def complete(self) -> bool:
        return self.current_index >= len(self.waypoints)


@dataclass(frozen=True)
class TargetTrack:
    """Last observed target position/velocity, stamped t_s."""

    x_m: float
    y_m: float
    vx_mps: float = 0.0
    vy_mps: float = 0.0
    t_s: float = 0.0


@dataclass(frozen=True)
class FollowPolicy:
    """Target-follow shaping: standoff plus a distance-error speed law."""

    standoff_m: float = 10.0
    approach_gain: float = 0.3
    max_speed_mps: float = 3.0
    fov_rad: float = math.radians(60.0)

    def validate(self) -> None:
        if not (self.standoff_m > 0.0):
            raise ValueError("standoff_m must be > 0")
        if not (0.0 < self.fov_rad < math.pi):
            raise ValueError("fov_rad must be in (0, pi)")
        if self.approach_gain < 0.0 or self.max_speed_mps < 0.0:
            raise ValueError("gain and max speed must be >= 0")


# ------------------------------------------------------------- pure ops

def _segment_dir(seg_start: Waypoint, seg_end: Waypoint) -> tuple[float, float, float]:
    dx = seg_end.x_m - seg_start.x_m
    dy = seg_end.y_m - seg_start.y_m
    length = math.hypot(dx, dy)
    if length == 0.0:
        raise GuidanceError("degenerate mission segment (coincident waypoints)")
    return dx / length, dy / length, length


def cross_track_error(seg_start: Waypoint, seg_end: Waypoint,
                      pos: tuple[float, float]) -> float:
    """Signed perpendicular distance to the segment line.

    Positive when pos lies to the right of the start->end direction.
    """
    ux, uy, _ = _segment_dir(seg_start, seg_end)
    rx = pos[0] - seg_start.x_m
    ry = pos[1] - seg_start.y_m
    return uy * rx - ux * ry


def pursuit_heading(pos: tuple[float, float], seg_start: Waypoint,
                    seg_end: Waypoint, lookahead_m: float) -> float:
    """Compass heading toward the carrot point on the segment.

    The carrot sits lookahead_m past the projection of pos onto the
    segment, clamped to the segment end.
    """
    if lookahead_m <= 0.0:
        raise GuidanceError("lookahead_m must be > 0")
    ux, uy, length = _segment_dir(seg_start, seg_end)
    rx = pos[0] - seg_start.x_m
    ry = pos[1] - seg_start.y_m
    along = rx * ux + ry * uy
    s = min(max(along, 0.0) + lookahead_m, length)
    cx = seg_start.x_m + ux * s
    cy = seg_start.y_m + uy * s
    return math.atan2(cx - pos[0], cy - pos[1])


def advance_mission(mission: Mission, pos: tuple[float, float]) -> Mission:
    """Advance past every waypoint whose accept radius contains pos."""
    idx = mission.current_index
    wps = mission.waypoints
    while idx < len(wps):
        wp = wps[idx]
        if math.hypot(pos[0] - wp.x_m, pos[1] - wp.y_m) <= wp.accept_radius_m:
            idx += 1
        else:
            break
    if idx == mission.current_index:
        return mission
    return replace(mission, current_index=idx)


def predict_target(track: TargetTrack, now_s: float,
                   max_age_s: float = DEFAULT_TRACK_MAX_AGE_S,
                   ) -> tuple[float, float]:
    """Constant-velocity extrapolation; stale tracks raise TrackLostError."""
    age = now_s - track.t_s
    if age < 0.0:
        raise GuidanceError("track is from the future")
    if age > max_age_s:
        raise TrackLostError(f"track age {age:.2f}s exceeds {max_age_s:.2f}s")
    return track.x_m + age * track.vx_mps, track.y_m + age * track.vy_mps


def follow_setpoints(state: VesselState, track: TargetTrack,
                     policy: FollowPolicy, now_s: float,
                     max_age_s: float = DEFAULT_TRACK_MAX_AGE_S,
                     ) -> tuple[float, float]:
    """(desired heading, desired speed) to hold the standoff distance.

    Speed combines the distance-error term with the target's speed
    projected on the line of sight, so a receding target is matched at
    the standoff instead of chased from behind.
    """
    tx, ty = predict_target(track, now_s, max_age_s)
    dx = tx - state.x_m
    dy = ty - state.y_m
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise GuidanceError("vessel and target are coincident")
    heading = math.atan2(dx, dy)
    los_speed = (track.vx_mps * dx + track.vy_mps * dy) / dist
    speed = policy.approach_gain * (dist - policy.standoff_m) + los_speed
    speed = min(max(speed, 0.0), policy.max_speed_mps)
    return heading, speed


def in_frame(heading_rad: float, vessel_pos: tuple[float, float],
             target_pos: tuple[float, float], fov_rad: float) -> bool:
    """True when the target bearing is within half the FOV of boresight."""
    dx = target_pos[0] - vessel_pos[0]
    dy = target_pos[1] - vessel_pos[1]
    if dx == 0.0 and dy == 0.0:
        raise GuidanceError("bearing undefined for coincident positions")
    bearing = math.atan2(dx, dy)
    return abs(wrap_angle(bearing - heading_rad)) <= fov_rad / 2.0


# ------------------------------------------------------- mode controller

@dataclass
class Diagnostics:
    """Per-tick guidance observables recorded into the trace."""

    heading_err_rad: float = 0.0
    target_heading_rad: float = 0.0
    target_rate_radps: float = 0.0
    target_speed_mps: float = 0.0
    xte_m: float | None = None
    wp_index: int | None = None
    target_x_m: float | None = None
    target_y_m: float | None = None
    target_dist_m: float | None = None
    standoff_err_m: float | None = None
    in_frame: bool | None = None


@dataclass
class GuidanceConfig:
    steering: SteeringConfig = field(default_factory=SteeringConfig)
    speed: SpeedConfig = field(default_factory=SpeedConfig)
    follow: FollowPolicy = field(default_factory=FollowPolicy)
    lookahead_m: float = 5.0
    track_max_age_s: float = DEFAULT_TRACK_MAX_AGE_S

    def validate(self) -> None:
        self.steering.validate()
        self.speed.validate()
        self.follow.validate()
        if self.lookahead_m <= 0.0 or self.track_max_age_s <= 0.0:
            raise ValueError("lookahead_m and track_max_age_s must be > 0")


class GuidanceController:
    """Mode machine wiring the pure ops through the control cascades.

    One mode_step call per simulation tick. Inner-op failures (stale
    track, degenerate segment) degrade to HOLD and are logged, never
    raised out of the tick.
    """

    def __init__(self, cfg: GuidanceConfig):
        cfg.validate()
        self.cfg = cfg
        self.mode = Mode.HOLD
        self.hold_heading_rad = 0.0
        self.mission: Mission | None = None
        self.leg_origin: tuple[float, float] | None = None
        self.track: TargetTrack | None = None
        self.manual_cmd: tuple[float, float] = (0.0, 0.0)
        self.cascade = HeadingCascade(cfg.steering)
        self.speed_loop = SpeedLoop(cfg.speed)

    # -- inputs -----------------------------------------------------

    def request_mode(self, mode: Mode, state: VesselState,
                     failsafe_active: bool = False) -> bool:
        """Operator/script mode change; refused while the failsafe holds."""
        if failsafe_active and mode is not Mode.HOLD:
            log.warning("mode request %s refused: link failsafe active", mode.value)
            return False
        if mode is Mode.AUTO and self.mission is None:
            log.warning("mode request auto refused: no mission loaded")
            return False
        if mode is Mode.HOLD:
            # re-anchor even when already holding
            self.hold_heading_rad = state.heading_rad
        self._transition(mode, state, "requested")
        return True

    def set_mission(self, mission: Mission, state: VesselState) -> None:
        mission.validate()
        self.mission = mission
        self.leg_origin = self._leg_origin_for(mission, state)
        log.info("mission loaded: %d waypoints", len(mission.waypoints))

    def update_track(self, track: TargetTrack) -> None:
        self.track = track

    def set_manual(self, throttle: float, steering: float) -> None:
        self.manual_cmd = (min(max(throttle, -1.0), 1.0),
                           min(max(steering, -1.0), 1.0))

    # -- internals ---------------------------------------------------

    def _leg_origin_for(self, mission: Mission, state: VesselState,
                        ) -> tuple[float, float]:
        if mission.current_index == 0 or mission.complete:
            return (state.x_m, state.y_m)
        prev = mission.waypoints[mission.current_index - 1]
        return (prev.x_m, prev.y_m)

    def _transition(self, mode: Mode, state: VesselState, reason: str) -> None:
        if mode is self.mode:
            return
        log.info("mode %s -> %s (%s)", self.mode.value, mode.value, reason)
        self.mode = mode
        if mode is Mode.HOLD:
            self.hold_heading_rad = state.heading_rad
        elif mode is Mode.AUTO and self.mission is not None:
            self.leg_origin = self._leg_origin_for(self.mission, state)

    # -- the per-tick step -------------------------------------------

    def mode_step(self, state: VesselState, now_s: float, dt_s: float,
                  failsafe_active: bool = False,
                  ) -> tuple[float, float, Mode, Diagnostics]:
        """One guidance tick: returns (throttle, steering, mode, diagnostics)."""
        diag = Diagnostics()
        if failsafe_active and self.mode is not Mode.HOLD:
            self._transition(Mode.HOLD, state, "link failsafe")

        desired_heading: float | None = None
        desired_speed = 0.0
        throttle_floor = -1.0

        if self.mode is Mode.AUTO:
            try:
                desired_heading, desired_speed = self._auto_setpoints(state, diag)
            except _MissionComplete:
                self._transition(Mode.HOLD, state, "mission complete")
            except GuidanceError as exc:
                log.warning("auto guidance failed (%s); holding", exc)
                self._transition(Mode.HOLD, state, "guidance error")
            else:
                throttle_floor = 0.0
        elif self.mode is Mode.FOLLOW:
            try:
                desired_heading, desired_speed = self._follow_setpoints(state, now_s, diag)
            except TrackLostError as exc:
                log.warning("target lost (%s); holding", exc)
                self._transition(Mode.HOLD, state, "track lost")
            except GuidanceError as exc:
                log.warning("follow guidance failed (%s); holding", exc)
                self._transition(Mode.HOLD, state, "guidance error")
            else:
                throttle_floor = 0.0

        if self.mode is Mode.HOLD:
            desired_heading = self.hold_heading_rad
            desired_speed = 0.0
            throttle_floor = -1.0

        self._frame_diag(state, now_s, diag)

        if self.mode is Mode.MANUAL:
            throttle, steering = self.manual_cmd
            diag.target_rate_radps = self.cascade.relax(dt_s)
            diag.target_heading_rad = state.heading_rad
            return throttle, steering, self.mode, diag

        assert desired_heading is not None
        err = wrap_angle(desired_heading - state.heading_rad)
        steering, rate_target = self.cascade.step(err, state.yaw_rate_radps, dt_s)
        throttle = self.speed_loop.step(desired_speed, state.surge_mps, dt_s,
                                        out_min=throttle_floor)
        diag.heading_err_rad = err
        diag.target_heading_rad = desired_heading
        diag.target_rate_radps = rate_target
        diag.target_speed_mps = desired_speed
        return throttle, steering, self.mode, diag

    def _auto_setpoints(self, state: VesselState, diag: Diagnostics):
        assert self.mission is not None
        pos = (state.x_m, state.y_m)
        advanced = advance_mission(self.mission, pos)
        if advanced.current_index != self.mission.current_index:
            # leg origin moves to the last waypoint just passed
            passed = advanced.current_index - 1
            wp = self.mission.waypoints[min(passed, len(self.mission.waypoints) - 1)]
            self.leg_origin = (wp.x_m, wp.y_m)
            self.mission = advanced
        diag.wp_index = self.mission.current_index
        if self.mission.complete:
            raise _MissionComplete("all waypoints reached")
        target_wp = self.mission.waypoints[self.mission.current_index]
        origin = self.leg_origin if self.leg_origin is not None else pos
        seg_start = Waypoint(origin[0], origin[1], target_wp.speed_mps,
                             target_wp.accept_radius_m)
        diag.xte_m = cross_track_error(seg_start, target_wp, pos)
        heading = pursuit_heading(pos, seg_start, target_wp, self.cfg.lookahead_m)
        return heading, target_wp.speed_mps

    def _follow_setpoints(self, state: VesselState, now_s: float,
                          diag: Diagnostics):
        if self.track is None:
            raise TrackLostError("no target track received")
        heading, speed = follow_setpoints(state, self.track, self.cfg.follow,
                                          now_s, self.cfg.track_max_age_s)
        return heading, speed

    def _frame_diag(self, state: VesselState, now_s: float,
                    diag: Diagnostics) -> None:
        if self.track is None:
            return
        try:
            tx, ty = predict_target(self.track, now_s, self.cfg.track_max_age_s)
        except GuidanceError:
            return
        diag.target_x_m = tx
        diag.target_y_m = ty
        dist = math.hypot(tx - state.x_m, ty - state.y_m)
        diag.target_dist_m = dist
        diag.standoff_err_m = dist - self.cfg.follow.standoff_m
        if dist > 0.0:
            diag.in_frame = in_frame(state.heading_rad,
                                     (state.x_m, state.y_m), (tx, ty),
                                     self.cfg.follow.fov_rad)
