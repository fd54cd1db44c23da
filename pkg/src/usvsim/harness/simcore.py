"""One-tick simulation core shared by the headless runner and the server.

Per tick, in order: scripted ground-station sends (heartbeats, mode
events) and injected live messages enter the uplink; due uplink
messages are applied to the vessel (heartbeats first, then commands in
arrival order); the target script publishes a track; the heartbeat
failsafe is evaluated; guidance produces actuator commands; the vessel
integrates; downlink state reports are emitted; a trace record is
appended. Everything is keyed to the tick index, so a run is a pure
function of (scenario, seeds) and live injections.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Optional

import numpy as np

from .. import dynamics, telemetry
from ..guidance import (GuidanceConfig, GuidanceController, Mission, Mode,
                        TargetTrack, Waypoint)
from ..telemetry import (CommandManual, Heartbeat, LinkSimulator, MissionAck,
                         MissionUpload, SetMode, StateReport, TargetReport,
                         failsafe_check, q6)
from .config import Scenario
from .trace import TraceRecord

log = logging.getLogger("usvsim.harness")


class SimCore:
    """Deterministic fixed-step simulation of one scenario."""

    def __init__(self, scenario: Scenario):
        self.scn = scenario
        self.dt = scenario.dt_s
        self.tick_index = 0
        self.vessel = dynamics.VesselSim(scenario.vessel, scenario.environment,
                                         scenario.initial_state)
        self.controller = GuidanceController(GuidanceConfig(
            steering=scenario.steering,
            speed=scenario.speed,
            follow=scenario.follow,
            lookahead_m=scenario.guidance.lookahead_m,
            track_max_age_s=scenario.guidance.track_max_age_s,
        ))
        self.controller.hold_heading_rad = scenario.initial_state.heading_rad
        if scenario.mission is not None:
            self.controller.set_mission(scenario.mission,
                                        scenario.initial_state)

        self.link_cfg = scenario.link
        self.uplink: Optional[LinkSimulator] = None
        self.downlink: Optional[LinkSimulator] = None
        if self.link_cfg is not None:
            self.uplink = LinkSimulator(self.link_cfg.model)
            down_model = dataclasses.replace(self.link_cfg.model,
                                             seed=self.link_cfg.model.seed + 1)
            self.downlink = LinkSimulator(down_model)
        self.script_gcs_enabled = self.link_cfg is not None
        self.failsafe_timeout_s = (self.link_cfg.failsafe_timeout_s
                                   if self.link_cfg else 2.0)

        self._gcs_seq = telemetry.SeqCounter()
        self._vessel_seq = telemetry.SeqCounter()
        self._last_hb_s: Optional[float] = None
        self.failsafe_active = False

        self._mode_event_cursor = 0
        self._report_every = max(1, round(1.0 / (scenario.report_hz * self.dt)))
        if scenario.target is not None:
            hz = scenario.target.report_hz
            self._target_every = max(1, round(1.0 / (hz * self.dt)))
            # distinct from the env (seed) and link (seed+1, seed+2) streams
            self._target_rng = np.random.default_rng(scenario.seed + 3)
        else:
            self._target_every = 0
            self._target_rng = None
        if self.link_cfg is not None:
            self._hb_every = max(
                1, round(self.link_cfg.heartbeat_period_s / self.dt))
        else:
            self._hb_every = 0

        self._injected: list = []
        self.records: list[TraceRecord] = []

    # ------------------------------------------------------------ inputs

    @property
    def now_s(self) -> float:
        return self.vessel.state.t_s

    def inject(self, msg) -> None:
        """Queue a live ground-station message for the next tick's uplink."""
        self._injected.append(msg)

    def suspend_script_gcs(self) -> None:
        """A live operator has taken over; the scripted one goes quiet."""
        if self.script_gcs_enabled:
            log.info("scripted ground station suspended (live operator)")
        self.script_gcs_enabled = False

    # ------------------------------------------------------------- tick

    def tick(self) -> list:
        """Advance one step; returns downlink messages delivered this tick."""
        now = self.now_s
        state = self.vessel.state
        gcs = self.link_cfg.gcs_pos if self.link_cfg else (0.0, 0.0)
        vessel_pos = (state.x_m, state.y_m)

        # scripted + live ground station -> uplink
        if self.uplink is not None:
            if self.script_gcs_enabled and self._hb_every \
                    and self.tick_index % self._hb_every == 0 \
                    and not self._in_hb_gap(now):
                hb = Heartbeat(seq=self._gcs_seq.take(), t_s=q6(now))
                self.uplink.transfer(gcs, vessel_pos, hb, now)
            if self.script_gcs_enabled:
                for ev in self._due_mode_events(now):
                    self.uplink.transfer(
                        gcs, vessel_pos,
                        SetMode(seq=self._gcs_seq.take(), mode=ev.mode.value),
                        now)
                    if ev.mode is Mode.MANUAL:
                        self.uplink.transfer(
                            gcs, vessel_pos,
                            CommandManual(seq=self._gcs_seq.take(),
                                          throttle=q6(ev.throttle),
                                          steering=q6(ev.steering)),
                            now)
            for msg in self._injected:
                self.uplink.transfer(gcs, vessel_pos, msg, now)
            self._injected.clear()
            arrivals = self.uplink.due(now)
        else:
            # no radio: scripted events act directly on the vessel
            arrivals = []
            for ev in self._due_mode_events(now):
                arrivals.append(SetMode(seq=self._gcs_seq.take(),
                                        mode=ev.mode.value))
                if ev.mode is Mode.MANUAL:
                    arrivals.append(CommandManual(seq=self._gcs_seq.take(),
                                                  throttle=q6(ev.throttle),
                                                  steering=q6(ev.steering)))
            self._injected.clear()

        # heartbeats first, then commands in arrival order
        for msg in arrivals:
            if isinstance(msg, Heartbeat):
                self._last_hb_s = now
        self._update_failsafe(now)
        replies = []
        for msg in arrivals:
            if not isinstance(msg, Heartbeat):
                reply = self._apply_command(msg, state)
                if reply is not None:
                    replies.append(reply)

        # ground-truth target track (optionally noisy)
        if self._target_every and self.tick_index % self._target_every == 0:
            self._publish_track(now)

        throttle, steering, mode, diag = self.controller.mode_step(
            state, now, self.dt, failsafe_active=self.failsafe_active)
        thr = dynamics.mix_thrust(throttle, steering)
        new_state = self.vessel.step(thr, self.dt)

        # downlink: command replies plus decimated state reports
        delivered = []
        if self.downlink is not None:
            for reply in replies:
                self.downlink.transfer(vessel_pos, gcs, reply, now)
            if self.tick_index % self._report_every == 0:
                report = StateReport(
                    seq=self._vessel_seq.take(), t_s=q6(now),
                    x_m=q6(state.x_m), y_m=q6(state.y_m),
                    heading_rad=q6(state.heading_rad),
                    surge_mps=q6(state.surge_mps),
                    yaw_rate_radps=q6(state.yaw_rate_radps),
                    mode=mode.value, battery_pct=100.0,
                    xte_m=None if diag.xte_m is None else q6(diag.xte_m),
                    in_frame=diag.in_frame)
                self.downlink.transfer(vessel_pos, gcs, report, now)
            delivered = self.downlink.due(now)

        self._append_record(state, thr, mode, diag, now)
        self.tick_index += 1
        return delivered

    def run(self, n_ticks: Optional[int] = None) -> None:
        if n_ticks is None:
            n_ticks = round(self.scn.duration_s / self.dt)
        for _ in range(n_ticks):
            self.tick()

    # ---------------------------------------------------------- helpers

    def _in_hb_gap(self, t_s: float) -> bool:
        assert self.link_cfg is not None
        # half-tick epsilon: accumulated sim time drifts ~1e-13 below
        # nominal tick times, which must not shift gap boundaries
        t = t_s + self.dt * 0.5
        for start, end in self.link_cfg.heartbeat_gaps:
            if start <= t < end:
                return True
        return False

    def _due_mode_events(self, now: float):
        events = []
        eps = self.dt * 0.5
        while self._mode_event_cursor < len(self.scn.mode_events):
            ev = self.scn.mode_events[self._mode_event_cursor]
            if ev.t_s <= now + eps:
                events.append(ev)
                self._mode_event_cursor += 1
            else:
                break
        return events

    def _update_failsafe(self, now: float) -> None:
        if self.link_cfg is None:
            self.failsafe_active = False
            return
        if self._last_hb_s is None:
            self.failsafe_active = True
        else:
            self.failsafe_active = failsafe_check(
                self._last_hb_s, now, self.failsafe_timeout_s)

    def _apply_command(self, msg, state) -> Optional[object]:
        if isinstance(msg, SetMode):
            self.controller.request_mode(Mode.parse(msg.mode), state,
                                         self.failsafe_active)
        elif isinstance(msg, CommandManual):
            self.controller.set_manual(msg.throttle, msg.steering)
        elif isinstance(msg, TargetReport):
            self.controller.update_track(TargetTrack(
                x_m=msg.x_m, y_m=msg.y_m, vx_mps=msg.vx_mps,
                vy_mps=msg.vy_mps, t_s=msg.t_s))
        elif isinstance(msg, MissionUpload):
            return self._handle_mission_upload(msg, state)
        else:
            log.debug("ignoring uplink message %s", type(msg).__name__)
        return None

    def _handle_mission_upload(self, msg: MissionUpload, state) -> MissionAck:
        try:
            mission = Mission(waypoints=tuple(
                Waypoint(w.x_m, w.y_m, w.speed_mps, w.accept_radius_m)
                for w in msg.waypoints))
            mission.validate()
        except ValueError as exc:
            log.warning("mission upload rejected: %s", exc)
            return MissionAck(seq=self._vessel_seq.take(), count=0, ok=False)
        self.controller.set_mission(mission, state)
        return MissionAck(seq=self._vessel_seq.take(),
                          count=len(mission.waypoints), ok=True)

    def _publish_track(self, now: float) -> None:
        assert self.scn.target is not None
        x, y, vx, vy = self.scn.target.sample(now)
        if self.scn.target.noise_std_m > 0.0:
            nx, ny = self._target_rng.standard_normal(2)
            x += self.scn.target.noise_std_m * nx
            y += self.scn.target.noise_std_m * ny
        self.controller.update_track(TargetTrack(x_m=x, y_m=y, vx_mps=vx,
                                                 vy_mps=vy, t_s=now))

    def _append_record(self, state, thr, mode, diag, now: float) -> None:
        hb_age = None
        if self.link_cfg is not None and self._last_hb_s is not None:
            hb_age = now - self._last_hb_s
        sent = delivered = dropped = 0
        for sim in (self.uplink, self.downlink):
            if sim is not None:
                sent += sim.stats.sent
                delivered += sim.stats.delivered
                dropped += sim.stats.dropped_range + sim.stats.dropped_loss
        self.records.append(TraceRecord.quantized(
            t_s=now, x_m=state.x_m, y_m=state.y_m,
            heading_rad=state.heading_rad, surge_mps=state.surge_mps,
            yaw_rate_radps=state.yaw_rate_radps,
            left=thr.left, right=thr.right, mode=mode.value,
            target_heading_rad=diag.target_heading_rad,
            target_rate_radps=diag.target_rate_radps,
            target_speed_mps=diag.target_speed_mps,
            heading_err_rad=diag.heading_err_rad,
            xte_m=diag.xte_m, wp_index=diag.wp_index,
            target_x_m=diag.target_x_m, target_y_m=diag.target_y_m,
            target_dist_m=diag.target_dist_m,
            standoff_err_m=diag.standoff_err_m, in_frame=diag.in_frame,
            hb_age_s=hb_age, failsafe=self.failsafe_active,
            link_sent=sent, link_delivered=delivered, link_dropped=dropped))
