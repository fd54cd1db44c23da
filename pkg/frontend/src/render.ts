/**
 * Canvas drawing for the local-frame map and the strip charts.
 * World frame: x east, y north, meters; headings are compass-style
 * (0 = north, clockwise). Screen y grows downward, so north is up.
 */

import { StateReport, WaypointSpec } from "./protocol.js";
import { TelemetrySample, TrailPoint } from "./session.js";

export interface MapView {
  centerX: number;
  centerY: number;
  pxPerM: number;
}

export interface MapScene {
  report: StateReport | null;
  trail: TrailPoint[];
  mission: WaypointSpec[] | null;
  draft: WaypointSpec[];
  target: { x_m: number; y_m: number } | null;
  fovRad: number;
  maxRangeM: number;
  stale: boolean;
}

export function worldToScreen(view: MapView, w: number, h: number,
                              x: number, y: number): [number, number] {
  return [w / 2 + (x - view.centerX) * view.pxPerM,
          h / 2 - (y - view.centerY) * view.pxPerM];
}

export function screenToWorld(view: MapView, w: number, h: number,
                              px: number, py: number): [number, number] {
  return [view.centerX + (px - w / 2) / view.pxPerM,
          view.centerY - (py - h / 2) / view.pxPerM];
}

export function drawMap(ctx: CanvasRenderingContext2D, w: number, h: number,
                        view: MapView, scene: MapScene): void {
  ctx.fillStyle = "#0b1620";
  ctx.fillRect(0, 0, w, h);
  drawGrid(ctx, w, h, view);
  drawRangeRing(ctx, w, h, view, scene.maxRangeM);

  if (scene.mission && scene.mission.length > 0) {
    drawRoute(ctx, w, h, view, scene.mission, "#3d9970", true);
  }
  if (scene.draft.length > 0) {
    drawRoute(ctx, w, h, view, scene.draft, "#c9a227", false);
  }

  if (scene.trail.length > 1) {
    ctx.strokeStyle = "rgba(120, 180, 255, 0.55)";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    scene.trail.forEach((p, i) => {
      const [px, py] = worldToScreen(view, w, h, p.x_m, p.y_m);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }

  if (scene.target) {
    const [px, py] = worldToScreen(view, w, h, scene.target.x_m, scene.target.y_m);
    ctx.strokeStyle = "#ff6b6b";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, 2 * Math.PI);
    ctx.moveTo(px - 11, py);
    ctx.lineTo(px + 11, py);
    ctx.moveTo(px, py - 11);
    ctx.lineTo(px, py + 11);
    ctx.stroke();
  }

  if (scene.report) {
    drawVessel(ctx, w, h, view, scene.report, scene.fovRad,
               targetInFov(scene));
  }

  if (scene.stale) {
    ctx.fillStyle = "rgba(10, 14, 18, 0.6)";
    ctx.fillRect(0, 0, w, h);
  }
}

function targetInFov(scene: MapScene): boolean {
  return scene.report?.diagnostics.in_frame === true;
}

function drawGrid(ctx: CanvasRenderingContext2D, w: number, h: number,
                  view: MapView): void {
  const stepM = niceStep(80 / view.pxPerM);
  const [x0, y1] = screenToWorld(view, w, h, 0, 0);
  const [x1, y0] = screenToWorld(view, w, h, w, h);
  ctx.strokeStyle = "rgba(255,255,255,0.07)";
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (let x = Math.ceil(x0 / stepM) * stepM; x <= x1; x += stepM) {
    const [px] = worldToScreen(view, w, h, x, 0);
    ctx.moveTo(px, 0);
    ctx.lineTo(px, h);
  }
  for (let y = Math.ceil(y0 / stepM) * stepM; y <= y1; y += stepM) {
    const [, py] = worldToScreen(view, w, h, 0, y);
    ctx.moveTo(0, py);
    ctx.lineTo(w, py);
  }
  ctx.stroke();
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(Math.max(raw, 1e-6))));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

function drawRangeRing(ctx: CanvasRenderingContext2D, w: number, h: number,
                       view: MapView, rangeM: number): void {
  const [px, py] = worldToScreen(view, w, h, 0, 0);
  ctx.strokeStyle = "rgba(255, 140, 0, 0.5)";
  ctx.setLineDash([6, 6]);
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(px, py, rangeM * view.pxPerM, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([]);
  // the ground station sits at the origin
  ctx.fillStyle = "#ffa94d";
  ctx.fillRect(px - 3, py - 3, 6, 6);
}

function drawRoute(ctx: CanvasRenderingContext2D, w: number, h: number,
                   view: MapView, wps: WaypointSpec[], color: string,
                   withRadii: boolean): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  wps.forEach((wp, i) => {
    const [px, py] = worldToScreen(view, w, h, wp.x_m, wp.y_m);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  wps.forEach((wp, i) => {
    const [px, py] = worldToScreen(view, w, h, wp.x_m, wp.y_m);
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(px, py, 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(String(i + 1), px + 6, py - 6);
    if (withRadii) {
      ctx.strokeStyle = color;
      ctx.globalAlpha = 0.3;
      ctx.beginPath();
      ctx.arc(px, py, wp.accept_radius_m * view.pxPerM, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.globalAlpha = 1.0;
    }
  });
}

function drawVessel(ctx: CanvasRenderingContext2D, w: number, h: number,
                    view: MapView, report: StateReport, fovRad: number,
                    highlightFov: boolean): void {
  const [px, py] = worldToScreen(view, w, h, report.x_m, report.y_m);
  const hdg = report.heading_rad;

  // camera FOV wedge along the boresight (= heading)
  const wedgeR = 36;
  const a0 = hdg - fovRad / 2;
  const a1 = hdg + fovRad / 2;
  ctx.fillStyle = highlightFov ? "rgba(80, 250, 160, 0.25)"
                               : "rgba(150, 180, 220, 0.15)";
  ctx.beginPath();
  ctx.moveTo(px, py);
  // compass angle a maps to screen angle (a - pi/2) with y flipped
  ctx.arc(px, py, wedgeR, a0 - Math.PI / 2, a1 - Math.PI / 2);
  ctx.closePath();
  ctx.fill();

  ctx.save();
  ctx.translate(px, py);
  ctx.rotate(hdg); // screen rotation: clockwise-positive matches compass
  ctx.fillStyle = "#7ec8ff";
  ctx.beginPath();
  ctx.moveTo(0, -10);
  ctx.lineTo(6, 8);
  ctx.lineTo(-6, 8);
  ctx.closePath();
  ctx.fill();
  ctx.restore();
}

export function drawStrip(ctx: CanvasRenderingContext2D, w: number, h: number,
                          samples: TelemetrySample[],
                          pick: (s: TelemetrySample) => number | null,
                          label: string, color: string): void {
  ctx.fillStyle = "#0b1620";
  ctx.fillRect(0, 0, w, h);
  ctx.fillStyle = "rgba(255,255,255,0.6)";
  ctx.font = "11px sans-serif";
  const points: Array<[number, number]> = [];
  for (const s of samples) {
    const v = pick(s);
    if (v !== null && Number.isFinite(v)) points.push([s.t_s, v]);
  }
  if (points.length < 2) {
    ctx.fillText(`${label} (no data)`, 6, 14);
    return;
  }
  const t1 = points[points.length - 1][0];
  const t0 = Math.min(points[0][0], t1 - 10);
  let lo = Infinity;
  let hi = -Infinity;
  for (const [, v] of points) {
    lo = Math.min(lo, v);
    hi = Math.max(hi, v);
  }
  if (hi - lo < 1e-6) {
    lo -= 0.5;
    hi += 0.5;
  }
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach(([t, v], i) => {
    const px = ((t - t0) / (t1 - t0)) * (w - 8) + 4;
    const py = h - 6 - ((v - lo) / (hi - lo)) * (h - 24);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  const last = points[points.length - 1][1];
  ctx.fillText(`${label}: ${last.toFixed(2)}  [${lo.toFixed(1)}, ${hi.toFixed(1)}]`, 6, 14);
}
