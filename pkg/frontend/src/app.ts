/**
 * Browser wiring: DOM controls and render loop over a GcsSession
 * connected to the simulator's /link WebSocket gateway.
 *
 * Keyboard teleop: W/S throttle, A/D steering (arrows work too);
 * releasing all keys sends the single zeroed command. Click the map to
 * append a waypoint to the mission draft.
 */

import { Mode } from "./protocol.js";
import { drawMap, drawStrip, MapView, screenToWorld } from "./render.js";
import { GcsSession } from "./session.js";
import { WebSocketFactory, wsUrl } from "./transport.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(location.search);
const port = Number(params.get("ws") ?? "8080");
const session = new GcsSession(new WebSocketFactory(wsUrl(location, port)));

const mapCanvas = el<HTMLCanvasElement>("map");
const chartHeading = el<HTMLCanvasElement>("chart-heading");
const chartSpeed = el<HTMLCanvasElement>("chart-speed");
const chartXte = el<HTMLCanvasElement>("chart-xte");
const view: MapView = { centerX: 0, centerY: 0, pxPerM: 3 };
let followVessel = true;

// ----------------------------------------------------------- teleop keys

const keys = new Set<string>();
const KEY_AXES: Record<string, [number, number]> = {
  w: [1, 0], s: [-1, 0], a: [0, -1], d: [0, 1],
  ArrowUp: [1, 0], ArrowDown: [-1, 0], ArrowLeft: [0, -1], ArrowRight: [0, 1],
};

function pushTeleop(): void {
  let throttle = 0;
  let steering = 0;
  for (const k of keys) {
    const axes = KEY_AXES[k];
    if (axes) {
      throttle += axes[0];
      steering += axes[1];
    }
  }
  const sliderT = Number(el<HTMLInputElement>("throttle").value);
  const sliderS = Number(el<HTMLInputElement>("steering").value);
  if (keys.size === 0 && (sliderT !== 0 || sliderS !== 0)) {
    throttle = sliderT;
    steering = sliderS;
  }
  const active = throttle !== 0 || steering !== 0;
  session.setTeleop(throttle, steering, active);
}

document.addEventListener("keydown", (ev) => {
  if (ev.key in KEY_AXES && !(ev.target instanceof HTMLInputElement)) {
    keys.add(ev.key);
    pushTeleop();
    ev.preventDefault();
  }
});
document.addEventListener("keyup", (ev) => {
  if (keys.delete(ev.key)) {
    pushTeleop();
    ev.preventDefault();
  }
});
for (const id of ["throttle", "steering"]) {
  el<HTMLInputElement>(id).addEventListener("input", pushTeleop);
}
el<HTMLButtonElement>("sticks-zero").addEventListener("click", () => {
  el<HTMLInputElement>("throttle").value = "0";
  el<HTMLInputElement>("steering").value = "0";
  pushTeleop();
});

// -------------------------------------------------------------- controls

for (const mode of ["manual", "hold", "auto", "follow"] as Mode[]) {
  el<HTMLButtonElement>(`mode-${mode}`).addEventListener("click", () => {
    session.requestMode(mode);
  });
}

mapCanvas.addEventListener("click", (ev) => {
  const rect = mapCanvas.getBoundingClientRect();
  const [x, y] = screenToWorld(view, mapCanvas.width, mapCanvas.height,
                               ev.clientX - rect.left, ev.clientY - rect.top);
  if (ev.shiftKey) {
    // shift-click designates the follow target
    session.designateTarget(Math.round(x * 10) / 10, Math.round(y * 10) / 10);
    return;
  }
  session.addDraftWaypoint({
    x_m: Math.round(x * 10) / 10,
    y_m: Math.round(y * 10) / 10,
    speed_mps: Number(el<HTMLInputElement>("wp-speed").value),
    accept_radius_m: Number(el<HTMLInputElement>("wp-radius").value),
  });
});

el<HTMLButtonElement>("clear-target").addEventListener("click", () => {
  session.clearTarget();
});

el<HTMLButtonElement>("upload").addEventListener("click", () => {
  const problems = session.uploadMission();
  el<HTMLElement>("draft-problems").textContent = problems.join("; ");
});
el<HTMLButtonElement>("draft-clear").addEventListener("click", () => {
  while (session.state.missionDraft.length > 0) {
    session.removeDraftWaypoint(0);
  }
});
el<HTMLInputElement>("zoom").addEventListener("input", () => {
  view.pxPerM = Number(el<HTMLInputElement>("zoom").value);
});
el<HTMLInputElement>("follow-vessel").addEventListener("change", (ev) => {
  followVessel = (ev.target as HTMLInputElement).checked;
});

// ----------------------------------------------------------------- render

function badge(id: string, text: string, cls: string): void {
  const node = el<HTMLElement>(id);
  node.textContent = text;
  node.className = `badge ${cls}`;
}

function renderSidebar(): void {
  const s = session.state;
  badge("b-conn", s.status,
        s.status === "connected" ? "ok" : s.status === "closed" ? "" : "warn");
  const authLabel = s.authority === "granted" ? "in control"
    : s.authority === "readonly" ? "read-only" : "authority unknown";
  badge("b-auth", authLabel, s.authority === "granted" ? "ok"
        : s.authority === "readonly" ? "warn" : "");
  badge("b-mode", s.lastReport ? s.lastReport.mode : "-",
        s.lastReport?.mode === "hold" ? "warn" : "ok");
  badge("b-failsafe", s.failsafeWarning ? "FAILSAFE RISK" : "link ok",
        s.failsafeWarning ? "bad" : "ok");
  if (s.linkDistanceM !== null) {
    badge("b-link", `${s.linkDistanceM.toFixed(0)} m / ${session.opts.maxRangeM} m`,
          s.linkCritical ? "bad" : "ok");
  }
  el<HTMLElement>("proto-banner").style.display = s.protoMismatch ? "block" : "none";
  el<HTMLElement>("mode-prompt").textContent = s.modePrompt ?? "";
  el<HTMLElement>("last-seen").textContent = s.lastReportAtMs
    ? `last report ${((Date.now() - s.lastReportAtMs) / 1000).toFixed(1)} s ago`
    : "no telemetry yet";

  const upload = el<HTMLElement>("upload-state");
  upload.textContent = s.uploadState === "idle" ? ""
    : s.uploadState === "pending" ? "uploading..."
    : s.uploadState === "acked" ? `mission active (${s.uploadCount} wp)`
    : s.uploadState === "rejected" ? "rejected by vessel"
    : "no ack - retry?";

  const list = el<HTMLElement>("draft-list");
  list.innerHTML = "";
  s.missionDraft.forEach((wp, i) => {
    const row = document.createElement("li");
    row.textContent =
      `${i + 1}: (${wp.x_m.toFixed(1)}, ${wp.y_m.toFixed(1)}) ` +
      `${wp.speed_mps} m/s r=${wp.accept_radius_m}`;
    const del = document.createElement("button");
    del.textContent = "x";
    del.addEventListener("click", () => session.removeDraftWaypoint(i));
    row.appendChild(del);
    list.appendChild(row);
  });
}

function renderCanvases(): void {
  const s = session.state;
  if (followVessel && s.lastReport) {
    view.centerX = s.lastReport.x_m;
    view.centerY = s.lastReport.y_m;
  }
  const ctx = mapCanvas.getContext("2d")!;
  drawMap(ctx, mapCanvas.width, mapCanvas.height, view, {
    report: s.lastReport,
    trail: s.trail,
    mission: s.activeMission,
    draft: s.missionDraft,
    target: s.designatedTarget,
    fovRad: Math.PI / 3,
    maxRangeM: session.opts.maxRangeM,
    stale: s.stale,
  });
  drawStrip(chartHeading.getContext("2d")!, chartHeading.width,
            chartHeading.height, s.buffers,
            (p) => (p.heading_rad * 180) / Math.PI, "heading deg", "#7ec8ff");
  drawStrip(chartSpeed.getContext("2d")!, chartSpeed.width, chartSpeed.height,
            s.buffers, (p) => p.surge_mps, "speed m/s", "#63e6be");
  drawStrip(chartXte.getContext("2d")!, chartXte.width, chartXte.height,
            s.buffers, (p) => p.xte_m, "cross-track m", "#ffd43b");
}

let dirty = true;
session.onChange = () => {
  dirty = true;
};

function frame(): void {
  if (dirty) {
    dirty = false;
    renderSidebar();
  }
  renderCanvases();
  requestAnimationFrame(frame);
}

session.connect();
requestAnimationFrame(frame);
