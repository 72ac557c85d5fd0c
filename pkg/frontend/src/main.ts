// DOM wiring for the planner: drag the transmitter, sweep altitude, toggle
// layers and EIRP, draw routes, read live statistics.

import { ApiClient } from "./api.js";
import {
  ALTITUDE_MAX_M,
  ALTITUDE_MIN_M,
  DEFAULT_EIRP_DBM,
  LayerChoice,
  PlannerSession,
} from "./session.js";
import { canvasToWorld, drawHistogram, drawScene, WorldTransform } from "./render.js";

const baseUrl = (window as { UXPROP_API?: string }).UXPROP_API ?? "";
const api = new ApiClient(baseUrl);
const session = new PlannerSession(api);

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const histCanvas = document.getElementById("hist") as HTMLCanvasElement;
const histCtx = histCanvas.getContext("2d")!;

const altSlider = document.getElementById("altitude") as HTMLInputElement;
const altLabel = document.getElementById("altitude-label")!;
const layerSelect = document.getElementById("layer") as HTMLSelectElement;
const eirpSelect = document.getElementById("eirp") as HTMLSelectElement;
const routeButton = document.getElementById("route-mode") as HTMLButtonElement;
const analyzeButton = document.getElementById("analyze") as HTMLButtonElement;
const clearRouteButton = document.getElementById("clear-route") as HTMLButtonElement;
const statusEl = document.getElementById("status")!;
const statsEl = document.getElementById("stats")!;

altSlider.min = String(ALTITUDE_MIN_M);
altSlider.max = String(ALTITUDE_MAX_M);
altSlider.value = "60";
for (const e of DEFAULT_EIRP_DBM) {
  const opt = document.createElement("option");
  opt.value = String(e);
  opt.textContent = `${e} dBm`;
  eirpSelect.appendChild(opt);
}

let transform: WorldTransform = { xmin: 0, ymin: 0, xmax: 1, ymax: 1 };
let mapImage: HTMLImageElement | null = null;
let mapImageSeq = 0;
let routeMode = false;
let waypoints: [number, number][] = [];

function fmtPct(v: number | null): string {
  return v === null ? "-" : (100 * v).toFixed(1) + "%";
}

function redraw(): void {
  const resp = session.route.response;
  drawScene(
    ctx,
    transform,
    mapImage,
    session.footprints,
    session.placement.tx,
    resp ? resp.trace.arc_s.map((_, i) => samplePoint(i)) : waypoints,
    resp ? resp.trace.states : [],
    session.layer === "outage" || resp ? session.routeOutageFlags() : []
  );
}

function samplePoint(i: number): [number, number] {
  // positions are reconstructed from the drawn waypoints for display only
  const resp = session.route.response!;
  const s = resp.trace.arc_s[i];
  let acc = 0;
  for (let k = 1; k < waypoints.length; k++) {
    const [x0, y0] = waypoints[k - 1];
    const [x1, y1] = waypoints[k];
    const seg = Math.hypot(x1 - x0, y1 - y0);
    if (acc + seg >= s || k === waypoints.length - 1) {
      const t = Math.min(Math.max((s - acc) / seg, 0), 1);
      return [x0 + t * (x1 - x0), y0 + t * (y1 - y0)];
    }
    acc += seg;
  }
  return waypoints[waypoints.length - 1];
}

function updateStats(): void {
  const p = session.placement;
  const runs = session.route.response?.runs ?? null;
  const outage = session.route.outage;
  const rows: [string, string][] = [
    ["P_LOS", fmtPct(p.pLos)],
    ["P_NLOS", fmtPct(p.pNlos)],
  ];
  if (runs) {
    rows.push(
      ["route length", runs.total_length_m.toFixed(1) + " m"],
      ["LOS distance", fmtPct(runs.p_state.LOS)],
      ["NLOS distance", fmtPct(runs.p_state.NLOS)],
      ["LOS runs", String(runs.run_lengths.LOS.length)],
      ["NLOS runs", String(runs.run_lengths.NLOS.length)]
    );
  }
  if (outage) {
    rows.push(
      [`p_outage @ ${outage.eirp_dbm} dBm`, fmtPct(outage.p_outage)],
      ["outage distance", outage.outage_m.toFixed(1) + " m"],
      ["threshold", outage.threshold_db.toFixed(1) + " dB"]
    );
  }
  statsEl.innerHTML = rows
    .map(([k, v]) => `<div class="row"><span>${k}</span><b data-stat="${k}">${v}</b></div>`)
    .join("");
  if (runs) drawHistogram(histCtx, runs.run_lengths.LOS, runs.run_lengths.NLOS);
}

session.onChange(() => {
  statusEl.textContent = session.busy ? "computing..." : session.error ?? "ready";
  statusEl.className = session.error ? "error" : session.busy ? "busy" : "";
  analyzeButton.disabled = !session.canAnalyzeRoute(waypoints) || session.busy;
  canvas.style.cursor = session.busy ? "progress" : routeMode ? "crosshair" : "pointer";
  const url = session.placement.mapUrl;
  if (url) {
    const mySeq = ++mapImageSeq;
    const img = new Image();
    img.onload = () => {
      if (mySeq !== mapImageSeq) return; // a newer image superseded this one
      mapImage = img;
      if (session.placement.artifactId) {
        api.getMapMeta(session.placement.chanArtifactId ?? session.placement.artifactId).then((meta) => {
          const [xmin, ymin, xmax, ymax] = meta.extent;
          transform = { xmin, ymin, xmax, ymax };
          redraw();
        });
      } else {
        redraw();
      }
    };
    img.src = url;
  }
  updateStats();
  redraw();
});

canvas.addEventListener("click", (ev) => {
  if (session.busy) return;
  const rect = canvas.getBoundingClientRect();
  const [x, y] = canvasToWorld(
    transform,
    canvas,
    ((ev.clientX - rect.left) / rect.width) * canvas.width,
    ((ev.clientY - rect.top) / rect.height) * canvas.height
  );
  if (routeMode) {
    waypoints.push([x, y]);
    analyzeButton.disabled = !session.canAnalyzeRoute(waypoints);
    redraw();
  } else {
    void session.placeTx(x, y, Number(altSlider.value));
  }
});

altSlider.addEventListener("input", () => {
  altLabel.textContent = `${altSlider.value} m`;
});
altSlider.addEventListener("change", () => {
  const p = session.placement.tx;
  if (p) void session.placeTx(p.x, p.y, Number(altSlider.value));
});

layerSelect.addEventListener("change", () => {
  void session.setLayer(layerSelect.value as LayerChoice);
});

eirpSelect.addEventListener("change", () => {
  void session.setEirp(Number(eirpSelect.value));
});

routeButton.addEventListener("click", () => {
  routeMode = !routeMode;
  routeButton.textContent = routeMode ? "placing waypoints..." : "draw route";
});

clearRouteButton.addEventListener("click", () => {
  waypoints = [];
  session.route = { waypoints: [], response: null, outage: null };
  redraw();
  updateStats();
});

analyzeButton.addEventListener("click", () => {
  void session.analyzeRoute(waypoints);
});

async function start(): Promise<void> {
  await session.loadScene();
  const [xmin, ymin, xmax, ymax] = session.scene!.bounds;
  transform = { xmin, ymin, xmax, ymax };
  const cx = (xmin + xmax) / 2;
  const cy = (ymin + ymax) / 2;
  await session.placeTx(cx, cy, Number(altSlider.value));
  // zoom onto the computed map extent once the first artifact exists
}

void start();
