// Canvas rendering: raster map underlay, building footprints, transmitter
// marker and the drawn route colored by per-sample state/outage.

import { Footprint } from "./api.js";

export interface WorldTransform {
  /** world rectangle currently mapped onto the canvas */
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export function worldToCanvas(
  t: WorldTransform,
  canvas: { width: number; height: number },
  x: number,
  y: number
): [number, number] {
  const px = ((x - t.xmin) / (t.xmax - t.xmin)) * canvas.width;
  const py = canvas.height - ((y - t.ymin) / (t.ymax - t.ymin)) * canvas.height;
  return [px, py];
}

export function canvasToWorld(
  t: WorldTransform,
  canvas: { width: number; height: number },
  px: number,
  py: number
): [number, number] {
  const x = t.xmin + (px / canvas.width) * (t.xmax - t.xmin);
  const y = t.ymin + ((canvas.height - py) / canvas.height) * (t.ymax - t.ymin);
  return [x, y];
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  t: WorldTransform,
  mapImage: HTMLImageElement | null,
  footprints: Footprint[],
  tx: { x: number; y: number } | null,
  routePoints: [number, number][],
  routeStates: string[],
  outageFlags: boolean[]
): void {
  const canvas = ctx.canvas;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#f2f1ec";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  if (mapImage) {
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(mapImage, 0, 0, canvas.width, canvas.height);
    ctx.globalAlpha = 1.0;
  }

  ctx.strokeStyle = "rgba(40, 40, 40, 0.75)";
  ctx.lineWidth = 1;
  for (const b of footprints) {
    ctx.beginPath();
    b.footprint.forEach(([x, y], i) => {
      const [px, py] = worldToCanvas(t, canvas, x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.stroke();
  }

  if (routePoints.length >= 2) {
    ctx.lineWidth = 3;
    for (let i = 1; i < routePoints.length; i++) {
      const [x0, y0] = worldToCanvas(t, canvas, routePoints[i - 1][0], routePoints[i - 1][1]);
      const [x1, y1] = worldToCanvas(t, canvas, routePoints[i][0], routePoints[i][1]);
      const state = routeStates[i] ?? "LOS";
      const outage = outageFlags[i] ?? false;
      ctx.strokeStyle = outage ? "#000000" : state === "NLOS" ? "#c83c32" : state === "BUILDING" ? "#787878" : "#2d7ff0";
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
      ctx.stroke();
    }
  }

  if (tx) {
    const [px, py] = worldToCanvas(t, canvas, tx.x, tx.y);
    ctx.fillStyle = "#1240ab";
    ctx.strokeStyle = "white";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px, py - 9);
    ctx.lineTo(px + 8, py + 7);
    ctx.lineTo(px - 8, py + 7);
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  }
}

export function histogram(values: number[], nBins: number): { edges: number[]; counts: number[] } {
  if (values.length === 0) return { edges: [], counts: [] };
  const max = Math.max(...values);
  const width = Math.max(max / nBins, 1e-9);
  const counts = new Array(nBins).fill(0);
  for (const v of values) {
    counts[Math.min(nBins - 1, Math.floor(v / width))] += 1;
  }
  return { edges: Array.from({ length: nBins + 1 }, (_, i) => i * width), counts };
}

export function drawHistogram(
  ctx: CanvasRenderingContext2D,
  losRuns: number[],
  nlosRuns: number[]
): void {
  const canvas = ctx.canvas;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const all = [...losRuns, ...nlosRuns];
  if (all.length === 0) return;
  const nBins = 20;
  const series: [number[], string][] = [
    [losRuns, "rgba(45, 127, 240, 0.65)"],
    [nlosRuns, "rgba(200, 60, 50, 0.65)"],
  ];
  const max = Math.max(...all);
  const width = Math.max(max / nBins, 1e-9);
  let peak = 1;
  const binned = series.map(([vals]) => {
    const counts = new Array(nBins).fill(0);
    for (const v of vals) counts[Math.min(nBins - 1, Math.floor(v / width))] += 1;
    peak = Math.max(peak, ...counts);
    return counts;
  });
  const bw = canvas.width / nBins / 2;
  binned.forEach((counts, si) => {
    ctx.fillStyle = series[si][1];
    counts.forEach((c: number, i: number) => {
      const h = (c / peak) * (canvas.height - 14);
      ctx.fillRect(i * 2 * bw + si * bw, canvas.height - h, bw - 1, h);
    });
  });
  ctx.fillStyle = "#333";
  ctx.font = "10px sans-serif";
  ctx.fillText(`run length 0..${max.toFixed(0)} m (blue LOS, red NLOS)`, 4, 10);
}
