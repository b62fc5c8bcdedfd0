/**
 * Figure renderers over parsed artifacts.  Pure functions of their inputs:
 * no statistics are recomputed here, fitted slopes and R^2 values come from
 * the JSON sidecars written by the simulation runner.
 */

import * as path from "path";

import { ContractionTrace, DensityTable, ErrorCurve, MissingArtifact,
         PhaseTracks, readContraction, readCurve, readDensity, readTracks,
         resolveGlob } from "./csv";
import { FONT, PALETTE, Scale, document as svgDocument, fmt, linearScale,
         logScale, polyline, tag } from "./svg";

const PANEL_W = 240;
const PANEL_H = 180;
const MARGIN = { left: 64, right: 24, top: 44, bottom: 48 };
const GAP = 18;

// canonical column order for scheme comparisons (matches the study figures)
const SCHEME_ORDER = ["taming_out", "taming_in", "ssm", "euler"];

function axis(x0: number, y0: number, x1: number, y1: number,
              xs: Scale, ys: Scale, xLabel: string, yLabel: string): string[] {
  const parts: string[] = [];
  parts.push(tag("line", { x1: x0, y1, x2: x1, y2: y1, stroke: "#333" }));
  parts.push(tag("line", { x1: x0, y1: y0, x2: x0, y2: y1, stroke: "#333" }));
  for (const t of xs.ticks) {
    const px = xs(t);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    parts.push(tag("line", { x1: px, y1, x2: px, y2: y1 + 4, stroke: "#333" }));
    parts.push(tag("text", { x: px, y: y1 + 16, "text-anchor": "middle",
                             "font-size": 10 }, [], xs.tickLabel(t)));
  }
  for (const t of ys.ticks) {
    const py = ys(t);
    if (py > y1 + 0.5 || py < y0 - 0.5) continue;
    parts.push(tag("line", { x1: x0 - 4, y1: py, x2: x0, y2: py, stroke: "#333" }));
    parts.push(tag("text", { x: x0 - 6, y: py + 3, "text-anchor": "end",
                             "font-size": 10 }, [], ys.tickLabel(t)));
  }
  parts.push(tag("text", { x: (x0 + x1) / 2, y: y1 + 32, "text-anchor": "middle",
                           "font-size": 11 }, [], xLabel));
  parts.push(tag("text", { x: x0 - 46, y: (y0 + y1) / 2, "font-size": 11,
                           transform: `rotate(-90 ${x0 - 46} ${(y0 + y1) / 2})`,
                           "text-anchor": "middle" }, [], yLabel));
  return parts;
}

// ---------------------------------------------------------------------------
// Density grid: rows = times, columns = schemes
// ---------------------------------------------------------------------------

interface DensityCell {
  scheme: string;
  time: number;
  table: DensityTable;
}

const DENSITY_NAME = /^density_(.+)_t([0-9.]+)\.csv$/;

export function collectDensities(files: string[]): DensityCell[] {
  const cells: DensityCell[] = [];
  for (const file of files) {
    const match = DENSITY_NAME.exec(path.basename(file));
    if (!match) continue;
    cells.push({ scheme: match[1], time: Number(match[2]), table: readDensity(file) });
  }
  return cells;
}

export function renderDensityGrid(cells: DensityCell[], title = ""): string {
  if (cells.length === 0) throw new MissingArtifact("no density tables matched");
  const schemes = SCHEME_ORDER.filter((s) => cells.some((c) => c.scheme === s));
  for (const c of cells) {
    if (!schemes.includes(c.scheme)) schemes.push(c.scheme);
  }
  const times = [...new Set(cells.map((c) => c.time))].sort((a, b) => a - b);
  const lo = Math.min(...cells.map((c) => c.table.edges[0]));
  const hi = Math.max(...cells.map((c) => c.table.edges[c.table.edges.length - 1]));
  const peak = Math.max(...cells.map((c) => {
    const w = (c.table.edges[1] - c.table.edges[0]) || 1;
    return Math.max(...c.table.mass) / w;
  }));
  const width = MARGIN.left + schemes.length * (PANEL_W + GAP) - GAP + MARGIN.right;
  const height = MARGIN.top + times.length * (PANEL_H + GAP) - GAP + MARGIN.bottom;
  const parts: string[] = [];
  if (title) {
    parts.push(tag("text", { x: width / 2, y: 20, "text-anchor": "middle",
                             "font-size": 14 }, [], title));
  }
  times.forEach((t, row) => {
    schemes.forEach((scheme, col) => {
      const x0 = MARGIN.left + col * (PANEL_W + GAP);
      const y0 = MARGIN.top + row * (PANEL_H + GAP);
      const y1 = y0 + PANEL_H - 24;
      const xs = linearScale(lo, hi, x0, x0 + PANEL_W, 5);
      const ys = linearScale(0, peak * 1.05, y1, y0 + 8);
      const panel: string[] = [];
      const cell = cells.find((c) => c.scheme === scheme && c.time === t);
      if (cell) {
        const { edges, mass } = cell.table;
        for (let k = 0; k < mass.length; k++) {
          const w = edges[k + 1] - edges[k];
          const densityValue = mass[k] / (w || 1);
          const px = xs(edges[k]);
          const pw = xs(edges[k + 1]) - px;
          const py = ys(densityValue);
          if (densityValue > 0) {
            panel.push(tag("rect", {
              x: px.toFixed(2), y: py.toFixed(2), width: pw.toFixed(2),
              height: (y1 - py).toFixed(2),
              fill: PALETTE[col % PALETTE.length], "fill-opacity": 0.75,
            }));
          }
        }
      } else {
        panel.push(tag("text", { x: x0 + PANEL_W / 2, y: (y0 + y1) / 2,
                                 "text-anchor": "middle", "font-size": 11,
                                 fill: "#999" }, [], "not available (run diverged?)"));
      }
      panel.push(...axis(x0, y0 + 8, x0 + PANEL_W, y1, xs, ys, "x", "density"));
      panel.push(tag("text", { x: x0 + PANEL_W / 2, y: y0 + 2, "font-size": 11,
                               "text-anchor": "middle" }, [],
                     `${scheme.replace("_", "-")}  T=${t}`));
      parts.push(tag("g", { class: "panel" }, panel));
    });
  });
  return svgDocument(width, height, parts);
}

// ---------------------------------------------------------------------------
// Rate plot: log-log error curves with reference-slope guides
// ---------------------------------------------------------------------------

export function renderRatePlot(curves: ErrorCurve[], referenceSlopes: number[],
                               xLabel = "h", title = ""): string {
  if (curves.length === 0) throw new MissingArtifact("no error curves matched");
  const xsAll = curves.flatMap((c) => c.abscissa);
  const ysAll = curves.flatMap((c) => c.errors).filter((e) => e > 0);
  if (ysAll.length === 0) throw new MissingArtifact("curves carry no positive errors");
  const width = 560;
  const height = 420;
  const x0 = 70;
  const x1 = width - 30;
  const y1 = height - 60;
  const y0 = 46;
  const xs = logScale(Math.min(...xsAll), Math.max(...xsAll), x0, x1);
  const ys = logScale(Math.min(...ysAll) * 0.7, Math.max(...ysAll) * 1.4, y1, y0);
  const parts: string[] = [];
  parts.push(...axis(x0, y0, x1, y1, xs, ys, xLabel, "error"));
  // reference guides anchored at the first curve's largest abscissa point
  const anchor = curves[0];
  const ax = anchor.abscissa[anchor.abscissa.length - 1];
  const ay = anchor.errors[anchor.errors.length - 1];
  referenceSlopes.forEach((slope) => {
    const pts: Array<[number, number]> = [];
    for (const v of [Math.min(...xsAll), Math.max(...xsAll)]) {
      pts.push([xs(v), ys(ay * Math.pow(v / ax, slope))]);
    }
    parts.push(polyline(pts, "#888", 1.2, "6 4"));
    parts.push(tag("text", { x: pts[0][0] + 6, y: pts[0][1] - 6, "font-size": 10,
                             fill: "#666", class: "reference" }, [],
                   `reference slope ${slope}`));
  });
  curves.forEach((curve, k) => {
    const color = PALETTE[k % PALETTE.length];
    const pts = curve.abscissa.map((v, i) =>
      [xs(v), ys(curve.errors[i])] as [number, number]);
    parts.push(polyline(pts, color, 1.8));
    for (const [px, py] of pts) {
      parts.push(tag("circle", { cx: px.toFixed(2), cy: py.toFixed(2), r: 3.2,
                                 fill: color }));
    }
    const annot = curve.slope === null ? curve.label
      : `${curve.label}: slope ${curve.slope.toFixed(3)}` +
        (curve.rSquared === null ? "" : ` (R2=${curve.rSquared.toFixed(2)})`);
    parts.push(tag("text", { x: x0 + 10, y: y0 + 14 + 14 * k, "font-size": 11,
                             fill: color, class: "legend" }, [], annot));
    curve.excluded.forEach(([at, why], j) => {
      parts.push(tag("text", { x: x0 + 10, y: y1 - 8 - 12 * j, "font-size": 9,
                               fill: "#b00" }, [],
                     `excluded ${xLabel}=${at}: ${why}`));
    });
  });
  if (title) {
    parts.push(tag("text", { x: width / 2, y: 22, "text-anchor": "middle",
                             "font-size": 14 }, [], title));
  }
  return svgDocument(width, height, parts);
}

// ---------------------------------------------------------------------------
// Phase portraits
// ---------------------------------------------------------------------------

export function renderPhasePortrait(tracksList: Array<{ label: string; tracks: PhaseTracks }>,
                                    title = ""): string {
  if (tracksList.length === 0) throw new MissingArtifact("no track files matched");
  const width = MARGIN.left + tracksList.length * (PANEL_W + GAP) - GAP + MARGIN.right;
  const height = MARGIN.top + PANEL_H + 60;
  const parts: string[] = [];
  tracksList.forEach(({ label, tracks }, col) => {
    const xsAll = tracks.mean.map((p) => p[0])
      .concat(tracks.particles.flatMap((t) => t.map((p) => p[0])));
    const ysAll = tracks.mean.map((p) => p[1])
      .concat(tracks.particles.flatMap((t) => t.map((p) => p[1])));
    const x0 = MARGIN.left + col * (PANEL_W + GAP);
    const y0 = MARGIN.top;
    const y1 = y0 + PANEL_H;
    const xs = linearScale(Math.min(...xsAll), Math.max(...xsAll), x0, x0 + PANEL_W, 5);
    const ys = linearScale(Math.min(...ysAll), Math.max(...ysAll), y1, y0);
    const panel: string[] = [];
    tracks.particles.forEach((track) => {
      panel.push(polyline(track.map(([a, b]) => [xs(a), ys(b)] as [number, number]),
                          "#bbb", 0.7));
    });
    panel.push(polyline(tracks.mean.map(([a, b]) => [xs(a), ys(b)] as [number, number]),
                        PALETTE[0], 2.0));
    panel.push(...axis(x0, y0, x0 + PANEL_W, y1, xs, ys, "x1", "x2"));
    panel.push(tag("text", { x: x0 + PANEL_W / 2, y: y0 - 6, "font-size": 11,
                             "text-anchor": "middle" }, [], label));
    parts.push(tag("g", { class: "panel" }, panel));
  });
  if (title) {
    parts.push(tag("text", { x: width / 2, y: 20, "text-anchor": "middle",
                             "font-size": 14 }, [], title));
  }
  return svgDocument(width, height, parts);
}

// ---------------------------------------------------------------------------
// Contraction decay
// ---------------------------------------------------------------------------

export function renderContraction(trace: ContractionTrace, title = ""): string {
  const positive = trace.msd.filter((m) => m > 0);
  if (positive.length < 2) throw new MissingArtifact("contraction trace is degenerate");
  const width = 560;
  const height = 400;
  const x0 = 74;
  const x1 = width - 30;
  const y1 = height - 56;
  const y0 = 40;
  const xs = linearScale(trace.times[0], trace.times[trace.times.length - 1], x0, x1, 6);
  const ys = logScale(Math.min(...positive), Math.max(...positive) * 1.2, y1, y0);
  const pts: Array<[number, number]> = [];
  trace.times.forEach((t, k) => {
    if (trace.msd[k] > 0) pts.push([xs(t), ys(trace.msd[k])]);
  });
  const parts: string[] = [];
  parts.push(...axis(x0, y0, x1, y1, xs, ys, "t", "paired mean-square distance"));
  parts.push(polyline(pts, PALETTE[0], 1.8));
  if (title) {
    parts.push(tag("text", { x: width / 2, y: 20, "text-anchor": "middle",
                             "font-size": 14 }, [], title));
  }
  return svgDocument(width, height, parts);
}

// ---------------------------------------------------------------------------
// FigureSpec dispatch
// ---------------------------------------------------------------------------

export type FigureKind = "density-grid" | "rate-plot" | "phase-portrait" | "contraction";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];         // file paths or globs
  referenceSlopes?: number[];
  title?: string;
  output: string;
}

export function renderSpec(spec: FigureSpec): string {
  const files = spec.inputs.flatMap((pattern) => resolveGlob(pattern));
  if (files.length === 0) {
    throw new MissingArtifact(`nothing matches inputs: ${spec.inputs.join(", ")}`);
  }
  for (const slope of spec.referenceSlopes ?? []) {
    if (!Number.isFinite(slope)) throw new Error("reference slopes must be finite");
  }
  switch (spec.kind) {
    case "density-grid":
      return renderDensityGrid(collectDensities(files), spec.title ?? "");
    case "rate-plot": {
      const curves = files.map(readCurve);
      const xLabel = curves[0].metric === "poc" ? "N" : "h";
      return renderRatePlot(curves, spec.referenceSlopes ?? [], xLabel,
                            spec.title ?? "");
    }
    case "phase-portrait": {
      const tracks = files.map((file) => ({
        label: path.basename(file, ".csv").replace(/^tracks_/, "").replace("_", "-"),
        tracks: readTracks(file),
      }));
      return renderPhasePortrait(tracks, spec.title ?? "");
    }
    case "contraction":
      return renderContraction(readContraction(files[0]), spec.title ?? "");
    default:
      throw new Error(`unknown figure kind '${(spec as FigureSpec).kind}'`);
  }
}
