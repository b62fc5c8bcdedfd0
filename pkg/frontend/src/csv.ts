/**
 * Strict readers for the experiment artifacts: density tables, error curves
 * with their JSON sidecars, contraction traces and phase tracks.  The CSVs
 * are plain numeric RFC-4180 files written by the simulation runner; any
 * structural surprise is an error rather than a guess.
 */

import * as fs from "fs";
import * as path from "path";

export class ParseError extends Error {}
export class MissingArtifact extends Error {}

export interface DensityTable {
  /** bin edges, length bins + 1 (finite bins only) */
  edges: number[];
  /** per-bin probability mass, length bins */
  mass: number[];
  underflow: number;
  overflow: number;
}

export interface ErrorCurve {
  abscissa: number[];
  errors: number[];
  metric: string | null;
  slope: number | null;
  rSquared: number | null;
  excluded: Array<[number, string]>;
  label: string;
}

export interface ContractionTrace {
  times: number[];
  msd: number[];
}

export interface PhaseTracks {
  times: number[];
  mean: Array<[number, number]>;
  particles: Array<Array<[number, number]>>;
}

function readRows(file: string, expectedHeader: string): string[][] {
  if (!fs.existsSync(file)) {
    throw new MissingArtifact(`no such artifact: ${file}`);
  }
  const text = fs.readFileSync(file, "utf8").trim();
  const lines = text.split("\n");
  if (lines.length < 1 || lines[0].trim() !== expectedHeader) {
    throw new ParseError(
      `${file}: expected header '${expectedHeader}', got '${lines[0] ?? ""}'`);
  }
  return lines.slice(1).map((line) => line.split(","));
}

function num(file: string, raw: string): number {
  if (raw === "inf") return Infinity;
  if (raw === "-inf") return -Infinity;
  const v = Number(raw);
  if (raw.trim() === "" || Number.isNaN(v)) {
    throw new ParseError(`${file}: not a number: '${raw}'`);
  }
  return v;
}

export function readDensity(file: string): DensityTable {
  const rows = readRows(file, "bin_left,bin_right,mass");
  if (rows.length < 3) throw new ParseError(`${file}: too few density rows`);
  const first = rows[0];
  const last = rows[rows.length - 1];
  if (num(file, first[0]) !== -Infinity || num(file, last[1]) !== Infinity) {
    throw new ParseError(`${file}: missing under/overflow rows`);
  }
  const edges: number[] = [];
  const mass: number[] = [];
  for (const row of rows.slice(1, -1)) {
    if (row.length !== 3) throw new ParseError(`${file}: bad density row`);
    const left = num(file, row[0]);
    const right = num(file, row[1]);
    if (edges.length === 0) edges.push(left);
    else if (Math.abs(edges[edges.length - 1] - left) > 1e-12) {
      throw new ParseError(`${file}: non-contiguous bins`);
    }
    edges.push(right);
    mass.push(num(file, row[2]));
  }
  const table = {
    edges,
    mass,
    underflow: num(file, first[2]),
    overflow: num(file, last[2]),
  };
  const total = table.mass.reduce((a, b) => a + b, table.underflow + table.overflow);
  if (Math.abs(total - 1.0) > 1e-9) {
    throw new ParseError(`${file}: masses sum to ${total}, not 1`);
  }
  return table;
}

export function readCurve(file: string): ErrorCurve {
  const rows = readRows(file, "abscissa,error");
  const abscissa = rows.map((r) => num(file, r[0]));
  const errors = rows.map((r) => num(file, r[1]));
  const curve: ErrorCurve = {
    abscissa,
    errors,
    metric: null,
    slope: null,
    rSquared: null,
    excluded: [],
    label: path.basename(file, ".csv"),
  };
  const sidecar = file.replace(/\.csv$/, ".json");
  if (fs.existsSync(sidecar)) {
    const meta = JSON.parse(fs.readFileSync(sidecar, "utf8"));
    curve.metric = meta.metric ?? null;
    curve.slope = meta.slope ?? null;
    curve.rSquared = meta.r_squared ?? null;
    curve.excluded = meta.excluded_points ?? [];
  }
  return curve;
}

export function readContraction(file: string): ContractionTrace {
  const rows = readRows(file, "t,msd");
  return {
    times: rows.map((r) => num(file, r[0])),
    msd: rows.map((r) => num(file, r[1])),
  };
}

export function readTracks(file: string): PhaseTracks {
  if (!fs.existsSync(file)) throw new MissingArtifact(`no such artifact: ${file}`);
  const lines = fs.readFileSync(file, "utf8").trim().split("\n");
  const header = lines[0].split(",");
  if (header[0] !== "t" || header[1] !== "mean_x1" || header[2] !== "mean_x2") {
    throw new ParseError(`${file}: unexpected track header`);
  }
  const nTracks = (header.length - 3) / 2;
  const out: PhaseTracks = { times: [], mean: [], particles: [] };
  for (let k = 0; k < nTracks; k++) out.particles.push([]);
  for (const line of lines.slice(1)) {
    const vals = line.split(",").map((v) => num(file, v));
    out.times.push(vals[0]);
    out.mean.push([vals[1], vals[2]]);
    for (let k = 0; k < nTracks; k++) {
      out.particles[k].push([vals[3 + 2 * k], vals[4 + 2 * k]]);
    }
  }
  return out;
}

/** Resolve a glob with '*' wildcards in the basename (sorted, deterministic). */
export function resolveGlob(pattern: string): string[] {
  const dir = path.dirname(pattern);
  const base = path.basename(pattern);
  if (!base.includes("*")) {
    return fs.existsSync(pattern) ? [pattern] : [];
  }
  if (!fs.existsSync(dir)) return [];
  const rx = new RegExp(
    "^" + base.split("*").map((s) => s.replace(/[.+?^${}()|[\]\\]/g, "\\$&")).join("[^/]*") + "$");
  return fs.readdirSync(dir).filter((name) => rx.test(name)).sort()
    .map((name) => path.join(dir, name));
}
