/** Tiny deterministic SVG assembly: fixed fonts and sizes, string output. */

export const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export function tag(name: string, attrs: Record<string, string | number>,
                    children: string[] = [], text?: string): string {
  const parts = Object.entries(attrs).map(([k, v]) => `${k}="${v}"`).join(" ");
  const open = parts.length ? `<${name} ${parts}` : `<${name}`;
  if (children.length === 0 && text === undefined) return `${open}/>`;
  return `${open}>${text !== undefined ? esc(text) : ""}${children.join("")}</${name}>`;
}

export function document(width: number, height: number, children: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    ...children,
    "</svg>",
    "",
  ].join("\n");
}

export interface Scale {
  (v: number): number;
  ticks: number[];
  tickLabel(v: number): string;
}

export function linearScale(lo: number, hi: number, pxLo: number, pxHi: number,
                            tickCount = 5): Scale {
  const span = hi - lo || 1;
  const fn = ((v: number) => pxLo + ((v - lo) / span) * (pxHi - pxLo)) as Scale;
  const step = niceStep(span / tickCount);
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * Math.abs(span); t += step) {
    ticks.push(Math.abs(t) < 1e-12 * Math.abs(span) ? 0 : t);
  }
  fn.ticks = ticks;
  fn.tickLabel = (v: number) => trimNumber(v);
  return fn;
}

export function logScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  const fn = ((v: number) => pxLo + ((Math.log10(v) - llo) / span) * (pxHi - pxLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.ceil(llo - 1e-9); e <= Math.floor(lhi + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  if (ticks.length < 2) {
    fn.ticks = [lo, hi];
  } else {
    fn.ticks = ticks;
  }
  fn.tickLabel = (v: number) => formatPow10(v);
  return fn;
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const nice = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10;
  return nice * mag;
}

function trimNumber(v: number): string {
  const s = v.toPrecision(6);
  return String(Number(s));
}

function formatPow10(v: number): string {
  const e = Math.round(Math.log10(v));
  if (Math.abs(v - Math.pow(10, e)) < 1e-9 * v) return `1e${e}`;
  return trimNumber(v);
}

export function polyline(points: Array<[number, number]>, stroke: string,
                         width = 1.5, dash = ""): string {
  const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
  const attrs: Record<string, string | number> = {
    points: pts, fill: "none", stroke, "stroke-width": width,
  };
  if (dash) attrs["stroke-dasharray"] = dash;
  return tag("polyline", attrs);
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b",
                        "#e377c2", "#7f7f7f"];
