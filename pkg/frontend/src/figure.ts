/**
 * SVG figure construction.
 *
 * Two figure kinds share one layout: separability vs T on linear axes and
 * condition number vs T with a log10 vertical axis.  One polyline per
 * method; cells flagged ill_conditioned are marked with a cross.  Points
 * whose value is not finite (nan deltas, infinite condition numbers) break
 * the polyline rather than being drawn.
 */

import { groupByMethod, ResultRow } from "./csv.js";

export type FigureKind = "separability" | "condition";

export interface FigureOptions {
  width?: number;
  height?: number;
  title?: string;
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
];

const MARGIN = { left: 64, right: 160, top: 36, bottom: 46 };

interface Scale {
  toX(t: number): number;
  toY(v: number): number;
}

function niceLinearTicks(maxValue: number, count = 5): number[] {
  if (maxValue <= 0) return [0, 1];
  const rawStep = maxValue / count;
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const residual = rawStep / magnitude;
  const step = (residual > 5 ? 10 : residual > 2 ? 5 : residual > 1 ? 2 : 1) * magnitude;
  const ticks: number[] = [];
  for (let v = 0; v <= maxValue * 1.0001; v += step) ticks.push(v);
  return ticks;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmtTick(value: number, log: boolean): string {
  if (log) {
    const exp = Math.round(Math.log10(value));
    return `1e${exp}`;
  }
  return Math.abs(value) >= 1000 ? value.toExponential(0) : `${Number(value.toFixed(3))}`;
}

export function renderFigure(rows: ResultRow[], kind: FigureKind,
                             options: FigureOptions = {}): string {
  if (kind !== "separability" && kind !== "condition") {
    throw new Error(`unknown figure kind '${kind}'`);
  }
  const width = options.width ?? 760;
  const height = options.height ?? 460;
  const valueOf = (row: ResultRow) =>
    kind === "separability" ? row.delta : Math.max(row.cond_H0, row.cond_H1);
  const yLabel = kind === "separability" ? "separability" : "condition number";
  const logY = kind === "condition";

  const groups = groupByMethod(rows);
  const ts = rows.map((r) => r.T);
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const finiteValues = rows.map(valueOf).filter((v) => Number.isFinite(v) && (!logY || v > 0));
  if (finiteValues.length === 0) {
    throw new Error("no finite data points to plot");
  }

  let yTicks: number[];
  let yMin: number;
  let yMax: number;
  if (logY) {
    const lo = Math.floor(Math.log10(Math.min(...finiteValues)));
    const hi = Math.ceil(Math.log10(Math.max(...finiteValues)) + 1e-12);
    yMin = 10 ** lo;
    yMax = 10 ** Math.max(hi, lo + 1);
    yTicks = [];
    for (let e = lo; e <= Math.max(hi, lo + 1); e += 1) yTicks.push(10 ** e);
  } else {
    yMin = 0;
    yTicks = niceLinearTicks(Math.max(...finiteValues));
    yMax = yTicks[yTicks.length - 1];
  }

  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const scale: Scale = {
    toX: (t) => MARGIN.left + ((t - tMin) / Math.max(tMax - tMin, 1)) * plotW,
    toY: (v) => {
      const frac = logY
        ? (Math.log10(v) - Math.log10(yMin)) / (Math.log10(yMax) - Math.log10(yMin))
        : (v - yMin) / (yMax - yMin);
      return MARGIN.top + plotH * (1 - frac);
    },
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" data-kind="${kind}" data-yscale="${logY ? "log" : "linear"}">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (options.title) {
    parts.push(`<text x="${MARGIN.left}" y="20" font-family="sans-serif" font-size="14">` +
               `${esc(options.title)}</text>`);
  }

  // gridlines and axes
  for (const v of yTicks) {
    const y = scale.toY(v);
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" ` +
               `stroke="#dddddd" stroke-width="1"/>`);
    parts.push(`<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end" ` +
               `font-family="sans-serif" font-size="11">${fmtTick(v, logY)}</text>`);
  }
  const tTicks: number[] = [];
  for (let t = tMin; t <= tMax; t += Math.max(1, Math.round((tMax - tMin) / 10))) tTicks.push(t);
  for (const t of tTicks) {
    const x = scale.toX(t);
    parts.push(`<line x1="${x}" y1="${MARGIN.top + plotH}" x2="${x}" y2="${MARGIN.top + plotH + 4}" ` +
               `stroke="black"/>`);
    parts.push(`<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" ` +
               `font-family="sans-serif" font-size="11">${t}</text>`);
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
             `fill="none" stroke="black" stroke-width="1"/>`);
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" text-anchor="middle" ` +
             `font-family="sans-serif" font-size="12">temporal window T</text>`);
  parts.push(`<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
             `font-family="sans-serif" font-size="12" ` +
             `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${esc(yLabel)}</text>`);

  // one polyline per method, broken at non-finite values
  let colorIndex = 0;
  const methods = [...groups.keys()];
  for (const method of methods) {
    const color = PALETTE[colorIndex % PALETTE.length];
    colorIndex += 1;
    const series = groups.get(method)!;
    const segments: string[][] = [[]];
    for (const row of series) {
      const v = valueOf(row);
      const drawable = Number.isFinite(v) && (!logY || v > 0);
      if (!drawable) {
        if (segments[segments.length - 1].length > 0) segments.push([]);
        continue;
      }
      segments[segments.length - 1].push(`${scale.toX(row.T).toFixed(1)},${scale.toY(v).toFixed(1)}`);
    }
    for (const segment of segments) {
      if (segment.length === 0) continue;
      parts.push(`<polyline class="series" data-method="${esc(method)}" fill="none" ` +
                 `stroke="${color}" stroke-width="1.8" points="${segment.join(" ")}"/>`);
    }
    for (const row of series) {
      const v = valueOf(row);
      if (!Number.isFinite(v) || (logY && v <= 0)) continue;
      const x = scale.toX(row.T);
      const y = scale.toY(v);
      if (row.status === "ill_conditioned") {
        // flagged cells get a distinct cross marker
        parts.push(`<path class="flagged" stroke="${color}" stroke-width="1.6" ` +
                   `d="M ${x - 4} ${y - 4} L ${x + 4} ${y + 4} M ${x - 4} ${y + 4} ` +
                   `L ${x + 4} ${y - 4}"/>`);
      } else {
        parts.push(`<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="2.4" fill="${color}"/>`);
      }
    }
  }

  // legend with method names verbatim
  methods.forEach((method, i) => {
    const color = PALETTE[i % PALETTE.length];
    const y = MARGIN.top + 14 + 18 * i;
    const x = MARGIN.left + plotW + 14;
    parts.push(`<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" ` +
               `stroke="${color}" stroke-width="1.8"/>`);
    parts.push(`<text x="${x + 28}" y="${y}" font-family="monospace" font-size="12">` +
               `${esc(method)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}
