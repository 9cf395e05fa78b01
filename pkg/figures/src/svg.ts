/** Deterministic SVG chart primitives.
 *
 * All coordinates are formatted with fixed precision and every element is
 * emitted in a stable order, so identical inputs produce identical bytes.
 */

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGINS: Margins = { left: 64, right: 160, top: 40, bottom: 48 };

export const SERIES_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

export function log10Scale(domain: [number, number], range: [number, number]): Scale {
  const lin = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  const f = ((x: number) => lin(Math.log10(x))) as Scale;
  f.domain = domain;
  return f;
}

export function ticks(lo: number, hi: number, count = 6): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9; v += s) out.push(Math.round(v / s) * s);
  return out;
}

export function decadeTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let e = Math.ceil(Math.log10(lo)); e <= Math.floor(Math.log10(hi)) + 1e-9; e++) {
    out.push(Math.pow(10, e));
  }
  return out;
}

export interface Series {
  label: string;
  points: [number, number][];
  color: string;
  marker?: boolean;
  line?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: Scale;
  yScale: Scale;
  xTicks: number[];
  yTicks: number[];
  xTickLabel?: (v: number) => string;
  yTickLabel?: (v: number) => string;
  series: Series[];
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(spec: ChartSpec): string {
  const m = MARGINS;
  const xTickLabel = spec.xTickLabel ?? ((v: number) => String(Math.round(v * 100) / 100));
  const yTickLabel = spec.yTickLabel ?? ((v: number) => String(Math.round(v * 100) / 100));
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">${esc(spec.title)}</text>`,
  );
  const x0 = m.left;
  const x1 = WIDTH - m.right;
  const y0 = HEIGHT - m.bottom;
  const y1 = m.top;
  // grid + ticks
  for (const t of spec.xTicks) {
    const px = spec.xScale(t);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y1}" stroke="#dddddd" stroke-width="1"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">${esc(xTickLabel(t))}</text>`,
    );
  }
  for (const t of spec.yTicks) {
    const py = spec.yScale(t);
    parts.push(`<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" y2="${fmt(py)}" stroke="#dddddd" stroke-width="1"/>`);
    parts.push(
      `<text x="${x0 - 6}" y="${fmt(py + 4)}" text-anchor="end" font-family="sans-serif" font-size="11">${esc(yTickLabel(t))}</text>`,
    );
  }
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333333"/>`);
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-family="sans-serif" font-size="13">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(spec.yLabel)}</text>`,
  );
  // series
  spec.series.forEach((s) => {
    const pts = s.points.filter(([x, y]) => Number.isFinite(x) && Number.isFinite(y));
    if (s.line !== false && pts.length > 1) {
      const d = pts
        .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(spec.xScale(x))} ${fmt(spec.yScale(y))}`)
        .join(" ");
      parts.push(`<path d="${d}" fill="none" stroke="${s.color}" stroke-width="1.8"/>`);
    }
    if (s.marker !== false) {
      for (const [x, y] of pts) {
        parts.push(
          `<circle cx="${fmt(spec.xScale(x))}" cy="${fmt(spec.yScale(y))}" r="3" fill="${s.color}"/>`,
        );
      }
    }
  });
  // legend
  spec.series.forEach((s, i) => {
    const ly = y1 + 12 + 18 * i;
    parts.push(`<line x1="${x1 + 10}" y1="${ly}" x2="${x1 + 34}" y2="${ly}" stroke="${s.color}" stroke-width="2"/>`);
    parts.push(
      `<text x="${x1 + 40}" y="${ly + 4}" font-family="sans-serif" font-size="12">${esc(s.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function renderScatter(
  title: string,
  clouds: { label: string; color: string; points: [number, number][] }[],
): string {
  const m = MARGINS;
  const x0 = m.left;
  const x1 = WIDTH - m.right;
  const y0 = HEIGHT - m.bottom;
  const y1 = m.top;
  const lim = 1.6;
  const xs = linearScale([-lim, lim], [x0, x1]);
  const ys = linearScale([-lim, lim], [y0, y1]);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">${esc(title)}</text>`,
  );
  parts.push(`<line x1="${fmt(xs(0))}" y1="${y1}" x2="${fmt(xs(0))}" y2="${y0}" stroke="#bbbbbb"/>`);
  parts.push(`<line x1="${x0}" y1="${fmt(ys(0))}" x2="${x1}" y2="${fmt(ys(0))}" stroke="#bbbbbb"/>`);
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333333"/>`);
  clouds.forEach((c) => {
    for (const [re, im] of c.points) {
      if (Math.abs(re) <= lim && Math.abs(im) <= lim) {
        parts.push(`<circle cx="${fmt(xs(re))}" cy="${fmt(ys(im))}" r="1.5" fill="${c.color}" fill-opacity="0.5"/>`);
      }
    }
  });
  clouds.forEach((c, i) => {
    const ly = y1 + 12 + 18 * i;
    parts.push(`<circle cx="${x1 + 16}" cy="${ly}" r="3" fill="${c.color}"/>`);
    parts.push(
      `<text x="${x1 + 26}" y="${ly + 4}" font-family="sans-serif" font-size="12">${esc(c.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
