/** Figure builders over the simulation CSV schemas.
 *
 * Kinds:
 *   ta-mse       TA-MSE [dB] vs input SNR, one curve per receiver, dashed
 *                theory overlay when the column is present
 *   ber          coded (or uncoded) BER vs input SNR, log y-axis
 *   scaling      measured vs predicted output scaling for the two-stage
 *                receiver vs input SNR
 *   delta        TA-MSE vs cyclic-frequency error (scenario_id carries
 *                "...@<delta>"), log x-axis
 *   convergence  adaptive trajectory: TA-MSE per period
 *   scatter      demodulated soft values per receiver (schema:
 *                receiver,point,re,im)
 */

import { num, parseCsv, requireColumns, SchemaError, Table } from "./csv";
import {
  ChartSpec,
  decadeTicks,
  linearScale,
  log10Scale,
  renderChart,
  renderScatter,
  Series,
  SERIES_COLORS,
  ticks,
  HEIGHT,
  MARGINS,
  WIDTH,
} from "./svg";

export interface FigureSpec {
  kind: string;
  input: string; // CSV path
  output: string; // SVG path
  receivers?: string[];
  scenario?: string;
  title?: string;
  yColumn?: string; // ber: ber_coded (default) or ber_uncoded
}

export const KINDS = ["ta-mse", "ber", "scaling", "delta", "convergence", "scatter"] as const;

const RX_ORDER = ["Rx1", "Rx2", "Rx3", "Rx4"];

function plotArea() {
  const x: [number, number] = [MARGINS.left, WIDTH - MARGINS.right];
  const y: [number, number] = [HEIGHT - MARGINS.bottom, MARGINS.top];
  return { x, y };
}

function filterRows(table: Table, spec: FigureSpec): Record<string, string>[] {
  let rows = table.rows;
  if (spec.scenario) rows = rows.filter((r) => r.scenario_id === spec.scenario);
  if (spec.receivers) rows = rows.filter((r) => spec.receivers!.includes(r.receiver));
  if (rows.length === 0) throw new SchemaError("no data rows after filtering");
  return rows;
}

function receiverSeries(
  rows: Record<string, string>[],
  xCol: string,
  yCol: string,
): { label: string; points: [number, number][] }[] {
  const names = RX_ORDER.filter((rx) => rows.some((r) => r.receiver === rx));
  for (const r of rows) {
    if (!names.includes(r.receiver)) names.push(r.receiver);
  }
  return names.map((rx) => {
    const pts = rows
      .filter((r) => r.receiver === rx && r[yCol] !== "")
      .map((r) => [num(r, xCol), num(r, yCol)] as [number, number])
      .sort((a, b) => a[0] - b[0]);
    return { label: rx, points: pts };
  });
}

function extent(series: { points: [number, number][] }[], axis: 0 | 1): [number, number] {
  const vals = series.flatMap((s) => s.points.map((p) => p[axis])).filter(Number.isFinite);
  if (vals.length === 0) throw new SchemaError("no finite values to plot");
  const lo = Math.min(...vals);
  const hi = Math.max(...vals);
  return lo === hi ? [lo - 1, hi + 1] : [lo, hi];
}

export function buildTaMse(text: string, spec: FigureSpec): string {
  const table = parseCsv(text);
  requireColumns(table, ["receiver", "snr_in_db", "ta_mse_db"]);
  const rows = filterRows(table, spec);
  const meas = receiverSeries(rows, "snr_in_db", "ta_mse_db");
  const hasTheory = table.columns.includes("ta_mse_theory_db");
  const area = plotArea();
  const series: Series[] = [];
  meas.forEach((s, i) => {
    series.push({ ...s, color: SERIES_COLORS[i % SERIES_COLORS.length] });
  });
  if (hasTheory) {
    receiverSeries(rows, "snr_in_db", "ta_mse_theory_db").forEach((s, i) => {
      if (s.points.length) {
        series.push({
          label: `${s.label} theory`,
          points: s.points,
          color: SERIES_COLORS[i % SERIES_COLORS.length],
          marker: false,
        });
      }
    });
  }
  const xd = extent(series, 0);
  const yd = extent(series, 1);
  const chart: ChartSpec = {
    title: spec.title ?? "Time-averaged MSE vs input SNR",
    xLabel: "input SNR [dB]",
    yLabel: "TA-MSE [dB]",
    xScale: linearScale(xd, area.x),
    yScale: linearScale([yd[0] - 0.5, yd[1] + 0.5], area.y),
    xTicks: ticks(xd[0], xd[1]),
    yTicks: ticks(yd[0] - 0.5, yd[1] + 0.5),
    series,
  };
  return renderChart(chart);
}

export function buildBer(text: string, spec: FigureSpec): string {
  const table = parseCsv(text);
  const yCol = spec.yColumn ?? "ber_coded";
  requireColumns(table, ["receiver", "snr_in_db", yCol]);
  const rows = filterRows(table, spec);
  const floor = 1e-7;
  const raw = receiverSeries(rows, "snr_in_db", yCol);
  const series: Series[] = raw.map((s, i) => ({
    label: s.label,
    points: s.points.map(([x, y]) => [x, Math.max(y, floor)] as [number, number]),
    color: SERIES_COLORS[i % SERIES_COLORS.length],
  }));
  const area = plotArea();
  const xd = extent(series, 0);
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const yd: [number, number] = [Math.max(Math.min(...ys), floor), Math.max(...ys, 1e-1)];
  const chart: ChartSpec = {
    title: spec.title ?? `${yCol === "ber_coded" ? "Coded" : "Uncoded"} BER vs input SNR`,
    xLabel: "input SNR [dB]",
    yLabel: "BER",
    xScale: linearScale(xd, area.x),
    yScale: log10Scale(yd, area.y),
    xTicks: ticks(xd[0], xd[1]),
    yTicks: decadeTicks(yd[0], yd[1]),
    yTickLabel: (v) => `1e${Math.round(Math.log10(v))}`,
    series,
  };
  return renderChart(chart);
}

export function buildScaling(text: string, spec: FigureSpec): string {
  const table = parseCsv(text);
  requireColumns(table, ["receiver", "snr_in_db", "scaling_measured", "scaling_theory"]);
  const rows = filterRows(table, spec).filter((r) => r.scaling_measured !== "");
  if (rows.length === 0) throw new SchemaError("no scaling rows (two-stage receiver cells only)");
  const meas = rows
    .map((r) => [num(r, "snr_in_db"), num(r, "scaling_measured")] as [number, number])
    .sort((a, b) => a[0] - b[0]);
  const theo = rows
    .map((r) => [num(r, "snr_in_db"), num(r, "scaling_theory")] as [number, number])
    .sort((a, b) => a[0] - b[0]);
  const series: Series[] = [
    { label: "measured", points: meas, color: SERIES_COLORS[0] },
    { label: "predicted", points: theo, color: SERIES_COLORS[1], marker: false },
  ];
  const area = plotArea();
  const xd = extent(series, 0);
  const yd = extent(series, 1);
  const chart: ChartSpec = {
    title: spec.title ?? "Output scaling: measured vs predicted",
    xLabel: "input SNR [dB]",
    yLabel: "average scaling",
    xScale: linearScale(xd, area.x),
    yScale: linearScale([yd[0] - 0.05, yd[1] + 0.05], area.y),
    xTicks: ticks(xd[0], xd[1]),
    yTicks: ticks(yd[0] - 0.05, yd[1] + 0.05),
    series,
  };
  return renderChart(chart);
}

export function buildDelta(text: string, spec: FigureSpec): string {
  const table = parseCsv(text);
  requireColumns(table, ["scenario_id", "receiver", "ta_mse_db"]);
  const rows = filterRows(table, { ...spec, scenario: undefined });
  const withDelta = rows
    .map((r) => {
      const at = r.scenario_id.lastIndexOf("@");
      if (at < 0) throw new SchemaError(`scenario_id '${r.scenario_id}' carries no @delta suffix`);
      return { rx: r.receiver, delta: Number(r.scenario_id.slice(at + 1)), y: num(r, "ta_mse_db") };
    })
    .filter((r) => Number.isFinite(r.y));
  const floor = Math.min(...withDelta.filter((r) => r.delta > 0).map((r) => r.delta)) / 2;
  const names = RX_ORDER.filter((rx) => withDelta.some((r) => r.rx === rx));
  const series: Series[] = names.map((rx, i) => ({
    label: rx,
    points: withDelta
      .filter((r) => r.rx === rx)
      .map((r) => [Math.max(r.delta, floor), r.y] as [number, number])
      .sort((a, b) => a[0] - b[0]),
    color: SERIES_COLORS[i % SERIES_COLORS.length],
  }));
  const area = plotArea();
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const chart: ChartSpec = {
    title: spec.title ?? "Cyclic-frequency error sensitivity",
    xLabel: "frequency error delta (0 plotted at the left edge)",
    yLabel: "TA-MSE [dB]",
    xScale: log10Scale([Math.min(...xs), Math.max(...xs)], area.x),
    yScale: linearScale([Math.min(...ys) - 0.3, Math.max(...ys) + 0.3], area.y),
    xTicks: decadeTicks(Math.min(...xs), Math.max(...xs)),
    xTickLabel: (v) => `1e${Math.round(Math.log10(v))}`,
    yTicks: ticks(Math.min(...ys) - 0.3, Math.max(...ys) + 0.3),
    series,
  };
  return renderChart(chart);
}

export function buildConvergence(text: string, spec: FigureSpec): string {
  const table = parseCsv(text);
  requireColumns(table, ["period", "ta_mse"]);
  const pts = table.rows
    .filter((r) => r.ta_mse !== "")
    .map((r) => [num(r, "period"), 10 * Math.log10(num(r, "ta_mse"))] as [number, number]);
  if (pts.length === 0) throw new SchemaError("no finite trajectory points");
  const series: Series[] = [{ label: "adaptive", points: pts, color: SERIES_COLORS[0] }];
  const area = plotArea();
  const xd = extent(series, 0);
  const yd = extent(series, 1);
  const chart: ChartSpec = {
    title: spec.title ?? "Adaptive convergence",
    xLabel: "averaging period index",
    yLabel: "TA-MSE [dB]",
    xScale: linearScale(xd, area.x),
    yScale: linearScale([yd[0] - 0.5, yd[1] + 0.5], area.y),
    xTicks: ticks(xd[0], xd[1]),
    yTicks: ticks(yd[0] - 0.5, yd[1] + 0.5),
    series,
  };
  return renderChart(chart);
}

export function buildScatter(text: string, spec: FigureSpec): string {
  const table = parseCsv(text);
  requireColumns(table, ["receiver", "point", "re", "im"]);
  let rows = table.rows;
  if (spec.receivers) rows = rows.filter((r) => spec.receivers!.includes(r.receiver));
  if (rows.length === 0) throw new SchemaError("no data rows after filtering");
  const names = RX_ORDER.filter((rx) => rows.some((r) => r.receiver === rx));
  const clouds = names.map((rx, i) => ({
    label: rx,
    color: SERIES_COLORS[i % SERIES_COLORS.length],
    points: rows
      .filter((r) => r.receiver === rx)
      .map((r) => [num(r, "re"), num(r, "im")] as [number, number]),
  }));
  return renderScatter(spec.title ?? "Demodulated soft values", clouds);
}

export function render(spec: FigureSpec, csvText: string): string {
  switch (spec.kind) {
    case "ta-mse":
      return buildTaMse(csvText, spec);
    case "ber":
      return buildBer(csvText, spec);
    case "scaling":
      return buildScaling(csvText, spec);
    case "delta":
      return buildDelta(csvText, spec);
    case "convergence":
      return buildConvergence(csvText, spec);
    case "scatter":
      return buildScatter(csvText, spec);
    default:
      throw new SchemaError(`unknown figure kind '${spec.kind}' (have: ${KINDS.join(", ")})`);
  }
}
