import type {
  ChartPoint,
  ChartSeries,
  ChartSeriesModel,
  MetricValue,
  RateSeries,
} from "./types.js";

const WIDTH = 640;
const HEIGHT = 360;
const MARGIN = 40;
const SVG_NS = "http://www.w3.org/2000/svg";

function numbers(payload: Record<string, unknown>, key: string): number[] {
  const arr = payload[key];
  return Array.isArray(arr) ? (arr as number[]) : [];
}

/** Maps an analysis payload to a chart model. Finite values pass through
 * untouched; "inf" is marked clipped and later pinned to the axis top. */
export function toChartModel(
  analysis: string,
  payload: Record<string, unknown>,
): ChartSeriesModel {
  if (analysis === "rate_distortion") {
    const series: ChartSeries[] = ((payload.series as RateSeries[]) ?? []).map((s) => ({
      name: s.compressor,
      points: s.points.map((p) => metricPoint(p.bit_rate, p.psnr)),
    }));
    return {
      kind: "line",
      title: "rate-distortion",
      xLabel: "bit rate (bits/value)",
      yLabel: "PSNR (dB)",
      logX: false,
      series,
    };
  }
  if (analysis === "error_pdf") {
    const series = seriesEntries(payload).map((entry) => ({
      name: entryName(entry),
      points: zipPoints(numbers(entry, "edges"), numbers(entry, "pdf")),
    }));
    return {
      kind: "step",
      title: "error distribution",
      xLabel: "error",
      yLabel: "probability",
      logX: false,
      series,
    };
  }
  if (analysis === "autocorrelation" || analysis === "error_autocorrelation") {
    const entries =
      analysis === "autocorrelation" ? [payload] : seriesEntries(payload);
    const series = entries.map((entry) => ({
      name: analysis === "autocorrelation" ? "data" : entryName(entry),
      points: zipPoints(numbers(entry, "lags"), numbers(entry, "coefficients")),
    }));
    return {
      kind: "bar",
      title: analysis,
      xLabel: "lag",
      yLabel: "coefficient",
      logX: false,
      series,
    };
  }
  if (analysis === "spectrum_diff") {
    const series = seriesEntries(payload).map((entry) => ({
      name: entryName(entry),
      points: zipPoints(numbers(entry, "bins"), numbers(entry, "differences")),
    }));
    return {
      kind: "line",
      title: "spectrum difference",
      xLabel: "frequency bin",
      yLabel: "relative amplitude difference",
      logX: false,
      series,
    };
  }
  if (analysis === "distribution") {
    return {
      kind: "step",
      title: "value distribution",
      xLabel: "value",
      yLabel: "probability",
      logX: false,
      series: [{ name: "pdf", points: zipPoints(numbers(payload, "edges"), numbers(payload, "pdf")) }],
    };
  }
  if (analysis === "psd") {
    const power = numbers(payload, "power");
    return {
      kind: "line",
      title: "power spectral density",
      xLabel: "frequency bin",
      yLabel: "power",
      logX: false,
      series: [{ name: "psd", points: power.map((y, x) => ({ x, y, clipped: false })) }],
    };
  }
  // scalar analyses (stats, distortion, speed, ...) render as a bar per field
  const series = seriesEntries(payload).map((entry) => ({
    name: entryName(entry),
    points: scalarBars(entry),
  }));
  return {
    kind: "bar",
    title: analysis,
    xLabel: "",
    yLabel: "value",
    logX: false,
    series: series.length ? series : [{ name: analysis, points: scalarBars(payload) }],
  };
}

function seriesEntries(payload: Record<string, unknown>): Record<string, unknown>[] {
  return Array.isArray(payload.series)
    ? (payload.series as Record<string, unknown>[])
    : [];
}

function entryName(entry: Record<string, unknown>): string {
  const comp = entry.compressor ?? "?";
  const mag = entry.bound_magnitude;
  return mag === undefined ? String(comp) : `${comp} @ ${mag}`;
}

function metricPoint(x: number, y: MetricValue): ChartPoint {
  if (y === "inf") return { x, y: Number.MAX_VALUE, clipped: true };
  if (y === "-inf") return { x, y: -Number.MAX_VALUE, clipped: true };
  return { x, y: y ?? 0, clipped: false };
}

function zipPoints(xs: number[], ys: number[]): ChartPoint[] {
  return xs.map((x, i) => ({ x, y: ys[i], clipped: false }));
}

function scalarBars(entry: Record<string, unknown>): ChartPoint[] {
  const points: ChartPoint[] = [];
  let i = 0;
  for (const [key, value] of Object.entries(entry)) {
    if (typeof value === "number") {
      points.push({ x: i++, y: value, clipped: false, label: key });
    } else if (value === "inf") {
      points.push({ x: i++, y: Number.MAX_VALUE, clipped: true, label: key });
    }
  }
  return points;
}

/** Renders the model to an SVG element. Every mark carries data-x/data-y
 * attributes with the payload values verbatim so tests (and curious users)
 * can confirm nothing was recomputed client-side. */
export function renderChart(model: ChartSeriesModel): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", `chart chart-${model.kind}`);
  svg.setAttribute("data-title", model.title);

  const allPoints = model.series.flatMap((s) => s.points);
  if (allPoints.length === 0) {
    const msg = document.createElementNS(SVG_NS, "text");
    msg.setAttribute("x", String(WIDTH / 2));
    msg.setAttribute("y", String(HEIGHT / 2));
    msg.setAttribute("class", "no-data");
    msg.textContent = "no data";
    svg.appendChild(msg);
    return svg;
  }

  const finite = allPoints.filter((p) => !p.clipped);
  const xs = allPoints.map((p) => p.x);
  const ys = finite.length ? finite.map((p) => p.y) : [0, 1];
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys, 0);
  const yMax = Math.max(...ys);
  // clipped (infinite) marks own the axis top; finite marks stay below it
  const headroom = allPoints.some((p) => p.clipped) ? 20 : 0;
  const sx = (x: number) =>
    xMax === xMin ? WIDTH / 2 : MARGIN + ((x - xMin) / (xMax - xMin)) * (WIDTH - 2 * MARGIN);
  const sy = (y: number) => {
    if (y >= Number.MAX_VALUE) return MARGIN; // clipped to the axis top
    if (yMax === yMin) return HEIGHT / 2;
    const span = HEIGHT - 2 * MARGIN - headroom;
    return HEIGHT - MARGIN - ((y - yMin) / (yMax - yMin)) * span;
  };

  model.series.forEach((series, si) => {
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("class", "series");
    group.setAttribute("data-series", series.name);
    if (model.kind !== "bar" && series.points.length > 1) {
      const path = document.createElementNS(SVG_NS, "polyline");
      path.setAttribute("class", "series-line");
      path.setAttribute(
        "points",
        series.points.map((p) => `${sx(p.x)},${sy(p.clipped ? Number.MAX_VALUE : p.y)}`).join(" "),
      );
      group.appendChild(path);
    }
    for (const p of series.points) {
      const mark = document.createElementNS(SVG_NS, model.kind === "bar" ? "rect" : "circle");
      mark.setAttribute("class", p.clipped ? "point inf-marker" : "point");
      mark.setAttribute("data-x", String(p.x));
      mark.setAttribute("data-y", p.clipped ? "inf" : String(p.y));
      if (p.label) mark.setAttribute("data-label", p.label);
      const px = sx(p.x);
      const py = sy(p.clipped ? Number.MAX_VALUE : p.y);
      if (model.kind === "bar") {
        mark.setAttribute("x", String(px - 2 + si));
        mark.setAttribute("y", String(Math.min(py, sy(0))));
        mark.setAttribute("width", "4");
        mark.setAttribute("height", String(Math.abs(sy(0) - py)));
      } else {
        mark.setAttribute("cx", String(px));
        mark.setAttribute("cy", String(py));
        mark.setAttribute("r", "3");
      }
      group.appendChild(mark);
      if (p.clipped) {
        const tag = document.createElementNS(SVG_NS, "text");
        tag.setAttribute("class", "inf-label");
        tag.setAttribute("x", String(px));
        tag.setAttribute("y", String(MARGIN - 6));
        tag.textContent = "∞";
        group.appendChild(tag);
      }
    }
    svg.appendChild(group);
  });
  return svg;
}
