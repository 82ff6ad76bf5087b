// Shapes exchanged with the analysis service (HTTP/JSON only; the client
// never recomputes metric values, it just plots what the server sent).

export interface CatalogDataset {
  id: string;
  dims: number[];
  precision: string;
  variable: string | null;
}

export interface Catalog {
  datasets: CatalogDataset[];
  compressors: string[];
  analyses: string[];
}

export interface BoundSpec {
  kind: "absolute" | "value_range_relative";
  magnitude: number;
}

export interface AnalysisQuery {
  dataset_id: string;
  analysis: string;
  compressor_ids: string[];
  bound_sweep: BoundSpec[];
  params: Record<string, unknown>;
}

/** Infinite PSNR arrives as the string sentinel "inf". */
export type MetricValue = number | "inf" | "-inf" | null;

export interface RatePoint {
  bit_rate: number;
  psnr: MetricValue;
  bound_kind: string;
  bound_magnitude: number;
}

export interface RateSeries {
  compressor: string;
  points: RatePoint[];
}

export type AnalyzeResponse =
  | { job_id: string }
  | { cached: boolean; payload: Record<string, unknown> };

export type JobResponse =
  | { status: "pending" | "running" }
  | { status: "error"; detail: string }
  | { status: "done"; cached: boolean; payload: Record<string, unknown> };

export interface QueryFormState {
  datasetId: string;
  analysis: string;
  compressorIds: string[];
  bounds: BoundSpec[];
  params: Record<string, unknown>;
}

export interface ChartPoint {
  x: number;
  y: number; // display value (clipped when the payload value was infinite)
  clipped: boolean;
  label?: string;
}

export interface ChartSeries {
  name: string;
  points: ChartPoint[];
}

export interface ChartSeriesModel {
  kind: "line" | "bar" | "step";
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  series: ChartSeries[];
}
