import type {
  AnalyzeResponse,
  AnalysisQuery,
  Catalog,
  JobResponse,
  QueryFormState,
} from "./types.js";

const POLL_INTERVAL_MS = 250;

/** Recursively sorts object keys so the same form state always serializes
 * to the same bytes (array order is preserved, it is semantic). */
function sortKeys(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeys);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as object).sort()) {
      out[key] = sortKeys((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

export function toQuery(state: QueryFormState): AnalysisQuery {
  return {
    dataset_id: state.datasetId,
    analysis: state.analysis,
    compressor_ids: [...state.compressorIds],
    bound_sweep: state.bounds.map((b) => ({ kind: b.kind, magnitude: b.magnitude })),
    params: { ...state.params },
  };
}

export function canonicalBody(state: QueryFormState): string {
  return JSON.stringify(sortKeys(toQuery(state)));
}

export async function fetchCatalog(base = ""): Promise<Catalog> {
  const resp = await fetch(`${base}/api/catalog`);
  if (!resp.ok) throw new Error(`catalog fetch failed: ${resp.status}`);
  return (await resp.json()) as Catalog;
}

export async function analyze(state: QueryFormState, base = ""): Promise<AnalyzeResponse> {
  const resp = await fetch(`${base}/api/analyze`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: canonicalBody(state),
  });
  if (!resp.ok) {
    const detail = await resp.json().then((b) => b.detail).catch(() => resp.statusText);
    throw new Error(`analyze failed: ${detail}`);
  }
  return (await resp.json()) as AnalyzeResponse;
}

/** Polls a job until done/error. `isCurrent` is the request token check:
 * when a newer submission supersedes this one the stale poll loop stops
 * and the result is discarded. */
export async function pollJob(
  jobId: string,
  isCurrent: () => boolean,
  base = "",
  intervalMs = POLL_INTERVAL_MS,
): Promise<Record<string, unknown> | null> {
  for (;;) {
    if (!isCurrent()) return null;
    const resp = await fetch(`${base}/api/jobs/${jobId}`);
    if (!resp.ok) throw new Error(`job poll failed: ${resp.status}`);
    const body = (await resp.json()) as JobResponse;
    if (body.status === "done") return isCurrent() ? body.payload : null;
    if (body.status === "error") throw new Error(body.detail);
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
