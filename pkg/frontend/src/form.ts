import type { BoundSpec, Catalog, QueryFormState } from "./types.js";

const COMPRESSION_ANALYSES = new Set([
  "error_pdf",
  "distortion",
  "rate_distortion",
  "error_autocorrelation",
  "spectrum_diff",
  "derived_comparison",
  "speed",
]);

export function needsCompressors(analysis: string): boolean {
  return COMPRESSION_ANALYSES.has(analysis);
}

/** Populates the selectors from the catalog. Defaults: first dataset, no
 * compressors, analysis "stats". An empty catalog disables the form. */
export function renderCatalog(root: HTMLElement, catalog: Catalog): void {
  const datasetSel = root.querySelector<HTMLSelectElement>("#dataset")!;
  const compressorSel = root.querySelector<HTMLSelectElement>("#compressors")!;
  const analysisSel = root.querySelector<HTMLSelectElement>("#analysis")!;
  const submit = root.querySelector<HTMLButtonElement>("#submit")!;

  datasetSel.replaceChildren(
    ...catalog.datasets.map((d) => {
      const opt = document.createElement("option");
      opt.value = d.id;
      opt.textContent = `${d.id} (${d.dims.join("x")}, ${d.precision})`;
      return opt;
    }),
  );
  compressorSel.replaceChildren(
    ...catalog.compressors.map((id) => {
      const opt = document.createElement("option");
      opt.value = id;
      opt.textContent = id;
      return opt;
    }),
  );
  analysisSel.replaceChildren(
    ...catalog.analyses.map((name) => {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      return opt;
    }),
  );
  if (catalog.analyses.includes("stats")) analysisSel.value = "stats";

  const empty = catalog.datasets.length === 0;
  datasetSel.disabled = empty;
  compressorSel.disabled = empty;
  analysisSel.disabled = empty;
  submit.disabled = empty;
  const notice = root.querySelector<HTMLElement>("#form-notice");
  if (notice) notice.textContent = empty ? "no datasets configured on the server" : "";
}

export function parseBounds(text: string, kind: BoundSpec["kind"]): BoundSpec[] {
  return text
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map((part) => ({ kind, magnitude: Number(part) }));
}

export function readFormState(root: HTMLElement): QueryFormState {
  const datasetSel = root.querySelector<HTMLSelectElement>("#dataset")!;
  const compressorSel = root.querySelector<HTMLSelectElement>("#compressors")!;
  const analysisSel = root.querySelector<HTMLSelectElement>("#analysis")!;
  const boundsInput = root.querySelector<HTMLInputElement>("#bounds")!;
  const kindSel = root.querySelector<HTMLSelectElement>("#bound-kind")!;
  return {
    datasetId: datasetSel.value,
    analysis: analysisSel.value,
    compressorIds: Array.from(compressorSel.selectedOptions).map((o) => o.value),
    bounds: parseBounds(boundsInput.value, kindSel.value as BoundSpec["kind"]),
    params: {},
  };
}

/** Submit stays disabled until the state resolves: a dataset chosen, and for
 * compression analyses at least one compressor and a nonempty bound list. */
export function validate(state: QueryFormState): string | null {
  if (!state.datasetId) return "choose a dataset";
  if (needsCompressors(state.analysis)) {
    if (state.compressorIds.length === 0) return "choose at least one compressor";
    if (state.bounds.length === 0) return "enter at least one error bound";
    if (state.bounds.some((b) => !(b.magnitude > 0))) return "bounds must be positive numbers";
  }
  return null;
}
