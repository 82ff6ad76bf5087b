import { analyze, canonicalBody, fetchCatalog, pollJob } from "./api.js";
import { renderChart, toChartModel } from "./charts.js";
import { readFormState, renderCatalog, validate } from "./form.js";
import { ResultHistory } from "./history.js";

const history = new ResultHistory();
let requestToken = 0; // bumped per submission; stale poll results are dropped

function setMessage(text: string): void {
  const el = document.querySelector<HTMLElement>("#message");
  if (el) el.textContent = text;
}

function renderHistory(): void {
  const strip = document.querySelector<HTMLElement>("#history");
  if (!strip) return;
  strip.replaceChildren(
    ...history.list().map((entry) => {
      const cell = document.createElement("div");
      cell.className = "history-cell";
      cell.title = entry.body;
      cell.appendChild(renderChart(entry.model));
      return cell;
    }),
  );
}

async function onSubmit(root: HTMLElement): Promise<void> {
  const state = readFormState(root);
  const problem = validate(state);
  if (problem) {
    setMessage(problem);
    return;
  }
  const token = ++requestToken;
  setMessage("running…");
  try {
    const resp = await analyze(state);
    let payload: Record<string, unknown> | null;
    if ("job_id" in resp) {
      payload = await pollJob(resp.job_id, () => token === requestToken);
    } else {
      payload = token === requestToken ? resp.payload : null;
    }
    if (payload === null) return; // superseded by a newer submission
    const model = toChartModel(state.analysis, payload);
    const chartHost = document.querySelector<HTMLElement>("#chart")!;
    chartHost.replaceChildren(renderChart(model));
    history.push({ body: canonicalBody(state), model });
    renderHistory();
    setMessage("");
  } catch (err) {
    if (token === requestToken) setMessage(String(err));
  }
}

export async function start(): Promise<void> {
  const root = document.querySelector<HTMLElement>("#app")!;
  try {
    renderCatalog(root, await fetchCatalog());
  } catch (err) {
    setMessage(`cannot reach the analysis service: ${String(err)}`);
    return;
  }
  root.querySelector<HTMLButtonElement>("#submit")!.addEventListener("click", (ev) => {
    ev.preventDefault();
    void onSubmit(root);
  });
}

if (typeof document !== "undefined" && document.querySelector("#app")) {
  void start();
}
