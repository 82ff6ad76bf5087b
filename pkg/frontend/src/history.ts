import type { ChartSeriesModel } from "./types.js";

export const HISTORY_LIMIT = 10;

export interface HistoryEntry {
  body: string; // canonical request body that produced the chart
  model: ChartSeriesModel;
}

/** Keeps the last N results so the user can compare against earlier
 * queries while refining the next one. */
export class ResultHistory {
  private entries: HistoryEntry[] = [];

  push(entry: HistoryEntry): void {
    this.entries.unshift(entry);
    if (this.entries.length > HISTORY_LIMIT) this.entries.length = HISTORY_LIMIT;
  }

  list(): readonly HistoryEntry[] {
    return this.entries;
  }
}
