// Training dashboard state: append streamed per-epoch events monotonically
// and expose chart-ready series plus the job's terminal condition.

import type { EpochEvent, JobRecord, JobState } from "./types.js";

export interface ChartPoint {
  x: number;
  y: number;
}

export class Dashboard {
  readonly events: EpochEvent[] = [];
  state: JobState = "queued";
  error: string | null = null;
  modelId: string | null = null;

  /** Append one epoch event; out-of-order or duplicate epochs are rejected. */
  addEvent(event: EpochEvent): void {
    const last = this.events[this.events.length - 1];
    if (last !== undefined && event.epoch <= last.epoch) {
      throw new Error(`epoch ${event.epoch} arrived after ${last.epoch}`);
    }
    this.events.push(event);
  }

  applyJob(record: JobRecord): void {
    this.state = record.state;
    this.error = record.error;
    this.modelId = record.result.model_id ?? null;
    for (const event of record.events.slice(this.events.length)) {
      this.addEvent(event);
    }
  }

  get statusLabel(): string {
    if (this.state === "failed") {
      return this.error?.includes("diverged")
        ? `diverged: ${this.error}`
        : `failed: ${this.error ?? "unknown error"}`;
    }
    if (this.state === "cancelled") return "cancelled";
    if (this.state === "done") return `done (model ${this.modelId ?? "?"})`;
    return this.state;
  }

  series(key: "train_total" | "train_bce" | "train_kl" | "test_total"): ChartPoint[] {
    const points: ChartPoint[] = [];
    for (const e of this.events) {
      const y = e[key];
      if (y !== null) points.push({ x: e.epoch, y });
    }
    return points;
  }
}

/** Scale points into pixel space for a hand-rolled canvas polyline. */
export function toPolyline(
  points: ChartPoint[],
  width: number,
  height: number,
  pad = 4,
): Array<[number, number]> {
  if (points.length === 0) return [];
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const sx = (x: number) =>
    pad + ((x - x0) / Math.max(x1 - x0, 1e-9)) * (width - 2 * pad);
  const sy = (y: number) =>
    height - pad - ((y - y0) / Math.max(y1 - y0, 1e-9)) * (height - 2 * pad);
  return points.map((p) => [sx(p.x), sy(p.y)]);
}
