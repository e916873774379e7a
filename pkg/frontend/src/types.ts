// Wire types mirroring the service JSON payloads.

export type Point = [number, number];

export interface StrokeSetPayload {
  canvas_size: number;
  pen_width: number;
  strokes: Point[][];
}

export interface DatasetResponse {
  dataset_id: string;
  size: number;
  train_size: number;
  test_size: number;
  warning: string | null;
}

export interface EpochEvent {
  epoch: number;
  train_total: number;
  train_bce: number;
  train_kl: number;
  test_total: number | null;
}

export type JobState = "queued" | "running" | "done" | "failed" | "cancelled";

export interface JobRecord {
  id: string;
  kind: string;
  state: JobState;
  events: EpochEvent[];
  error: string | null;
  result: { model_id?: string };
  created_at: string;
}

export type Cell = [number, number, number];

export interface ObjectState {
  cells: Cell[];
  orientation: number[][];
}

export interface SessionState {
  level: string;
  variant: "AE" | "VAE";
  seed: number;
  mode: "encoder" | "decoder";
  objects: ObjectState[];
  matched: boolean[];
  emitted_shadows: string[][];
  targets: string[][];
  timer_cs: number;
  timer_running: boolean;
}

export interface SessionResponse {
  session_id: string;
  state: SessionState;
  log: GameAction[];
  result?: MoveOutcome | { shadow: string[] } | { matched: boolean } | null;
}

export interface MoveOutcome {
  ok: boolean;
  reason: "occupied" | "out_of_bounds" | null;
}

export type GameAction =
  | { type: "move"; object: number; from: Cell; to: Cell }
  | { type: "rotate"; object: number; axis: "x" | "y" | "z"; turns: number }
  | { type: "set_mode"; mode: "encoder" | "decoder" }
  | { type: "cast" }
  | { type: "check"; target: number }
  | { type: "tick"; dcs: number };

export interface LevelInfo {
  name: string;
  variant: "AE" | "VAE";
  cube_budget: number;
  targets: string[][];
}
