// Game client state: a pure view of the server session plus optimistic
// drag-outline hints. Key bindings follow the game's controls: arrows rotate,
// S snaps the view, D enters decoder mode, E returns to encoder mode (erasing
// shadows server-side), N advances to the next level.

import type { Cell, GameAction, SessionState } from "./types.js";

export const BOUND = 4;

export type OutlineColor = "green" | "red";

export interface KeyBinding {
  action: GameAction | null;
  localOnly?: "snap" | "next-level";
}

/** Map a keyboard event key to the action it requests, or a local effect. */
export function keyToBinding(key: string, objectIdx = 0): KeyBinding | null {
  switch (key) {
    case "ArrowLeft":
      return { action: { type: "rotate", object: objectIdx, axis: "y", turns: 1 } };
    case "ArrowRight":
      return { action: { type: "rotate", object: objectIdx, axis: "y", turns: -1 } };
    case "ArrowUp":
      return { action: { type: "rotate", object: objectIdx, axis: "x", turns: 1 } };
    case "ArrowDown":
      return { action: { type: "rotate", object: objectIdx, axis: "x", turns: -1 } };
    case "d":
    case "D":
      return { action: { type: "set_mode", mode: "decoder" } };
    case "e":
    case "E":
      return { action: { type: "set_mode", mode: "encoder" } };
    case "s":
    case "S":
      return { action: null, localOnly: "snap" };
    case "n":
    case "N":
      return { action: null, localOnly: "next-level" };
    default:
      return null;
  }
}

/** Optimistic hint while dragging: can this cube land there? */
export function dragOutline(
  state: SessionState,
  objectIdx: number,
  from: Cell,
  to: Cell,
): OutlineColor {
  if (to.some((v) => Math.abs(v) > BOUND)) return "red";
  const cells = state.objects[objectIdx]?.cells ?? [];
  const occupied = cells.some(
    (c) => c[0] === to[0] && c[1] === to[1] && c[2] === to[2],
  );
  // moving onto any occupied cell is rejected, its own included
  if (occupied) return "red";
  if (state.mode !== "encoder") return "red";
  const hasSource = cells.some(
    (c) => c[0] === from[0] && c[1] === from[1] && c[2] === from[2],
  );
  return hasSource ? "green" : "red";
}

/** Cycle through the shipped levels in play order. */
export function nextLevelName(levels: string[], current: string): string {
  const sorted = [...levels].sort();
  const at = sorted.indexOf(current);
  return sorted[(at + 1) % sorted.length];
}

export class GameClient {
  state: SessionState | null = null;
  sessionId: string | null = null;
  private inFlight = false;

  /** Adopt server-confirmed state; the client never invents board changes. */
  applyServer(sessionId: string, state: SessionState): void {
    this.sessionId = sessionId;
    this.state = state;
  }

  /** One in-flight action per session; returns false when one is pending. */
  beginAction(): boolean {
    if (this.inFlight) return false;
    this.inFlight = true;
    return true;
  }

  endAction(): void {
    this.inFlight = false;
  }

  get busy(): boolean {
    return this.inFlight;
  }
}

// --- isometric rendering ---------------------------------------------------------

export interface IsoQuad {
  cell: Cell;
  /** screen-space polygon, painter-sorted back to front across cells */
  points: Array<[number, number]>;
  face: "top" | "left" | "right";
}

const ISO_X: [number, number] = [0.866, 0.5];
const ISO_Y: [number, number] = [-0.866, 0.5];
const ISO_Z: [number, number] = [0, -1];

export function isoProject(cell: Cell, scale = 16): [number, number] {
  const [x, y, z] = cell;
  return [
    scale * (x * ISO_X[0] + y * ISO_Y[0] + z * ISO_Z[0]),
    scale * (x * ISO_X[1] + y * ISO_Y[1] + z * ISO_Z[1]),
  ];
}

/** Painter-sorted faces for a set of cubes; deterministic for equal input. */
export function isoFaces(cells: Cell[], scale = 16): IsoQuad[] {
  const sorted = [...cells].sort(
    (a, b) => a[0] + a[1] - a[2] - (b[0] + b[1] - b[2]) || a[0] - b[0] || a[1] - b[1],
  );
  const quads: IsoQuad[] = [];
  for (const cell of sorted) {
    const [x, y, z] = cell;
    const corner = (dx: number, dy: number, dz: number) =>
      isoProject([x + dx, y + dy, z + dz] as Cell, scale);
    quads.push(
      { cell, face: "top", points: [corner(0, 0, 1), corner(1, 0, 1), corner(1, 1, 1), corner(0, 1, 1)] },
      { cell, face: "left", points: [corner(0, 0, 0), corner(0, 1, 0), corner(0, 1, 1), corner(0, 0, 1)] },
      { cell, face: "right", points: [corner(0, 0, 0), corner(1, 0, 0), corner(1, 0, 1), corner(0, 0, 1)] },
    );
  }
  return quads;
}

/** Deterministic draw list for a whole board state (objects + wall panels). */
export function renderBoard(state: SessionState, scale = 16): {
  objects: IsoQuad[][];
  shadows: string[][];
  targets: string[][];
  matched: boolean[];
} {
  return {
    objects: state.objects.map((o) => isoFaces(o.cells, scale)),
    shadows: state.emitted_shadows.map((rows) => [...rows]),
    targets: state.targets.map((rows) => [...rows]),
    matched: [...state.matched],
  };
}
