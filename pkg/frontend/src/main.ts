// DOM wiring for the three panels: draw, train, play. All behavior lives in
// the pure modules; this file only moves events in and pixels out.

import { ApiClient } from "./api.js";
import { Dashboard, toPolyline } from "./dashboard.js";
import {
  GameClient,
  dragOutline,
  isoProject,
  keyToBinding,
  nextLevelName,
  renderBoard,
} from "./game.js";
import { DrawFlow } from "./strokes.js";
import type { Cell, GameAction, SessionState } from "./types.js";

const api = new ApiClient("");
const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

// --- draw panel -------------------------------------------------------------

let flow = new DrawFlow(Number(($("num-images") as HTMLInputElement).value || 3));
let datasetId: string | null = null;

function drawCanvas(): void {
  const canvas = $("draw-canvas") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#eee";
  ctx.lineWidth = flow.penWidth;
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  for (const stroke of flow.currentStrokes) {
    ctx.beginPath();
    stroke.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
    if (stroke.length === 1) {
      ctx.beginPath();
      ctx.arc(stroke[0][0], stroke[0][1], flow.penWidth / 2, 0, Math.PI * 2);
      ctx.fillStyle = "#eee";
      ctx.fill();
    }
  }
  const p = flow.progress;
  $("draw-status").textContent = flow.done
    ? "all drawings recorded; submit when ready"
    : `drawing ${p.index + 1} of ${p.total} for ${p.digit === "digit_a" ? "digit A" : "digit B"}`;
}

function bindDrawPanel(): void {
  const canvas = $("draw-canvas") as HTMLCanvasElement;
  let down = false;
  const pos = (ev: MouseEvent): [number, number] => {
    const r = canvas.getBoundingClientRect();
    return [ev.clientX - r.left, ev.clientY - r.top];
  };
  canvas.addEventListener("mousedown", (ev) => {
    down = true;
    flow.penDown(pos(ev));
    drawCanvas();
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (!down) return;
    flow.penMove(pos(ev));
    drawCanvas();
  });
  window.addEventListener("mouseup", () => {
    down = false;
    flow.penUp();
  });
  $("btn-clear").onclick = () => {
    flow.clear();
    drawCanvas();
  };
  $("btn-finish").onclick = () => {
    flow.finish();
    drawCanvas();
  };
  ($("num-images") as HTMLInputElement).onchange = (ev) => {
    flow = new DrawFlow(Number((ev.target as HTMLInputElement).value));
    drawCanvas();
  };
  $("btn-submit").onclick = async () => {
    const payload = flow.payload();
    const out = await api.createDataset(payload.digit_a, payload.digit_b, flow.numImagesPerDigit);
    datasetId = out.dataset_id;
    $("draw-status").textContent =
      `dataset ${out.dataset_id} (${out.train_size} train / ${out.test_size} test)` +
      (out.warning ? ` — ${out.warning}` : "");
  };
}

// --- training panel ------------------------------------------------------------

const dashboard = new Dashboard();

function drawChart(): void {
  const canvas = $("loss-chart") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  for (const [key, color] of [
    ["train_total", "#6cf"],
    ["test_total", "#fc6"],
  ] as const) {
    const line = toPolyline(dashboard.series(key), canvas.width, canvas.height);
    if (line.length < 2) continue;
    ctx.strokeStyle = color;
    ctx.beginPath();
    line.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
  $("train-status").textContent =
    `${dashboard.statusLabel} — ${dashboard.events.length} epochs`;
}

function bindTrainPanel(): void {
  $("btn-train").onclick = async () => {
    if (!datasetId) {
      $("train-status").textContent = "submit a dataset first";
      return;
    }
    const epochs = Number(($("epochs") as HTMLInputElement).value || 50);
    const { job_id } = await api.startTraining(datasetId, {
      epochs,
      batch_size: 8,
      hidden_dim: 128,
      latent_dim: 2,
    });
    dashboard.events.length = 0;
    for await (const event of api.streamEvents(job_id)) {
      dashboard.addEvent(event);
      drawChart();
    }
    dashboard.applyJob(await api.getJob(job_id));
    drawChart();
    if (dashboard.modelId) {
      const a = flow.recorded.digit_a[0];
      const b = flow.recorded.digit_b[0];
      const media = await api.interpolate(
        dashboard.modelId,
        { strokes: a },
        { strokes: b },
        10,
      );
      ($("interp-gif") as HTMLImageElement).src = api.mediaUrl(media.media_id);
    }
  };
}

// --- game panel --------------------------------------------------------------------

const game = new GameClient();
let levelNames: string[] = [];
let viewSpin = 0; // free client-side spin between snapped server states

function gameCenter(canvas: HTMLCanvasElement): [number, number] {
  return [canvas.width / 2, canvas.height / 2 + 40];
}

function drawGame(): void {
  const canvas = $("game-canvas") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#10131a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const state = game.state;
  if (!state) return;
  const [cx, cy] = gameCenter(canvas);
  ctx.save();
  ctx.translate(cx, cy);
  ctx.rotate(viewSpin);
  const board = renderBoard(state);
  const fill = { top: "#9ad", left: "#568", right: "#345" } as const;
  for (const quads of board.objects) {
    for (const quad of quads) {
      ctx.beginPath();
      quad.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      ctx.closePath();
      ctx.fillStyle = fill[quad.face];
      ctx.fill();
      ctx.strokeStyle = "#0a0c10";
      ctx.stroke();
    }
  }
  ctx.restore();

  const panel = $("wall-panel");
  panel.innerHTML = "";
  const block = (rows: string[], label: string, ok?: boolean) => {
    const div = document.createElement("div");
    div.className = "mask" + (ok === true ? " ok" : "");
    div.textContent = label + "\n" + rows.map((r) => r.replace(/0/g, "·").replace(/1/g, "█")).join("\n");
    panel.appendChild(div);
  };
  state.targets.forEach((rows, i) => block(rows, `target ${i}`, state.matched[i]));
  state.emitted_shadows.forEach((rows, i) => block(rows, `shadow ${i}`));
  $("game-status").textContent =
    `${state.level} — ${state.mode} mode — timer ${(state.timer_cs / 100).toFixed(1)}s` +
    (state.timer_running ? "" : " (stopped)");
}

async function sendAction(action: GameAction): Promise<void> {
  if (!game.sessionId || !game.beginAction()) return;
  try {
    const out = await api.act(game.sessionId, action);
    game.applyServer(out.session_id, out.state);
    if (out.result && "ok" in out.result && !out.result.ok) {
      $("game-status").textContent = `move rejected: ${out.result.reason}`;
    }
  } catch (err) {
    $("game-status").textContent = String(err);
  } finally {
    game.endAction();
    drawGame();
  }
}

async function loadLevel(name: string): Promise<void> {
  const out = await api.createSession(name, Math.floor(Math.random() * 1e6));
  game.applyServer(out.session_id, out.state);
  drawGame();
}

function nearestCell(state: SessionState, sx: number, sy: number): Cell | null {
  let best: Cell | null = null;
  let bestD = 20 * 20;
  for (const obj of state.objects) {
    for (const cell of obj.cells) {
      const [px, py] = isoProject(cell);
      const d = (px - sx) ** 2 + (py - sy) ** 2;
      if (d < bestD) {
        bestD = d;
        best = cell;
      }
    }
  }
  return best;
}

function bindGamePanel(): void {
  window.addEventListener("keydown", async (ev) => {
    if ((ev.target as HTMLElement).tagName === "INPUT") return;
    const binding = keyToBinding(ev.key);
    if (!binding) return;
    ev.preventDefault();
    if (binding.localOnly === "snap") {
      viewSpin = 0;
      drawGame();
      return;
    }
    if (binding.localOnly === "next-level") {
      if (game.state) await loadLevel(nextLevelName(levelNames, game.state.level));
      return;
    }
    if (binding.action) await sendAction(binding.action);
  });

  const canvas = $("game-canvas") as HTMLCanvasElement;
  let dragFrom: Cell | null = null;
  canvas.addEventListener("mousedown", (ev) => {
    if (!game.state) return;
    const r = canvas.getBoundingClientRect();
    const [cx, cy] = gameCenter(canvas);
    dragFrom = nearestCell(game.state, ev.clientX - r.left - cx, ev.clientY - r.top - cy);
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (!dragFrom || !game.state) return;
    const r = canvas.getBoundingClientRect();
    const [cx, cy] = gameCenter(canvas);
    const to = snapToCell(ev.clientX - r.left - cx, ev.clientY - r.top - cy, dragFrom[2]);
    drawGame();
    const color = dragOutline(game.state, 0, dragFrom, to);
    outlineCell(canvas, to, color);
  });
  canvas.addEventListener("mouseup", async (ev) => {
    if (!dragFrom || !game.state) return;
    const r = canvas.getBoundingClientRect();
    const [cx, cy] = gameCenter(canvas);
    const to = snapToCell(ev.clientX - r.left - cx, ev.clientY - r.top - cy, dragFrom[2]);
    const from = dragFrom;
    dragFrom = null;
    if (to[0] !== from[0] || to[1] !== from[1] || to[2] !== from[2]) {
      await sendAction({ type: "move", object: 0, from, to });
    }
  });
}

/** Invert the isometric projection at a fixed z layer, snapping to integers. */
function snapToCell(sx: number, sy: number, z: number, scale = 16): Cell {
  // forward: sx = s*0.866*(x - y); sy = s*(0.5*(x + y) - z)
  const a = sx / (scale * 0.866);
  const b = sy / scale + z;
  const x = Math.round((a + 2 * b) / 2);
  const y = Math.round((2 * b - a) / 2);
  return [x, y, z];
}

function outlineCell(canvas: HTMLCanvasElement, cell: Cell, color: "green" | "red"): void {
  const ctx = canvas.getContext("2d")!;
  const [cx, cy] = gameCenter(canvas);
  const [px, py] = isoProject(cell);
  ctx.strokeStyle = color === "green" ? "#4f6" : "#f46";
  ctx.lineWidth = 2;
  ctx.strokeRect(cx + px - 10, cy + py - 10, 20, 20);
}

// --- boot -----------------------------------------------------------------------

async function boot(): Promise<void> {
  bindDrawPanel();
  bindTrainPanel();
  bindGamePanel();
  drawCanvas();
  const levels = await api.listLevels();
  levelNames = levels.map((l) => l.name);
  const select = $("level-select") as HTMLSelectElement;
  for (const name of [...levelNames].sort()) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    select.appendChild(opt);
  }
  select.onchange = () => loadLevel(select.value);
  if (levelNames.length) await loadLevel([...levelNames].sort()[0]);
}

boot().catch((err) => {
  document.body.insertAdjacentText("beforeend", `failed to start: ${err}`);
});
