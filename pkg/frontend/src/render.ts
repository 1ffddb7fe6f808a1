import type { Briefing, Cell, Sample } from "./types.js";

export const CELL_PX = 28;

/** How far the avatar can see when the level hides the map during play. */
export const PLAY_VIEW_RADIUS = 3;

export interface WorldDrawOptions {
  player?: Cell;
  facing?: string;
  /** Checkpoint numbers are only labelled on the briefing map. */
  labelCheckpoints?: boolean;
  /** When set, cells further than this from the player are fogged out. */
  visibleRadius?: number | null;
  trajectory?: Sample[];
}

/**
 * The briefing map is for memorizing; levels that hide it during play get a
 * fogged view limited to the avatar's immediate surroundings.
 */
export function playVisibleRadius(briefing: Briefing): number | null {
  return briefing.map_visible_during_play ? null : PLAY_VIEW_RADIUS;
}

export function canvasSize(briefing: Briefing): { width: number; height: number } {
  return { width: briefing.width * CELL_PX, height: briefing.height * CELL_PX };
}

export function drawWorld(
  ctx: CanvasRenderingContext2D,
  briefing: Briefing,
  opts: WorldDrawOptions = {},
): void {
  const { terrain } = briefing;
  ctx.clearRect(0, 0, briefing.width * CELL_PX, briefing.height * CELL_PX);

  for (let y = 0; y < terrain.length; y++) {
    for (let x = 0; x < terrain[y].length; x++) {
      ctx.fillStyle = terrain[y][x] === "." ? "#e8e3d5" : "#4a4238";
      ctx.fillRect(x * CELL_PX, y * CELL_PX, CELL_PX, CELL_PX);
    }
  }

  // faint grid lines keep cell-by-cell movement legible
  ctx.strokeStyle = "rgba(0,0,0,0.08)";
  ctx.lineWidth = 1;
  for (let x = 0; x <= briefing.width; x++) {
    ctx.beginPath();
    ctx.moveTo(x * CELL_PX + 0.5, 0);
    ctx.lineTo(x * CELL_PX + 0.5, briefing.height * CELL_PX);
    ctx.stroke();
  }
  for (let y = 0; y <= briefing.height; y++) {
    ctx.beginPath();
    ctx.moveTo(0, y * CELL_PX + 0.5);
    ctx.lineTo(briefing.width * CELL_PX, y * CELL_PX + 0.5);
    ctx.stroke();
  }

  const radius = opts.visibleRadius ?? null;
  const inView = (x: number, y: number): boolean => {
    if (radius === null || !opts.player) return true;
    return Math.abs(x - opts.player.x) <= radius && Math.abs(y - opts.player.y) <= radius;
  };
  if (radius !== null) {
    ctx.fillStyle = "#201d17";
    for (let y = 0; y < terrain.length; y++) {
      for (let x = 0; x < terrain[y].length; x++) {
        if (!inView(x, y)) ctx.fillRect(x * CELL_PX, y * CELL_PX, CELL_PX, CELL_PX);
      }
    }
  }

  for (const cp of briefing.checkpoints) {
    if (!inView(cp.chest.x, cp.chest.y)) continue;
    const px = cp.chest.x * CELL_PX;
    const py = cp.chest.y * CELL_PX;
    ctx.fillStyle = "#c9a227";
    ctx.fillRect(px + 3, py + 3, CELL_PX - 6, CELL_PX - 6);
    ctx.strokeStyle = "#6b5313";
    ctx.strokeRect(px + 3.5, py + 3.5, CELL_PX - 7, CELL_PX - 7);
    if (opts.labelCheckpoints) {
      ctx.fillStyle = "#2b2107";
      ctx.font = `bold ${Math.floor(CELL_PX * 0.6)}px sans-serif`;
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(String(cp.order), px + CELL_PX / 2, py + CELL_PX / 2 + 1);
    }
  }

  if (opts.labelCheckpoints) {
    const sx = briefing.start.x * CELL_PX + CELL_PX / 2;
    const sy = briefing.start.y * CELL_PX + CELL_PX / 2;
    ctx.fillStyle = "#2e7d32";
    ctx.beginPath();
    ctx.arc(sx, sy, CELL_PX * 0.22, 0, Math.PI * 2);
    ctx.fill();
  }

  if (opts.trajectory && opts.trajectory.length > 1) {
    ctx.strokeStyle = "rgba(30, 90, 200, 0.8)";
    ctx.lineWidth = 2;
    ctx.beginPath();
    for (let i = 0; i < opts.trajectory.length; i++) {
      const s = opts.trajectory[i];
      if (i === 0) ctx.moveTo(s.x * CELL_PX, s.y * CELL_PX);
      else ctx.lineTo(s.x * CELL_PX, s.y * CELL_PX);
    }
    ctx.stroke();
  }

  if (opts.player) {
    const cx = opts.player.x * CELL_PX + CELL_PX / 2;
    const cy = opts.player.y * CELL_PX + CELL_PX / 2;
    ctx.fillStyle = "#1565c0";
    ctx.beginPath();
    ctx.arc(cx, cy, CELL_PX * 0.32, 0, Math.PI * 2);
    ctx.fill();
    // facing tick
    const d = facingDelta(opts.facing ?? "E");
    ctx.strokeStyle = "#0a3a6b";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + d.x * CELL_PX * 0.4, cy + d.y * CELL_PX * 0.4);
    ctx.stroke();
  }
}

function facingDelta(facing: string): Cell {
  switch (facing) {
    case "N":
      return { x: 0, y: -1 };
    case "S":
      return { x: 0, y: 1 };
    case "W":
      return { x: -1, y: 0 };
    default:
      return { x: 1, y: 0 };
  }
}
