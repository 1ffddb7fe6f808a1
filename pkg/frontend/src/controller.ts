import { ApiError } from "./api.js";
import type {
  Action,
  Briefing,
  Cell,
  MetricsReport,
  Sample,
  StateView,
  Transport,
} from "./types.js";

export interface ClientMessage {
  code: string;
  text: string;
}

export interface ControllerOptions {
  transport: Transport;
  levelId: string;
  participantId: string;
  /** Monotonic clock in milliseconds. Defaults to performance.now. */
  now?: () => number;
  /** Flush the sample buffer when it reaches this many samples. */
  batchSize?: number;
  /** ... or when the oldest buffered sample is this old. */
  batchMs?: number;
}

/**
 * Client-side session driver. Holds the view the UI renders and talks to the
 * service. Deliberately knows no game rules beyond "you can't walk into a
 * wall": chest order, item checks and craft outcomes all come back from the
 * server, and server refusals surface as user-visible messages.
 *
 * All requests go through a single queue so a burst of inputs can't
 * interleave two in-flight calls for the same session.
 */
export class GameController {
  readonly transport: Transport;
  readonly levelId: string;
  readonly participantId: string;

  sessionId = "";
  briefing: Briefing | null = null;
  state: StateView | null = null;
  report: MetricsReport | null = null;
  playerCell: Cell = { x: 0, y: 0 };
  facing = "E";
  messages: ClientMessage[] = [];
  /** Samples the server has accepted, kept for the trajectory overlay. */
  sentSamples: Sample[] = [];
  onChange: (() => void) | null = null;

  private readonly now: () => number;
  private readonly batchSize: number;
  private readonly batchMs: number;
  private pending: Sample[] = [];
  private pendingSince = 0;
  private t0 = 0;
  private lastT = -1;
  private tail: Promise<unknown> = Promise.resolve();

  constructor(options: ControllerOptions) {
    this.transport = options.transport;
    this.levelId = options.levelId;
    this.participantId = options.participantId;
    this.now = options.now ?? (() => performance.now());
    this.batchSize = options.batchSize ?? 10;
    this.batchMs = options.batchMs ?? 500;
  }

  get phaseKind(): string {
    if (this.state) return this.state.phase.kind;
    return this.briefing ? "briefing" : "idle";
  }

  /** True once the run is over; the UI disables every input then. */
  get finished(): boolean {
    return this.state?.phase.kind === "complete";
  }

  private emit(): void {
    this.onChange?.();
  }

  private say(code: string, text: string): void {
    this.messages.push({ code, text });
    this.emit();
  }

  /** Serialize a transport call behind everything already queued. */
  private enqueue<T>(fn: () => Promise<T>): Promise<T> {
    const next = this.tail.then(fn, fn);
    this.tail = next.catch(() => undefined);
    return next;
  }

  async start(): Promise<void> {
    const created = await this.enqueue(() =>
      this.transport.createSession(this.levelId, this.participantId),
    );
    this.sessionId = created.session_id;
    this.briefing = created.briefing;
    this.playerCell = { x: created.briefing.start.x, y: created.briefing.start.y };
    this.facing = created.briefing.start.facing;
    this.emit();
  }

  async ackBriefing(): Promise<void> {
    const ok = await this.runAction(() => this.transport.ackBriefing(this.sessionId));
    if (ok) {
      this.t0 = this.now();
      this.lastT = -1;
      // Traveled distance is measured between samples, so the walk has to
      // start with one on the start cell or the first step would be free.
      this.bufferSample(this.playerCell.x, this.playerCell.y);
    }
  }

  // -- movement ------------------------------------------------------------

  private walkable(x: number, y: number): boolean {
    const rows = this.briefing?.terrain;
    if (!rows) return false;
    if (y < 0 || y >= rows.length) return false;
    const row = rows[y];
    if (x < 0 || x >= row.length) return false;
    return row[x] === ".";
  }

  /**
   * One key press, one cell. A blocked or out-of-bounds step is a local
   * no-op: nothing is buffered and nothing reaches the server.
   */
  move(dx: number, dy: number): boolean {
    if (this.state?.phase.kind !== "navigating") return false;
    this.facing = dx > 0 ? "E" : dx < 0 ? "W" : dy > 0 ? "S" : "N";
    const x = this.playerCell.x + dx;
    const y = this.playerCell.y + dy;
    if (!this.walkable(x, y)) {
      this.emit();
      return false;
    }
    this.playerCell = { x, y };
    this.bufferSample(x, y);
    this.emit();
    return true;
  }

  private bufferSample(cellX: number, cellY: number): void {
    const t = Math.max(Math.round(this.now() - this.t0), this.lastT + 1);
    this.lastT = t;
    if (this.pending.length === 0) this.pendingSince = this.now();
    this.pending.push({ t_ms: t, x: cellX + 0.5, y: cellY + 0.5 });
    if (this.pending.length >= this.batchSize) void this.flushSamples();
  }

  /** Called on a short interval; flushes a buffer that has sat too long. */
  tick(): Promise<void> {
    if (this.pending.length === 0) return Promise.resolve();
    if (this.now() - this.pendingSince >= this.batchMs) return this.flushSamples();
    return Promise.resolve();
  }

  get pendingSampleCount(): number {
    return this.pending.length;
  }

  /** Resolves once every request queued so far has settled. */
  idle(): Promise<void> {
    return this.tail.then(
      () => undefined,
      () => undefined,
    );
  }

  flushSamples(): Promise<void> {
    if (this.pending.length === 0) return Promise.resolve();
    const batch = this.pending;
    this.pending = [];
    return this.enqueue(async () => {
      try {
        await this.transport.postSamples(this.sessionId, batch);
        this.sentSamples.push(...batch);
      } catch (err) {
        if (!(err instanceof ApiError)) throw err;
        // Whole batch rejected; fall back to whatever the server has.
        this.say(err.code, err.message);
        await this.resync();
      }
    });
  }

  private async resync(): Promise<void> {
    const state = await this.transport.getState(this.sessionId);
    this.state = state;
    if (state.position) {
      this.playerCell = { x: Math.floor(state.position.x), y: Math.floor(state.position.y) };
      this.lastT = state.position.t_ms;
    } else if (this.briefing) {
      this.playerCell = { x: this.briefing.start.x, y: this.briefing.start.y };
      this.lastT = -1;
    }
    this.emit();
  }

  // -- actions ---------------------------------------------------------------

  private async runAction(call: () => Promise<StateView>): Promise<boolean> {
    try {
      const state = await this.enqueue(call);
      this.state = state;
      this.emit();
      if (state.phase.kind === "complete" && !this.report) await this.fetchMetrics();
      return true;
    } catch (err) {
      if (!(err instanceof ApiError)) throw err;
      this.say(err.code, err.message);
      return false;
    }
  }

  private action(action: Action): Promise<boolean> {
    return this.runAction(() => this.transport.postAction(this.sessionId, action));
  }

  /**
   * Open the chest next to the player. The client only picks which chest is
   * within reach; whether it's the *right* chest is the server's call.
   */
  async interact(): Promise<boolean> {
    if (this.state?.phase.kind !== "navigating") return false;
    const near = (this.briefing?.checkpoints ?? [])
      .filter(
        (cp) =>
          Math.abs(cp.chest.x - this.playerCell.x) <= 1 &&
          Math.abs(cp.chest.y - this.playerCell.y) <= 1,
      )
      .sort((a, b) => a.order - b.order);
    if (near.length === 0) {
      this.say("no_chest", "no chest within reach");
      return false;
    }
    // The server checks proximity against the last accepted sample, so the
    // buffered tail of the walk has to land first.
    await this.flushSamples();
    return this.action({ action: "open_chest", checkpoint: near[0].order });
  }

  selectItem(item: string): Promise<boolean> {
    return this.action({ action: "select_item", item });
  }

  closeChest(): Promise<boolean> {
    return this.action({ action: "close_chest" });
  }

  placeCraft(item: string, cell: number): Promise<boolean> {
    return this.action({ action: "place_craft", item, cell });
  }

  removeCraft(cell: number): Promise<boolean> {
    return this.action({ action: "remove_craft", cell });
  }

  takeResult(): Promise<boolean> {
    return this.action({ action: "take_result" });
  }

  async fetchMetrics(): Promise<MetricsReport> {
    const report = await this.enqueue(() => this.transport.getMetrics(this.sessionId));
    this.report = report;
    this.emit();
    return report;
  }
}
