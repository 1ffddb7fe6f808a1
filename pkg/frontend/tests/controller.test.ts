import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { GameController } from "../src/controller.js";
import { PLAY_VIEW_RADIUS, playVisibleRadius } from "../src/render.js";
import type {
  Action,
  Briefing,
  CreateSessionResult,
  LevelInfo,
  MetricsReport,
  PhaseView,
  Sample,
  StateView,
  Transport,
} from "../src/types.js";

// 5x5 box, one chest set into the east wall at (4,2)
function makeBriefing(overrides: Partial<Briefing> = {}): Briefing {
  return {
    level_id: "lv",
    name: "Box",
    width: 5,
    height: 5,
    terrain: ["#####", "#...#", "#...#", "#...#", "#####"],
    start: { x: 1, y: 1, facing: "E" },
    map_visible_during_play: false,
    checkpoints: [
      {
        order: 1,
        chest: { x: 4, y: 2 },
        zone: [
          { x: 3, y: 1 },
          { x: 3, y: 2 },
          { x: 3, y: 3 },
        ],
      },
    ],
    target_items: [{ id: "torch", display_name: "Torch" }],
    ...overrides,
  };
}

function sv(phase: PhaseView, extra: Partial<StateView> = {}): StateView {
  return {
    session_id: "s1",
    participant_id: "p1",
    level_id: "lv",
    phase,
    inventory: [],
    checkpoint_count: 1,
    position: null,
    ...extra,
  };
}

const REPORT: MetricsReport = {
  session_id: "s1",
  participant_id: "p1",
  level_id: "lv",
  traveled_distance: 4,
  optimal_distance: 4,
  normalized_distance: 1,
  duration_ms: 1200,
  per_checkpoint_arrival_ms: [1200],
  items_correct: [true],
  craft_success: true,
};

class FakeTransport implements Transport {
  briefing: Briefing;
  state: StateView;
  nextStates: StateView[] = [];
  log: string[] = [];
  actions: Action[] = [];
  batches: Sample[][] = [];
  sampleError: ApiError | null = null;
  actionError: ApiError | null = null;
  report: MetricsReport = REPORT;

  constructor(briefing: Briefing = makeBriefing()) {
    this.briefing = briefing;
    this.state = sv({ kind: "briefing" });
  }

  async listLevels(): Promise<LevelInfo[]> {
    return [{ level_id: this.briefing.level_id, name: this.briefing.name, difficulty_rank: 1 }];
  }

  async createSession(): Promise<CreateSessionResult> {
    this.log.push("create");
    return { session_id: "s1", briefing: this.briefing };
  }

  async ackBriefing(): Promise<StateView> {
    this.log.push("ack");
    this.state = this.nextStates.shift() ?? sv({ kind: "navigating", next_checkpoint: 1 });
    return this.state;
  }

  async postSamples(_sid: string, samples: Sample[]): Promise<void> {
    this.log.push(`samples:${samples.length}`);
    if (this.sampleError) {
      const err = this.sampleError;
      this.sampleError = null;
      throw err;
    }
    this.batches.push(samples);
  }

  async postAction(_sid: string, action: Action): Promise<StateView> {
    this.log.push(`action:${action.action}`);
    this.actions.push(action);
    if (this.actionError) {
      const err = this.actionError;
      this.actionError = null;
      throw err;
    }
    const next = this.nextStates.shift();
    if (next) this.state = next;
    return this.state;
  }

  async getState(): Promise<StateView> {
    this.log.push("get");
    return this.state;
  }

  async getMetrics(): Promise<MetricsReport> {
    this.log.push("metrics");
    return this.report;
  }
}

interface Rig {
  fake: FakeTransport;
  game: GameController;
  clock: { t: number };
}

async function makeRig(options: { briefing?: Briefing; ack?: boolean } = {}): Promise<Rig> {
  const fake = new FakeTransport(options.briefing);
  const clock = { t: 0 };
  const game = new GameController({
    transport: fake,
    levelId: "lv",
    participantId: "p1",
    now: () => clock.t,
  });
  await game.start();
  if (options.ack !== false) await game.ackBriefing();
  return { fake, game, clock };
}

describe("session start", () => {
  it("stores the briefing and places the avatar on the start cell", async () => {
    const { game } = await makeRig({ ack: false });
    expect(game.phaseKind).toBe("briefing");
    expect(game.playerCell).toEqual({ x: 1, y: 1 });
    expect(game.briefing?.target_items.map((t) => t.id)).toEqual(["torch"]);
  });

  it("ack moves the session into navigating", async () => {
    const { game } = await makeRig();
    expect(game.phaseKind).toBe("navigating");
  });
});

describe("map visibility", () => {
  it("fogs the play view when the level hides the map", () => {
    expect(playVisibleRadius(makeBriefing())).toBe(PLAY_VIEW_RADIUS);
  });

  it("keeps the full map when the level allows it", () => {
    expect(playVisibleRadius(makeBriefing({ map_visible_during_play: true }))).toBeNull();
  });
});

describe("movement", () => {
  it("acknowledging the briefing buffers a sample on the start cell", async () => {
    const { fake, game } = await makeRig();
    await game.flushSamples();
    expect(fake.batches).toEqual([[{ t_ms: 0, x: 1.5, y: 1.5 }]]);
  });

  it("a legal step advances one cell and buffers a centered sample", async () => {
    const { fake, game } = await makeRig();
    expect(game.move(1, 0)).toBe(true);
    expect(game.playerCell).toEqual({ x: 2, y: 1 });
    await game.flushSamples();
    expect(fake.batches).toEqual([
      [
        { t_ms: 0, x: 1.5, y: 1.5 },
        { t_ms: 1, x: 2.5, y: 1.5 },
      ],
    ]);
  });

  it("walking into a wall is a local no-op with no sample", async () => {
    const { fake, game } = await makeRig();
    await game.flushSamples(); // clear the start-cell sample
    expect(game.move(0, -1)).toBe(false);
    expect(game.playerCell).toEqual({ x: 1, y: 1 });
    await game.flushSamples();
    expect(fake.log.filter((l) => l.startsWith("samples"))).toEqual(["samples:1"]);
  });

  it("movement is refused before the briefing is acknowledged", async () => {
    const { game } = await makeRig({ ack: false });
    expect(game.move(1, 0)).toBe(false);
  });

  it("timestamps stay strictly increasing even when the clock stalls", async () => {
    const { fake, game, clock } = await makeRig();
    clock.t = 100;
    game.move(1, 0);
    game.move(0, 1); // clock did not advance
    await game.flushSamples();
    const ts = fake.batches[0].map((s) => s.t_ms);
    expect(ts).toEqual([0, 100, 101]);
  });
});

describe("sample batching", () => {
  // corridor long enough for ten eastward steps
  const corridor = makeBriefing({
    width: 14,
    height: 3,
    terrain: ["##############", "#............#", "##############"],
    checkpoints: [],
    target_items: [],
  });

  it("flushes on the tenth buffered sample", async () => {
    const { fake, game } = await makeRig({ briefing: corridor });
    // the start-cell sample is already buffered, so 8 steps make 9
    for (let i = 0; i < 8; i++) expect(game.move(1, 0)).toBe(true);
    await game.idle();
    expect(fake.batches).toEqual([]);
    expect(game.pendingSampleCount).toBe(9);
    game.move(1, 0);
    await game.idle();
    expect(fake.batches.length).toBe(1);
    expect(fake.batches[0].length).toBe(10);
    expect(game.pendingSampleCount).toBe(0);
  });

  it("flushes once the oldest sample is 500 ms old", async () => {
    const { fake, game, clock } = await makeRig({ briefing: corridor });
    game.move(1, 0);
    clock.t = 499;
    await game.tick();
    expect(fake.batches).toEqual([]);
    clock.t = 500;
    await game.tick();
    expect(fake.batches.length).toBe(1);
  });

  it("accepted samples land in the trajectory buffer", async () => {
    const { game } = await makeRig({ briefing: corridor });
    game.move(1, 0);
    game.move(1, 0);
    await game.flushSamples();
    expect(game.sentSamples.map((s) => s.x)).toEqual([1.5, 2.5, 3.5]);
  });

  it("a rejected batch resyncs position from the server", async () => {
    const { fake, game } = await makeRig({ briefing: corridor });
    fake.sampleError = new ApiError(409, "non_monotonic_sample", "samples must be increasing");
    fake.state = sv(
      { kind: "navigating", next_checkpoint: 1 },
      { position: { t_ms: 7, x: 4.5, y: 1.5 } },
    );
    game.move(1, 0);
    await game.flushSamples();
    expect(game.messages.map((m) => m.code)).toContain("non_monotonic_sample");
    expect(fake.log).toContain("get");
    expect(game.playerCell).toEqual({ x: 4, y: 1 });
    expect(game.sentSamples).toEqual([]);
    expect(game.pendingSampleCount).toBe(0);
    // next accepted sample must continue after the server's last timestamp
    game.move(1, 0);
    await game.flushSamples();
    expect(fake.batches[0][0].t_ms).toBe(8);
  });
});

describe("chest interaction", () => {
  async function walkToChest(rig: Rig): Promise<void> {
    rig.game.move(1, 0);
    rig.game.move(1, 0); // now at (3,1), adjacent to the chest at (4,2)
  }

  it("interact away from any chest is a local message, no request", async () => {
    const rig = await makeRig();
    expect(await rig.game.interact()).toBe(false);
    expect(rig.game.messages.map((m) => m.code)).toContain("no_chest");
    expect(rig.fake.actions).toEqual([]);
  });

  it("interact flushes buffered samples before asking to open", async () => {
    const rig = await makeRig();
    await walkToChest(rig);
    rig.fake.nextStates = [sv({ kind: "chest_open", checkpoint: 1, slots: ["torch", "apple"], taken: null })];
    expect(await rig.game.interact()).toBe(true);
    const relevant = rig.fake.log.filter((l) => l.startsWith("samples") || l.startsWith("action"));
    expect(relevant).toEqual(["samples:3", "action:open_chest"]);
    expect(rig.fake.actions[0]).toEqual({ action: "open_chest", checkpoint: 1 });
    expect(rig.game.phaseKind).toBe("chest_open");
  });

  it("selection swap follows the server's view", async () => {
    const rig = await makeRig();
    await walkToChest(rig);
    rig.fake.nextStates = [
      sv({ kind: "chest_open", checkpoint: 1, slots: ["torch", "apple"], taken: null }),
      sv({ kind: "chest_open", checkpoint: 1, slots: ["torch", "apple"], taken: "apple" }),
      sv({ kind: "chest_open", checkpoint: 1, slots: ["torch", "apple"], taken: "torch" }),
    ];
    await rig.game.interact();
    await rig.game.selectItem("apple");
    expect(rig.game.state?.phase).toMatchObject({ taken: "apple" });
    await rig.game.selectItem("torch");
    expect(rig.game.state?.phase).toMatchObject({ taken: "torch" });
  });

  it("closing with nothing taken surfaces the server's refusal", async () => {
    const rig = await makeRig();
    await walkToChest(rig);
    rig.fake.nextStates = [sv({ kind: "chest_open", checkpoint: 1, slots: ["torch"], taken: null })];
    await rig.game.interact();
    rig.fake.actionError = new ApiError(409, "must_take_one", "take exactly one item first");
    expect(await rig.game.closeChest()).toBe(false);
    expect(rig.game.messages.map((m) => m.code)).toContain("must_take_one");
    expect(rig.game.phaseKind).toBe("chest_open"); // dialog stays up
  });

  it("an out-of-order open surfaces the server's refusal", async () => {
    const rig = await makeRig();
    await walkToChest(rig);
    rig.fake.actionError = new ApiError(409, "order_error", "checkpoint 1 comes first");
    expect(await rig.game.interact()).toBe(false);
    expect(rig.game.messages.map((m) => m.code)).toContain("order_error");
    expect(rig.game.phaseKind).toBe("navigating");
  });
});

describe("crafting and completion", () => {
  it("placement and result come entirely from server responses", async () => {
    const rig = await makeRig();
    rig.fake.nextStates = [
      sv({ kind: "crafting", cells: [null, null, null, null, null, null, null, null, null], available: ["torch"] }, { inventory: ["torch"] }),
      sv({ kind: "await_result", result_item: "lantern" }, { inventory: ["torch"] }),
      sv({ kind: "complete", craft_success: true }, { inventory: ["torch", "lantern"] }),
    ];
    await rig.game.closeChest(); // fake transition into crafting
    expect(rig.game.phaseKind).toBe("crafting");

    await rig.game.placeCraft("torch", 4);
    expect(rig.fake.actions.at(-1)).toEqual({ action: "place_craft", item: "torch", cell: 4 });
    expect(rig.game.state?.phase).toMatchObject({ kind: "await_result", result_item: "lantern" });

    await rig.game.takeResult();
    expect(rig.game.finished).toBe(true);
    // metrics were fetched automatically on completion
    await rig.game.idle();
    expect(rig.fake.log).toContain("metrics");
    expect(rig.game.report?.normalized_distance).toBe(1);
    // movement is dead on the completion screen
    expect(rig.game.move(1, 0)).toBe(false);
  });

  it("holds no craft verdict before the server reveals one", async () => {
    const rig = await makeRig();
    rig.fake.nextStates = [
      sv({ kind: "crafting", cells: [null, null, null, null, null, null, null, null, null], available: ["torch"] }, { inventory: ["torch"] }),
    ];
    await rig.game.closeChest();
    const phase = rig.game.state?.phase as Record<string, unknown>;
    expect(phase.craft_success).toBeUndefined();
    expect(phase.result_item).toBeUndefined();
    expect(rig.game.report).toBeNull();
  });
});

describe("request queue", () => {
  it("never lets two requests overlap", async () => {
    const events: string[] = [];
    let release: (() => void) | null = null;
    const fake = new FakeTransport();
    const slowFake: Transport = {
      ...fake,
      listLevels: fake.listLevels.bind(fake),
      createSession: fake.createSession.bind(fake),
      ackBriefing: fake.ackBriefing.bind(fake),
      postSamples: fake.postSamples.bind(fake),
      getState: fake.getState.bind(fake),
      getMetrics: fake.getMetrics.bind(fake),
      postAction: (sid, action) => {
        events.push(`start:${action.action}`);
        return new Promise((resolve) => {
          release = () => {
            events.push(`end:${action.action}`);
            resolve(sv({ kind: "navigating", next_checkpoint: 1 }));
          };
        });
      },
    };
    const game = new GameController({
      transport: slowFake,
      levelId: "lv",
      participantId: "p1",
      now: () => 0,
    });
    await game.start();

    const drain = () => new Promise((resolve) => setTimeout(resolve, 0));
    const first = game.closeChest();
    const second = game.selectItem("torch");
    await drain();
    expect(events).toEqual(["start:close_chest"]); // second is queued, not started
    release?.();
    await first;
    await drain();
    expect(events).toEqual(["start:close_chest", "end:close_chest", "start:select_item"]);
    release?.();
    await second;
    expect(events).toEqual([
      "start:close_chest",
      "end:close_chest",
      "start:select_item",
      "end:select_item",
    ]);
  });
});
