import type { GameController } from "./controller.js";
import { CELL_PX, canvasSize, drawWorld, playVisibleRadius } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function button(label: string, onClick: () => void, className = ""): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  if (className) b.className = className;
  b.addEventListener("click", onClick);
  return b;
}

const KEY_MOVES: Record<string, [number, number]> = {
  ArrowUp: [0, -1],
  ArrowDown: [0, 1],
  ArrowLeft: [-1, 0],
  ArrowRight: [1, 0],
  w: [0, -1],
  s: [0, 1],
  a: [-1, 0],
  d: [1, 0],
};

/** Binds a GameController to the page: screens, dialogs, keyboard. */
export class PlayUI {
  private readonly game: GameController;
  private readonly briefingCanvas: HTMLCanvasElement;
  private readonly worldCanvas: HTMLCanvasElement;
  private showTrajectory = false;
  private shownMessages = 0;

  constructor(game: GameController) {
    this.game = game;
    this.briefingCanvas = el<HTMLCanvasElement>("briefing-map");
    this.worldCanvas = el<HTMLCanvasElement>("world");
    game.onChange = () => this.render();

    window.addEventListener("keydown", (ev) => this.onKey(ev));
    el<HTMLButtonElement>("start-run").addEventListener("click", () => {
      void this.game.ackBriefing();
    });
    window.setInterval(() => this.game.tick(), 100);
  }

  showBriefing(): void {
    const briefing = this.game.briefing;
    if (!briefing) return;
    el("setup").hidden = true;
    el("briefing").hidden = false;
    el("level-title").textContent = `${briefing.name} (${briefing.level_id})`;

    const size = canvasSize(briefing);
    this.briefingCanvas.width = size.width;
    this.briefingCanvas.height = size.height;
    const ctx = this.briefingCanvas.getContext("2d");
    if (ctx) drawWorld(ctx, briefing, { labelCheckpoints: true });

    const list = el<HTMLOListElement>("target-list");
    list.innerHTML = "";
    for (const item of briefing.target_items) {
      const li = document.createElement("li");
      li.textContent = item.display_name;
      list.appendChild(li);
    }
  }

  private onKey(ev: KeyboardEvent): void {
    if (this.game.phaseKind !== "navigating") return;
    const move = KEY_MOVES[ev.key] ?? KEY_MOVES[ev.key.toLowerCase()];
    if (move) {
      ev.preventDefault();
      this.game.move(move[0], move[1]);
      return;
    }
    if (ev.key === "e" || ev.key === "E" || ev.key === "Enter" || ev.key === " ") {
      ev.preventDefault();
      void this.game.interact();
    }
  }

  render(): void {
    const { game } = this;
    const kind = game.phaseKind;
    if (kind === "briefing") {
      this.showBriefing();
      return;
    }
    if (kind === "idle" || !game.briefing) return;

    el("briefing").hidden = true;
    el("play").hidden = false;

    const size = canvasSize(game.briefing);
    if (this.worldCanvas.width !== size.width) {
      this.worldCanvas.width = size.width;
      this.worldCanvas.height = size.height;
    }
    const ctx = this.worldCanvas.getContext("2d");
    if (ctx) {
      drawWorld(ctx, game.briefing, {
        player: game.playerCell,
        facing: game.facing,
        // fog lifts once the run is over
        visibleRadius: game.finished ? null : playVisibleRadius(game.briefing),
        trajectory: this.showTrajectory && game.finished ? game.sentSamples : undefined,
      });
    }

    this.renderHud();
    this.renderDialog();
    this.renderMessages();
  }

  private renderHud(): void {
    const state = this.game.state;
    const phase = state?.phase;
    let status = "";
    if (phase?.kind === "navigating") {
      status = `Find chest ${phase.next_checkpoint} of ${state?.checkpoint_count}`;
    } else if (phase?.kind === "chest_open") {
      status = `Chest ${phase.checkpoint} open`;
    } else if (phase?.kind === "crafting") {
      status = "Craft what you collected";
    } else if (phase?.kind === "await_result") {
      status = "Result ready";
    } else if (phase?.kind === "complete") {
      status = "Run complete";
    }
    el("status").textContent = status;
    el("inventory").textContent =
      state && state.inventory.length ? `Carrying: ${state.inventory.join(", ")}` : "";
  }

  private renderMessages(): void {
    const box = el("messages");
    for (; this.shownMessages < this.game.messages.length; this.shownMessages++) {
      const div = document.createElement("div");
      div.className = "message";
      div.textContent = this.game.messages[this.shownMessages].text;
      box.appendChild(div);
      window.setTimeout(() => div.remove(), 6000);
    }
  }

  private renderDialog(): void {
    const dialog = el("dialog-box");
    const phase = this.game.state?.phase;
    dialog.innerHTML = "";
    if (!phase || phase.kind === "navigating" || phase.kind === "briefing") {
      dialog.hidden = true;
      return;
    }
    dialog.hidden = false;

    if (phase.kind === "chest_open") {
      const title = document.createElement("h3");
      title.textContent = `Chest ${phase.checkpoint}`;
      dialog.appendChild(title);
      const grid = document.createElement("div");
      grid.className = "slot-grid";
      for (const slot of phase.slots) {
        const b = button(slot, () => void this.game.selectItem(slot), "slot");
        if (phase.taken === slot) b.classList.add("selected");
        grid.appendChild(b);
      }
      dialog.appendChild(grid);
      const hint = document.createElement("p");
      hint.textContent = phase.taken
        ? `Taking: ${phase.taken} (click another to swap)`
        : "Pick one item to take";
      dialog.appendChild(hint);
      dialog.appendChild(button("Close chest", () => void this.game.closeChest(), "primary"));
      return;
    }

    if (phase.kind === "crafting") {
      const title = document.createElement("h3");
      title.textContent = "Crafting";
      dialog.appendChild(title);
      const grid = document.createElement("div");
      grid.className = "craft-grid";
      let picked: string | null = null;
      const avail = document.createElement("div");
      avail.className = "slot-grid";
      const refreshPick = () => {
        for (const node of avail.querySelectorAll("button")) {
          node.classList.toggle("selected", node.textContent === picked);
        }
      };
      phase.cells.forEach((cell, i) => {
        const b = button(cell ?? "", () => {
          if (cell !== null) {
            void this.game.removeCraft(i);
          } else if (picked !== null) {
            void this.game.placeCraft(picked, i);
          }
        }, "craft-cell");
        grid.appendChild(b);
      });
      dialog.appendChild(grid);
      const label = document.createElement("p");
      label.textContent = "Inventory (click an item, then a cell):";
      dialog.appendChild(label);
      for (const item of phase.available) {
        avail.appendChild(
          button(item, () => {
            picked = picked === item ? null : item;
            refreshPick();
          }, "slot"),
        );
      }
      dialog.appendChild(avail);
      return;
    }

    if (phase.kind === "await_result") {
      const title = document.createElement("h3");
      title.textContent = "Crafting result";
      dialog.appendChild(title);
      const p = document.createElement("p");
      p.textContent = `The grid produced: ${phase.result_item}`;
      dialog.appendChild(p);
      dialog.appendChild(button("Take it", () => void this.game.takeResult(), "primary"));
      return;
    }

    // complete
    const title = document.createElement("h3");
    title.textContent = phase.craft_success ? "Success!" : "Run complete";
    dialog.appendChild(title);
    const verdict = document.createElement("p");
    verdict.textContent = phase.craft_success
      ? "You crafted the right thing."
      : "That wasn't the intended result.";
    dialog.appendChild(verdict);
    const stats = document.createElement("p");
    const report = this.game.report;
    stats.textContent = report
      ? `Distance walked: ${report.traveled_distance.toFixed(1)} ` +
        `(best possible ${report.optimal_distance.toFixed(1)}), ` +
        `normalized ${report.normalized_distance.toFixed(3)}`
      : "Fetching your stats...";
    dialog.appendChild(stats);

    const toggleRow = document.createElement("label");
    const toggle = document.createElement("input");
    toggle.type = "checkbox";
    toggle.checked = this.showTrajectory;
    toggle.addEventListener("change", () => {
      this.showTrajectory = toggle.checked;
      this.render();
    });
    toggleRow.appendChild(toggle);
    toggleRow.appendChild(document.createTextNode(" show my path on the map"));
    dialog.appendChild(toggleRow);
  }
}

export { CELL_PX };
