import { HttpTransport } from "./api.js";
import { GameController } from "./controller.js";
import { PlayUI } from "./ui.js";

function get<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

async function populateLevels(transport: HttpTransport): Promise<void> {
  const select = get<HTMLSelectElement>("level-select");
  select.innerHTML = "";
  const levels = await transport.listLevels();
  for (const level of levels) {
    const opt = document.createElement("option");
    opt.value = level.level_id;
    opt.textContent = `${level.name} (rank ${level.difficulty_rank})`;
    select.appendChild(opt);
  }
}

function defaultBase(): string {
  const fromQuery = new URLSearchParams(location.search).get("base");
  if (fromQuery) return fromQuery;
  // served from file:// during development; the service default port
  if (location.protocol === "file:") return "http://127.0.0.1:8000";
  return location.origin;
}

async function boot(): Promise<void> {
  const baseInput = get<HTMLInputElement>("base-url");
  const participantInput = get<HTMLInputElement>("participant-id");
  const status = get<HTMLElement>("setup-status");
  baseInput.value = defaultBase();
  participantInput.value = `p-${Math.random().toString(36).slice(2, 8)}`;

  let transport = new HttpTransport(baseInput.value);
  const reload = async () => {
    transport = new HttpTransport(baseInput.value);
    status.textContent = "";
    try {
      await populateLevels(transport);
    } catch (err) {
      status.textContent = `cannot reach service at ${baseInput.value}: ${String(err)}`;
    }
  };
  baseInput.addEventListener("change", () => void reload());
  await reload();

  get<HTMLButtonElement>("begin").addEventListener("click", () => {
    const levelId = get<HTMLSelectElement>("level-select").value;
    if (!levelId) return;
    const game = new GameController({
      transport,
      levelId,
      participantId: participantInput.value || "anonymous",
    });
    const ui = new PlayUI(game);
    void game.start().then(
      () => ui.showBriefing(),
      (err) => {
        status.textContent = `could not start: ${String(err)}`;
      },
    );
  });
}

void boot();
