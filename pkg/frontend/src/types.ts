// Shapes mirrored from the service's JSON responses. The client renders
// these as-is; it never derives game state on its own.

export interface Cell {
  x: number;
  y: number;
}

export interface LevelInfo {
  level_id: string;
  name: string;
  difficulty_rank: number;
}

export interface BriefingCheckpoint {
  order: number;
  chest: Cell;
  zone: Cell[];
}

export interface TargetItem {
  id: string;
  display_name: string;
}

export interface Briefing {
  level_id: string;
  name: string;
  width: number;
  height: number;
  terrain: string[];
  start: { x: number; y: number; facing: string };
  map_visible_during_play: boolean;
  checkpoints: BriefingCheckpoint[];
  target_items: TargetItem[];
}

export interface Sample {
  t_ms: number;
  x: number;
  y: number;
}

export type PhaseView =
  | { kind: "briefing" }
  | { kind: "navigating"; next_checkpoint: number }
  | { kind: "chest_open"; checkpoint: number; slots: string[]; taken: string | null }
  | { kind: "crafting"; cells: (string | null)[]; available: string[] }
  | { kind: "await_result"; result_item: string }
  | { kind: "complete"; craft_success: boolean };

export interface StateView {
  session_id: string;
  participant_id: string;
  level_id: string;
  phase: PhaseView;
  inventory: string[];
  checkpoint_count: number;
  position: Sample | null;
}

export interface CreateSessionResult {
  session_id: string;
  briefing: Briefing;
}

export interface MetricsReport {
  session_id: string;
  participant_id: string;
  level_id: string;
  traveled_distance: number;
  optimal_distance: number;
  normalized_distance: number;
  duration_ms: number;
  per_checkpoint_arrival_ms: number[];
  items_correct: boolean[];
  craft_success: boolean;
}

export type Action =
  | { action: "open_chest"; checkpoint: number }
  | { action: "select_item"; item: string }
  | { action: "close_chest" }
  | { action: "place_craft"; item: string; cell: number }
  | { action: "remove_craft"; cell: number }
  | { action: "take_result" };

export interface Transport {
  listLevels(): Promise<LevelInfo[]>;
  createSession(levelId: string, participantId: string): Promise<CreateSessionResult>;
  ackBriefing(sessionId: string): Promise<StateView>;
  postSamples(sessionId: string, samples: Sample[]): Promise<void>;
  postAction(sessionId: string, action: Action): Promise<StateView>;
  getState(sessionId: string): Promise<StateView>;
  getMetrics(sessionId: string): Promise<MetricsReport>;
}
