"""Deterministic per-session task state machine.

One session is one participant's single-level run: briefing, ordered
checkpoint navigation, one item taken per chest, a final 3x3 craft, then the
session freezes. All rule violations raise RuleViolation with a stable
machine code; out-of-order chest attempts are additionally logged as events
before being rejected (useful behavioral signal).

Sessions are single-writer: callers must serialize operations on one
Session. Distinct sessions share nothing.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any

from .model import (
    CRAFT_CELLS,
    FORMAT_VERSION,
    Cell,
    LevelSpec,
    TrajectorySample,
    canonical_json,
    chebyshev,
    validate_level,
)

DEFAULT_STARTED_AT = "1970-01-01T00:00:00Z"


class RuleViolation(Exception):
    """A game-rule violation. `code` is the stable machine-readable id."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


class InvalidLevelError(ValueError):
    """start_session was given a level that fails validation."""

    def __init__(self, first_code: str, message: str):
        self.first_code = first_code
        super().__init__(f"invalid_level: {first_code} ({message})")


# --- Phases ----------------------------------------------------------------


@dataclass(frozen=True)
class Briefing:
    kind = "briefing"


@dataclass(frozen=True)
class Navigating:
    kind = "navigating"
    next_checkpoint: int


@dataclass(frozen=True)
class ChestOpen:
    kind = "chest_open"
    checkpoint: int
    taken: str | None


@dataclass(frozen=True)
class Crafting:
    kind = "crafting"
    cells: tuple[str | None, ...]  # 9 craft cells, row-major


@dataclass(frozen=True)
class AwaitResult:
    kind = "await_result"
    result_item: str


@dataclass(frozen=True)
class Complete:
    kind = "complete"
    craft_success: bool


Phase = Briefing | Navigating | ChestOpen | Crafting | AwaitResult | Complete


@dataclass(frozen=True)
class Event:
    t_ms: int
    kind: str
    payload: dict[str, Any]

    def to_doc(self) -> dict[str, Any]:
        return {"t_ms": self.t_ms, "kind": self.kind, "payload": dict(self.payload)}


class Session:
    """Live state of one run. Mutated only through the operations below."""

    def __init__(
        self,
        level: LevelSpec,
        participant_id: str,
        session_id: str,
        started_at: str = DEFAULT_STARTED_AT,
    ):
        self.level = level
        self.participant_id = participant_id
        self.session_id = session_id
        self.started_at = started_at
        self.phase: Phase = Briefing()
        self.inventory: list[str] = []
        self.trajectory: list[TrajectorySample] = []
        self.events: list[Event] = []
        self._checkpoints = sorted(level.checkpoints, key=lambda cp: cp.order_index)
        self._log("session_started", {"level_id": level.level_id, "participant_id": participant_id})

    # --- internals ---------------------------------------------------------

    @property
    def checkpoint_count(self) -> int:
        return len(self._checkpoints)

    def _now(self) -> int:
        return self.trajectory[-1].t_ms if self.trajectory else 0

    def _log(self, kind: str, payload: dict[str, Any]) -> None:
        self.events.append(Event(self._now(), kind, payload))

    def _guard(self, *allowed: type) -> None:
        if isinstance(self.phase, Complete):
            raise RuleViolation("frozen_session", "session is complete; no further operations")
        if not isinstance(self.phase, tuple(allowed)):
            names = "/".join(a.kind for a in allowed)
            raise RuleViolation(
                "phase_error", f"operation requires phase {names}, current is {self.phase.kind}"
            )

    def player_cell(self) -> Cell:
        """Cell the player currently occupies: last sample's cell, or the
        start cell before any movement was recorded."""
        if self.trajectory:
            return self.trajectory[-1].cell()
        return self.level.start_cell

    # --- operations ----------------------------------------------------------

    def briefing_view(self) -> dict[str, Any]:
        """Pre-run map and target list (pure read, any phase).

        Everything here is public: the map with numbered checkpoints and the
        ordered list of items to acquire, one per checkpoint.
        """
        level = self.level
        return {
            "level_id": level.level_id,
            "name": level.name,
            "width": level.width,
            "height": level.height,
            "terrain": list(level.grid.rows),
            "start": {
                "x": level.start_cell[0],
                "y": level.start_cell[1],
                "facing": level.start_facing,
            },
            "map_visible_during_play": level.map_visible_during_play,
            "checkpoints": [
                {
                    "order": cp.order_index,
                    "chest": {"x": cp.chest_cell[0], "y": cp.chest_cell[1]},
                    "zone": [
                        {"x": x, "y": y}
                        for x, y in sorted(cp.zone_cells, key=lambda c: (c[1], c[0]))
                    ],
                }
                for cp in self._checkpoints
            ],
            "target_items": [
                {"id": cp.target_item, "display_name": level.item_name(cp.target_item)}
                for cp in self._checkpoints
            ],
        }

    def acknowledge_briefing(self) -> None:
        self._guard(Briefing)
        self.phase = Navigating(next_checkpoint=1)
        self._log("briefing_done", {})

    def record_samples(self, samples: list[TrajectorySample]) -> None:
        """Append a batch of trajectory samples. Atomic: the whole batch is
        rejected if any sample is non-monotone, out of bounds, or on a
        blocked cell."""
        self._guard(Navigating, ChestOpen, Crafting, AwaitResult)
        if not samples:
            return
        grid = self.level.grid
        last_t = self.trajectory[-1].t_ms if self.trajectory else -1
        for i, s in enumerate(samples):
            if s.t_ms <= last_t:
                raise RuleViolation(
                    "non_monotonic_sample",
                    f"sample {i} at t_ms={s.t_ms} is not after t_ms={last_t}; batch rejected",
                )
            last_t = s.t_ms
            if not (0 <= s.x < grid.width and 0 <= s.y < grid.height):
                raise RuleViolation(
                    "sample_out_of_bounds",
                    f"sample {i} at ({s.x}, {s.y}) is outside the grid; batch rejected",
                )
            if not grid.is_walkable(s.cell()):
                raise RuleViolation(
                    "sample_on_blocked_cell",
                    f"sample {i} at ({s.x}, {s.y}) lies on a blocked cell; batch rejected",
                )
        self.trajectory.extend(samples)

    def open_chest(self, checkpoint_order: int) -> dict[str, Any]:
        """Open the chest at the expected checkpoint; returns the chest view."""
        self._guard(Navigating)
        assert isinstance(self.phase, Navigating)
        expected = self.phase.next_checkpoint
        if checkpoint_order != expected:
            self._log(
                "out_of_order_attempt",
                {"requested": checkpoint_order, "expected": expected},
            )
            raise RuleViolation(
                "order_error",
                f"checkpoint {checkpoint_order} requested, but checkpoint {expected} is next",
            )
        cp = self._checkpoints[expected - 1]
        here = self.player_cell()
        if chebyshev(here, cp.chest_cell) > 1:
            raise RuleViolation(
                "proximity_error",
                f"player at {here} is too far from chest {cp.chest_cell} to interact",
            )
        self.phase = ChestOpen(checkpoint=expected, taken=None)
        self._log("chest_opened", {"checkpoint": expected})
        return self.chest_view()

    def chest_view(self) -> dict[str, Any]:
        self._guard(ChestOpen)
        assert isinstance(self.phase, ChestOpen)
        cp = self._checkpoints[self.phase.checkpoint - 1]
        return {
            "checkpoint": self.phase.checkpoint,
            "slots": list(cp.chest_contents),
            "taken": self.phase.taken,
        }

    def select_item(self, item: str) -> None:
        """Take an item out of the open chest (swapping any previous pick)."""
        self._guard(ChestOpen)
        assert isinstance(self.phase, ChestOpen)
        cp = self._checkpoints[self.phase.checkpoint - 1]
        if item not in cp.chest_contents:
            raise RuleViolation(
                "unknown_item", f"item {item!r} is not in checkpoint {cp.order_index}'s chest"
            )
        self.phase = ChestOpen(checkpoint=self.phase.checkpoint, taken=item)
        self._log("item_selected", {"checkpoint": cp.order_index, "item": item})

    def close_chest(self) -> None:
        """Lock in the taken item and move on (or to crafting after the last
        checkpoint). Exactly one item must have been taken."""
        self._guard(ChestOpen)
        assert isinstance(self.phase, ChestOpen)
        k, taken = self.phase.checkpoint, self.phase.taken
        if taken is None:
            raise RuleViolation(
                "must_take_one", "exactly one item must be taken before closing the chest"
            )
        self.inventory.append(taken)
        self._log("chest_closed", {"checkpoint": k, "item": taken})
        if k < self.checkpoint_count:
            self.phase = Navigating(next_checkpoint=k + 1)
        else:
            self.phase = Crafting(cells=(None,) * CRAFT_CELLS)

    def available_inventory(self) -> list[str]:
        """Inventory items not currently sitting in the craft grid."""
        if isinstance(self.phase, Crafting):
            counts = Counter(c for c in self.phase.cells if c is not None)
            out = []
            for item in self.inventory:
                if counts.get(item, 0) > 0:
                    counts[item] -= 1
                else:
                    out.append(item)
            return out
        return list(self.inventory)

    def place_in_craft(self, item: str, cell: int) -> None:
        """Move an inventory item into a craft cell. Placing the last
        acquired item triggers the craft preview and advances the phase."""
        self._guard(Crafting)
        assert isinstance(self.phase, Crafting)
        if not 0 <= cell < CRAFT_CELLS:
            raise RuleViolation("bad_cell", f"craft cell {cell} is not in 0..{CRAFT_CELLS - 1}")
        if self.phase.cells[cell] is not None:
            raise RuleViolation("cell_occupied", f"craft cell {cell} is already occupied")
        if item not in self.available_inventory():
            raise RuleViolation("item_not_in_inventory", f"item {item!r} is not in the inventory")
        cells = list(self.phase.cells)
        cells[cell] = item
        self.phase = Crafting(cells=tuple(cells))
        self._log("craft_placed", {"item": item, "cell": cell})
        placed = [c for c in cells if c is not None]
        if len(placed) == len(self.inventory):
            targets = [cp.target_item for cp in self._checkpoints]
            success = Counter(placed) == Counter(targets)
            result = self.level.success_item if success else self.level.failure_item
            self.phase = AwaitResult(result_item=result)
            self._log("craft_ready", {"result_item": result})

    def remove_from_craft(self, cell: int) -> None:
        self._guard(Crafting)
        assert isinstance(self.phase, Crafting)
        if not 0 <= cell < CRAFT_CELLS:
            raise RuleViolation("bad_cell", f"craft cell {cell} is not in 0..{CRAFT_CELLS - 1}")
        item = self.phase.cells[cell]
        if item is None:
            raise RuleViolation("cell_empty", f"craft cell {cell} is empty")
        cells = list(self.phase.cells)
        cells[cell] = None
        self.phase = Crafting(cells=tuple(cells))
        self._log("craft_removed", {"item": item, "cell": cell})

    def take_result(self) -> None:
        """Move the crafted item to the inventory; the session then freezes."""
        self._guard(AwaitResult)
        assert isinstance(self.phase, AwaitResult)
        result = self.phase.result_item
        success = result == self.level.success_item
        self.inventory.append(result)
        self._log("result_taken", {"result_item": result, "craft_success": success})
        self.phase = Complete(craft_success=success)

    # --- serialization -------------------------------------------------------

    def to_doc(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "session_id": self.session_id,
            "participant_id": self.participant_id,
            "level_id": self.level.level_id,
            "started_at": self.started_at,
            "events": [e.to_doc() for e in self.events],
            "trajectory": [s.to_doc() for s in self.trajectory],
            "final_phase": phase_to_doc(self.phase),
            "inventory": list(self.inventory),
        }

    def to_canonical_json(self) -> str:
        return canonical_json(self.to_doc())


def start_session(
    level: LevelSpec,
    participant_id: str,
    session_id: str,
    started_at: str = DEFAULT_STARTED_AT,
) -> Session:
    """Start a run on a validated level. `started_at` is caller-supplied so
    replays and simulations stay byte-deterministic."""
    violations = validate_level(level)
    if violations:
        first = violations[0]
        raise InvalidLevelError(first.code, first.message)
    return Session(level, participant_id, session_id, started_at)


def phase_to_doc(phase: Phase) -> dict[str, Any]:
    doc: dict[str, Any] = {"kind": phase.kind}
    if isinstance(phase, Navigating):
        doc["next_checkpoint"] = phase.next_checkpoint
    elif isinstance(phase, ChestOpen):
        doc["checkpoint"] = phase.checkpoint
        doc["taken"] = phase.taken
    elif isinstance(phase, Crafting):
        doc["cells"] = list(phase.cells)
    elif isinstance(phase, AwaitResult):
        doc["result_item"] = phase.result_item
    elif isinstance(phase, Complete):
        doc["craft_success"] = phase.craft_success
    return doc


def phase_from_doc(doc: dict[str, Any]) -> Phase:
    kind = doc.get("kind")
    if kind == "briefing":
        return Briefing()
    if kind == "navigating":
        return Navigating(next_checkpoint=int(doc["next_checkpoint"]))
    if kind == "chest_open":
        return ChestOpen(checkpoint=int(doc["checkpoint"]), taken=doc.get("taken"))
    if kind == "crafting":
        cells = doc["cells"]
        if len(cells) != CRAFT_CELLS:
            raise ValueError(f"crafting phase needs {CRAFT_CELLS} cells, got {len(cells)}")
        return Crafting(cells=tuple(cells))
    if kind == "await_result":
        return AwaitResult(result_item=doc["result_item"])
    if kind == "complete":
        return Complete(craft_success=bool(doc["craft_success"]))
    raise ValueError(f"unknown phase kind {kind!r}")


def session_from_doc(doc: dict[str, Any], level: LevelSpec) -> Session:
    """Rebuild a Session from its canonical document. The level must be the
    one the document names."""
    if doc.get("level_id") != level.level_id:
        raise ValueError(
            f"document is for level {doc.get('level_id')!r}, got level {level.level_id!r}"
        )
    session = Session.__new__(Session)
    session.level = level
    session.participant_id = doc["participant_id"]
    session.session_id = doc["session_id"]
    session.started_at = doc["started_at"]
    session.phase = phase_from_doc(doc["final_phase"])
    session.inventory = list(doc["inventory"])
    session.trajectory = [
        TrajectorySample(t_ms=int(s["t_ms"]), x=float(s["x"]), y=float(s["y"]))
        for s in doc["trajectory"]
    ]
    session.events = [
        Event(t_ms=int(e["t_ms"]), kind=str(e["kind"]), payload=dict(e["payload"]))
        for e in doc["events"]
    ]
    session._checkpoints = sorted(level.checkpoints, key=lambda cp: cp.order_index)
    return session
