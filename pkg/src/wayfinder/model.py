"""Domain types, level file parsing, and level validation.

A level is a 2D grid of unit cells with a start pose, an ordered list of
checkpoints (each a chest embedded in a blocked cell plus a walkable "brick"
zone around it), an item catalog, and the two possible craft outcome items.
All types here are immutable values; they can be shared freely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterator

FORMAT_VERSION = "1.0"

WALKABLE_CHAR = "."
BLOCKED_CHAR = "#"
FACINGS = ("N", "E", "S", "W")

CHEST_CAPACITY = 27  # 3 rows x 9 slots
INVENTORY_CAPACITY = 36  # 4 rows x 9 slots
MAX_CHECKPOINTS = 9  # craft area is 3x3, one acquired item per cell
CRAFT_CELLS = 9

Cell = tuple[int, int]  # (x, y): x = column left->right, y = row top->bottom


class CellKind(Enum):
    WALKABLE = "walkable"
    BLOCKED = "blocked"


class LevelLoadError(Exception):
    """Base for level document loading failures."""


class LevelParseError(LevelLoadError):
    """Malformed document (not valid JSON)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class LevelSchemaError(LevelLoadError):
    """Structurally valid JSON that does not match the level schema."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"field '{field}': {message}")


def canonical_json(doc: Any) -> str:
    """Render a document in the canonical form used for byte-identity checks."""
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


@dataclass(frozen=True)
class Grid:
    """Rectangular terrain, one character per cell ('.' walkable, '#' blocked)."""

    rows: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("grid has no rows")
        width = len(self.rows[0])
        for y, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {y} has length {len(row)}, expected {width}")
            bad = set(row) - {WALKABLE_CHAR, BLOCKED_CHAR}
            if bad:
                raise ValueError(f"row {y} contains invalid characters {sorted(bad)!r}")

    @property
    def width(self) -> int:
        return len(self.rows[0])

    @property
    def height(self) -> int:
        return len(self.rows)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_walkable(self, cell: Cell) -> bool:
        x, y = cell
        return self.in_bounds(cell) and self.rows[y][x] == WALKABLE_CHAR

    def kind(self, cell: Cell) -> CellKind:
        if not self.in_bounds(cell):
            raise ValueError(f"cell {cell} out of bounds")
        x, y = cell
        return CellKind.WALKABLE if self.rows[y][x] == WALKABLE_CHAR else CellKind.BLOCKED

    def walkable_cells(self) -> Iterator[Cell]:
        for y, row in enumerate(self.rows):
            for x, ch in enumerate(row):
                if ch == WALKABLE_CHAR:
                    yield (x, y)


@dataclass(frozen=True)
class Item:
    """Catalog entry: a short id token plus a human display name."""

    id: str
    display_name: str


@dataclass(frozen=True)
class Checkpoint:
    order_index: int
    zone_cells: frozenset[Cell]
    chest_cell: Cell
    chest_contents: tuple[str, ...]
    target_item: str


@dataclass(frozen=True)
class LevelSpec:
    level_id: str
    name: str
    difficulty_rank: int
    grid: Grid
    start_cell: Cell
    start_facing: str
    checkpoints: tuple[Checkpoint, ...]
    items: tuple[Item, ...]
    success_item: str
    failure_item: str
    map_visible_during_play: bool = False

    @property
    def width(self) -> int:
        return self.grid.width

    @property
    def height(self) -> int:
        return self.grid.height

    def item_name(self, item_id: str) -> str:
        for item in self.items:
            if item.id == item_id:
                return item.display_name
        return item_id

    def target_items(self) -> tuple[str, ...]:
        """Target item ids in checkpoint order (the public briefing list)."""
        return tuple(cp.target_item for cp in self.checkpoints)


@dataclass(frozen=True)
class TrajectorySample:
    """One timestamped position, in cell units, relative to session start."""

    t_ms: int
    x: float
    y: float

    def cell(self) -> Cell:
        return (int(self.x // 1), int(self.y // 1))

    def to_doc(self) -> dict[str, Any]:
        return {"t_ms": self.t_ms, "x": self.x, "y": self.y}


@dataclass(frozen=True)
class Violation:
    """One violated level invariant: machine-readable code plus human message."""

    code: str
    message: str


# ---------------------------------------------------------------------------
# Level document parsing / serialization
#
# File format: one UTF-8 JSON document per level. Top-level keys are exactly:
# level_id, name, difficulty_rank, width, height, terrain, start, checkpoints,
# items, success_item, failure_item, map_visible_during_play.
# ---------------------------------------------------------------------------

_LEVEL_KEYS = {
    "level_id",
    "name",
    "difficulty_rank",
    "width",
    "height",
    "terrain",
    "start",
    "checkpoints",
    "items",
    "success_item",
    "failure_item",
    "map_visible_during_play",
}


def _require(doc: dict, key: str, kind: type, field: str) -> Any:
    if key not in doc:
        raise LevelSchemaError(field, "missing")
    value = doc[key]
    if kind is int and isinstance(value, bool):
        raise LevelSchemaError(field, f"expected {kind.__name__}, got bool")
    if not isinstance(value, kind):
        raise LevelSchemaError(field, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_cell(doc: Any, field: str) -> Cell:
    if not isinstance(doc, dict):
        raise LevelSchemaError(field, f"expected object with x/y, got {type(doc).__name__}")
    x = _require(doc, "x", int, f"{field}.x")
    y = _require(doc, "y", int, f"{field}.y")
    return (x, y)


def _parse_checkpoint(doc: Any, field: str) -> Checkpoint:
    if not isinstance(doc, dict):
        raise LevelSchemaError(field, f"expected object, got {type(doc).__name__}")
    order = _require(doc, "order", int, f"{field}.order")
    zone_doc = _require(doc, "zone", list, f"{field}.zone")
    zone = frozenset(_parse_cell(c, f"{field}.zone[{i}]") for i, c in enumerate(zone_doc))
    chest = _parse_cell(_require(doc, "chest", dict, f"{field}.chest"), f"{field}.chest")
    contents_doc = _require(doc, "contents", list, f"{field}.contents")
    contents = []
    for i, item in enumerate(contents_doc):
        if not isinstance(item, str):
            raise LevelSchemaError(f"{field}.contents[{i}]", "expected string item id")
        contents.append(item)
    target = _require(doc, "target", str, f"{field}.target")
    return Checkpoint(
        order_index=order,
        zone_cells=zone,
        chest_cell=chest,
        chest_contents=tuple(contents),
        target_item=target,
    )


def level_from_doc(doc: Any) -> LevelSpec:
    """Build a LevelSpec from a decoded JSON document. Schema checks only —
    semantic invariants are the job of validate_level."""
    if not isinstance(doc, dict):
        raise LevelSchemaError("<root>", f"expected object, got {type(doc).__name__}")
    unknown = set(doc) - _LEVEL_KEYS
    if unknown:
        raise LevelSchemaError(sorted(unknown)[0], "unknown field")

    level_id = _require(doc, "level_id", str, "level_id")
    name = _require(doc, "name", str, "name")
    rank = _require(doc, "difficulty_rank", int, "difficulty_rank")
    width = _require(doc, "width", int, "width")
    height = _require(doc, "height", int, "height")

    terrain = _require(doc, "terrain", list, "terrain")
    if len(terrain) != height:
        raise LevelSchemaError("terrain", f"expected {height} rows, got {len(terrain)}")
    for y, row in enumerate(terrain):
        if not isinstance(row, str):
            raise LevelSchemaError(f"terrain[{y}]", "expected string")
        if len(row) != width:
            raise LevelSchemaError(f"terrain[{y}]", f"expected length {width}, got {len(row)}")
    try:
        grid = Grid(tuple(terrain))
    except ValueError as exc:
        raise LevelSchemaError("terrain", str(exc)) from exc

    start_doc = _require(doc, "start", dict, "start")
    start_cell = _parse_cell(start_doc, "start")
    facing = _require(start_doc, "facing", str, "start.facing")

    cp_doc = _require(doc, "checkpoints", list, "checkpoints")
    checkpoints = tuple(
        _parse_checkpoint(cp, f"checkpoints[{i}]") for i, cp in enumerate(cp_doc)
    )

    items_doc = _require(doc, "items", list, "items")
    items = []
    for i, item in enumerate(items_doc):
        if not isinstance(item, dict):
            raise LevelSchemaError(f"items[{i}]", "expected object")
        items.append(
            Item(
                id=_require(item, "id", str, f"items[{i}].id"),
                display_name=_require(item, "display_name", str, f"items[{i}].display_name"),
            )
        )

    return LevelSpec(
        level_id=level_id,
        name=name,
        difficulty_rank=rank,
        grid=grid,
        start_cell=start_cell,
        start_facing=facing,
        checkpoints=checkpoints,
        items=tuple(items),
        success_item=_require(doc, "success_item", str, "success_item"),
        failure_item=_require(doc, "failure_item", str, "failure_item"),
        map_visible_during_play=_require(
            doc, "map_visible_during_play", bool, "map_visible_during_play"
        ),
    )


def parse_level(text: str | bytes) -> LevelSpec:
    """Parse a level document. Raises LevelParseError for malformed JSON,
    LevelSchemaError for missing or mistyped fields."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LevelParseError(f"not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LevelParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return level_from_doc(doc)


def level_to_doc(spec: LevelSpec) -> dict[str, Any]:
    return {
        "level_id": spec.level_id,
        "name": spec.name,
        "difficulty_rank": spec.difficulty_rank,
        "width": spec.width,
        "height": spec.height,
        "terrain": list(spec.grid.rows),
        "start": {"x": spec.start_cell[0], "y": spec.start_cell[1], "facing": spec.start_facing},
        "checkpoints": [
            {
                "order": cp.order_index,
                "zone": [{"x": x, "y": y} for x, y in sorted(cp.zone_cells, key=lambda c: (c[1], c[0]))],
                "chest": {"x": cp.chest_cell[0], "y": cp.chest_cell[1]},
                "contents": list(cp.chest_contents),
                "target": cp.target_item,
            }
            for cp in sorted(spec.checkpoints, key=lambda cp: cp.order_index)
        ],
        "items": [
            {"id": item.id, "display_name": item.display_name}
            for item in sorted(spec.items, key=lambda it: it.id)
        ],
        "success_item": spec.success_item,
        "failure_item": spec.failure_item,
        "map_visible_during_play": spec.map_visible_during_play,
    }


def serialize_level(spec: LevelSpec) -> str:
    """Canonical serialization; serialize(parse(s)) == s for canonical files."""
    return canonical_json(level_to_doc(spec))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_level(spec: LevelSpec) -> list[Violation]:
    """Check every level invariant. Returns all violations found; an empty
    list means the level is valid. Pure: same spec, same report."""
    v: list[Violation] = []
    grid = spec.grid

    if grid.width < 3 or grid.height < 3:
        v.append(Violation("bad_dimensions", f"grid is {grid.width}x{grid.height}, minimum 3x3"))
    if not 1 <= spec.difficulty_rank <= 5:
        v.append(Violation("bad_difficulty_rank", f"difficulty_rank {spec.difficulty_rank} not in 1..5"))
    if spec.start_facing not in FACINGS:
        v.append(Violation("bad_facing", f"start_facing {spec.start_facing!r} not one of {FACINGS}"))

    start_ok = True
    if not grid.in_bounds(spec.start_cell):
        v.append(Violation("start_out_of_bounds", f"start {spec.start_cell} outside grid"))
        start_ok = False
    elif not grid.is_walkable(spec.start_cell):
        v.append(Violation("start_blocked", f"start {spec.start_cell} is not walkable"))
        start_ok = False

    n = len(spec.checkpoints)
    if n == 0:
        v.append(Violation("no_checkpoints", "level has no checkpoints"))
    if n > MAX_CHECKPOINTS:
        v.append(
            Violation(
                "too_many_checkpoints",
                f"{n} checkpoints exceed the {MAX_CHECKPOINTS}-cell craft area",
            )
        )
    orders = sorted(cp.order_index for cp in spec.checkpoints)
    if orders != list(range(1, n + 1)):
        v.append(Violation("bad_checkpoint_order", f"order indices {orders} are not exactly 1..{n}"))

    catalog = [item.id for item in spec.items]
    seen: set[str] = set()
    for item_id in catalog:
        if item_id in seen:
            v.append(Violation("duplicate_item_id", f"item id {item_id!r} appears twice in catalog"))
        seen.add(item_id)
    known = set(catalog)

    def check_ref(item_id: str, where: str) -> None:
        if item_id not in known:
            v.append(Violation("unknown_item_ref", f"{where} references unknown item {item_id!r}"))

    geometry_ok = start_ok
    for cp in sorted(spec.checkpoints, key=lambda c: c.order_index):
        label = f"checkpoint {cp.order_index}"
        if not cp.zone_cells:
            v.append(Violation("zone_empty", f"{label} has no zone cells"))
        for cell in sorted(cp.zone_cells, key=lambda c: (c[1], c[0])):
            if not grid.in_bounds(cell):
                v.append(Violation("zone_out_of_bounds", f"{label} zone cell {cell} outside grid"))
            elif not grid.is_walkable(cell):
                v.append(Violation("zone_blocked", f"{label} zone cell {cell} is not walkable"))
        if not grid.in_bounds(cp.chest_cell):
            v.append(Violation("chest_out_of_bounds", f"{label} chest {cp.chest_cell} outside grid"))
            geometry_ok = False
            continue
        if grid.is_walkable(cp.chest_cell):
            v.append(Violation("chest_not_blocked", f"{label} chest cell {cp.chest_cell} must be blocked"))
        reachable = [
            c
            for c in _chebyshev_neighbors(cp.chest_cell)
            if grid.is_walkable(c)
        ]
        if not reachable:
            v.append(
                Violation(
                    "chest_unreachable",
                    f"{label} chest {cp.chest_cell} has no adjacent walkable cell",
                )
            )
            geometry_ok = False
        if not cp.chest_contents:
            v.append(Violation("chest_empty", f"{label} chest has no contents"))
        if len(cp.chest_contents) > CHEST_CAPACITY:
            v.append(
                Violation(
                    "chest_overfull",
                    f"{label} chest holds {len(cp.chest_contents)} items, capacity {CHEST_CAPACITY}",
                )
            )
        if cp.target_item not in cp.chest_contents:
            v.append(
                Violation(
                    "target_not_in_chest",
                    f"{label} target {cp.target_item!r} is not among its chest contents",
                )
            )
        for item_id in cp.chest_contents:
            check_ref(item_id, f"{label} chest contents")
        check_ref(cp.target_item, f"{label} target")

    check_ref(spec.success_item, "success_item")
    check_ref(spec.failure_item, "failure_item")
    if spec.success_item == spec.failure_item:
        v.append(
            Violation(
                "same_success_failure",
                f"success and failure items are both {spec.success_item!r}",
            )
        )

    # Course reachability needs sane geometry and exact 1..N ordering first.
    if geometry_ok and n >= 1 and orders == list(range(1, n + 1)):
        from . import pathfind  # deferred: pathfind imports this module's types

        try:
            length = pathfind.optimal_course_length(spec)
        except pathfind.UnreachableCourseError as exc:
            v.append(
                Violation(
                    "unreachable_waypoint",
                    f"checkpoint {exc.checkpoint_order} cannot be reached from the previous waypoint",
                )
            )
        else:
            if length == 0:
                v.append(
                    Violation(
                        "zero_length_course",
                        "optimal course length is 0; normalized distance would be undefined",
                    )
                )

    return v


def _chebyshev_neighbors(cell: Cell) -> Iterator[Cell]:
    x, y = cell
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx or dy:
                yield (x + dx, y + dy)
