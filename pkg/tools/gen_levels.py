#!/usr/bin/env python3
"""Regenerate the bundled level JSON files from ASCII maps.

Map legend: '#' blocked, '.' walkable, 'S' start (walkable), digits 1..9
chest cells (blocked terrain; the digit is the checkpoint order). Zones are
derived as the walkable cells within Chebyshev distance 1 of each chest.

Run from the repo root: python tools/gen_levels.py
Fails loudly if any generated level is invalid or if optimal course lengths
are not strictly increasing across the set.
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from wayfinder.model import level_from_doc, serialize_level, validate_level  # noqa: E402
from wayfinder.pathfind import optimal_course_length  # noqa: E402

ITEMS = {
    "torch": "Torch",
    "compass": "Compass",
    "feather": "Feather",
    "amethyst": "Amethyst Shard",
    "lantern": "Lantern",
    "stone": "Stone",
    "stick": "Stick",
    "apple": "Apple",
    "bone": "Bone",
    "mushroom": "Mushroom",
    "kelp": "Kelp",
    "flint": "Flint",
    "beacon": "Beacon",
    "cinder": "Cinder Pile",
}

SUCCESS_ITEM = "beacon"
FAILURE_ITEM = "cinder"

LEVELS = [
    {
        "level_id": "level1",
        "name": "Clearing",
        "difficulty_rank": 1,
        "map": """
############
#S.........#
#..##......#
#......##..#
#..##......#
#.........1#
############
""",
        "chests": {1: ("torch", ["torch", "stone", "apple"])},
    },
    {
        "level_id": "level2",
        "name": "Crossing",
        "difficulty_rank": 2,
        "map": """
##############
#S...........#
#...###......#
#.........#..#
####......#.1#
#..........#.#
#...##.......#
#2...........#
##############
""",
        "chests": {
            1: ("torch", ["torch", "stick", "bone"]),
            2: ("compass", ["compass", "stone", "mushroom"]),
        },
    },
    {
        "level_id": "level3",
        "name": "Thicket",
        "difficulty_rank": 3,
        "map": """
################
#S.......#.....#
#..###...#..1..#
#........#.....#
#.....#........#
####..#...####.#
#2....#........#
#.....#..##....#
#..............#
#.............3#
################
""",
        "chests": {
            1: ("torch", ["torch", "apple", "kelp"]),
            2: ("compass", ["compass", "stick", "stone"]),
            3: ("feather", ["feather", "bone", "mushroom"]),
        },
    },
    {
        "level_id": "level4",
        "name": "Quarry",
        "difficulty_rank": 4,
        "map": """
##################
#S.......#.......#
#........#...1...#
#..####..#.......#
#................#
#.....####....####
#2....#..........#
#.....#....##....#
####..#....##...3#
#................#
#...##....#......#
#4........#......#
##################
""",
        "chests": {
            1: ("torch", ["torch", "apple", "kelp"]),
            2: ("compass", ["compass", "stick", "stone"]),
            3: ("feather", ["feather", "bone", "mushroom"]),
            4: ("amethyst", ["amethyst", "flint", "stone", "kelp"]),
        },
    },
    {
        "level_id": "level5",
        "name": "Labyrinth",
        "difficulty_rank": 5,
        "map": """
######################
#S...........#.......#
#..####......#...1...#
#......##....#.......#
#....................#
#####..####....###...#
#2...................#
#....##......##......#
#............#......3#
####...####..#.......#
#....................#
#...##.......##......#
#4..........##.......#
#...................5#
######################
""",
        "chests": {
            1: ("torch", ["torch", "apple", "kelp"]),
            2: ("compass", ["compass", "stick", "stone"]),
            3: ("feather", ["feather", "bone", "mushroom"]),
            4: ("amethyst", ["amethyst", "flint", "stone", "kelp"]),
            5: ("lantern", ["lantern", "bone", "flint", "apple"]),
        },
    },
]


def build_doc(entry: dict) -> dict:
    rows = [line for line in entry["map"].strip("\n").split("\n")]
    height = len(rows)
    width = len(rows[0])
    start = None
    chest_cells: dict[int, tuple[int, int]] = {}
    terrain = []
    for y, row in enumerate(rows):
        if len(row) != width:
            raise SystemExit(f"{entry['level_id']}: row {y} has width {len(row)}, want {width}")
        out = []
        for x, ch in enumerate(row):
            if ch == "S":
                start = (x, y)
                out.append(".")
            elif ch.isdigit():
                chest_cells[int(ch)] = (x, y)
                out.append("#")
            elif ch in ".#":
                out.append(ch)
            else:
                raise SystemExit(f"{entry['level_id']}: bad map char {ch!r} at ({x},{y})")
        terrain.append("".join(out))
    if start is None:
        raise SystemExit(f"{entry['level_id']}: no start cell")
    if set(chest_cells) != set(entry["chests"]):
        raise SystemExit(f"{entry['level_id']}: chest digits {sorted(chest_cells)} do not match "
                         f"chest table {sorted(entry['chests'])}")

    def zone(cx: int, cy: int) -> list[dict]:
        cells = []
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                x, y = cx + dx, cy + dy
                if (dx or dy) and 0 <= x < width and 0 <= y < height and terrain[y][x] == ".":
                    cells.append({"x": x, "y": y})
        return sorted(cells, key=lambda c: (c["y"], c["x"]))

    checkpoints = []
    used_items = set()
    for order in sorted(entry["chests"]):
        target, contents = entry["chests"][order]
        cx, cy = chest_cells[order]
        used_items.update(contents)
        checkpoints.append(
            {
                "order": order,
                "zone": zone(cx, cy),
                "chest": {"x": cx, "y": cy},
                "contents": contents,
                "target": target,
            }
        )
    used_items.update([SUCCESS_ITEM, FAILURE_ITEM])
    return {
        "level_id": entry["level_id"],
        "name": entry["name"],
        "difficulty_rank": entry["difficulty_rank"],
        "width": width,
        "height": height,
        "terrain": terrain,
        "start": {"x": start[0], "y": start[1], "facing": "E"},
        "checkpoints": checkpoints,
        "items": [{"id": i, "display_name": ITEMS[i]} for i in sorted(used_items)],
        "success_item": SUCCESS_ITEM,
        "failure_item": FAILURE_ITEM,
        "map_visible_during_play": False,
    }


def main() -> int:
    out_dir = ROOT / "src" / "wayfinder" / "levels"
    lengths = []
    for entry in LEVELS:
        doc = build_doc(entry)
        spec = level_from_doc(doc)
        violations = validate_level(spec)
        if violations:
            for v in violations:
                print(f"{entry['level_id']}: {v.code}: {v.message}", file=sys.stderr)
            return 1
        length = optimal_course_length(spec)
        lengths.append(length)
        path = out_dir / f"{spec.level_id}.json"
        path.write_text(serialize_level(spec), encoding="utf-8")
        print(f"{spec.level_id}: {spec.width}x{spec.height}, "
              f"{len(spec.checkpoints)} checkpoint(s), optimal length {length} -> {path}")
    if lengths != sorted(set(lengths)):
        print(f"optimal lengths not strictly increasing: {lengths}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
