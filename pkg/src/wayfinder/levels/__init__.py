"""Bundled playable levels, shipped as package data.

Five levels with strictly increasing difficulty: one more checkpoint each
and a longer optimal course. Loaded lazily from the JSON files next to this
module.
"""

from __future__ import annotations

import json
from importlib import resources

from ..model import LevelSpec, level_from_doc

BUILTIN_LEVEL_IDS = ("level1", "level2", "level3", "level4", "level5")


def builtin_level(level_id: str) -> LevelSpec:
    if level_id not in BUILTIN_LEVEL_IDS:
        raise KeyError(f"no bundled level {level_id!r}")
    text = resources.files(__package__).joinpath(f"{level_id}.json").read_text("utf-8")
    return level_from_doc(json.loads(text))


def builtin_levels() -> list[LevelSpec]:
    """All bundled levels, sorted by difficulty rank."""
    levels = [builtin_level(level_id) for level_id in BUILTIN_LEVEL_IDS]
    levels.sort(key=lambda lv: lv.difficulty_rank)
    return levels
