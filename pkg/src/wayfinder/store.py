"""File-backed persistence.

Layout under one root directory: `levels/` (one JSON per level), `sessions/`
(`<session_id>.json`), `reports/` (metrics JSON, pairs CSV, correlation
JSON, trajectory overlays). Session writes go through a temp file, fsync,
and an atomic rename, so a crash mid-save never leaves a truncated file that
parses as a valid session.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

from .engine import Session, session_from_doc
from .model import FORMAT_VERSION, LevelSpec, canonical_json, level_from_doc, serialize_level

CELL_PX = 16

_PATH_COLORS = ("#d7263d", "#1b6ca8", "#18a558", "#b04bc7", "#e08007", "#00879e")


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    pass


class CorruptDocumentError(StoreError):
    pass


def atomic_write_text(path: Path, data: str) -> None:
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _check_format_version(doc: dict, path: Path) -> None:
    version = doc.get("format_version")
    if not isinstance(version, str) or not version:
        raise CorruptDocumentError(f"{path}: missing format_version")
    major = version.split(".")[0]
    if major != FORMAT_VERSION.split(".")[0]:
        raise CorruptDocumentError(f"{path}: unsupported format_version {version!r}")


class Store:
    """Plain-file store. One writer per file; distinct files are independent."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.levels_dir = self.root / "levels"
        self.sessions_dir = self.root / "sessions"
        self.reports_dir = self.root / "reports"
        for d in (self.levels_dir, self.sessions_dir, self.reports_dir):
            d.mkdir(parents=True, exist_ok=True)

    # --- levels --------------------------------------------------------------

    def save_level(self, spec: LevelSpec) -> Path:
        path = self.levels_dir / f"{spec.level_id}.json"
        atomic_write_text(path, serialize_level(spec))
        return path

    def load_level(self, level_id: str) -> LevelSpec:
        path = self.levels_dir / f"{level_id}.json"
        if not path.exists():
            raise NotFoundError(f"no level {level_id!r} under {self.levels_dir}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            return level_from_doc(doc)
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptDocumentError(f"{path}: {exc}") from exc

    def list_levels(self) -> list[LevelSpec]:
        levels = []
        for path in sorted(self.levels_dir.glob("*.json")):
            try:
                levels.append(level_from_doc(json.loads(path.read_text(encoding="utf-8"))))
            except (ValueError, KeyError, TypeError) as exc:
                raise CorruptDocumentError(f"{path}: {exc}") from exc
        levels.sort(key=lambda lv: (lv.difficulty_rank, lv.level_id))
        return levels

    # --- sessions ------------------------------------------------------------

    def session_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.json"

    def save_session(self, session: Session) -> Path:
        path = self.session_path(session.session_id)
        atomic_write_text(path, session.to_canonical_json())
        return path

    def load_session_doc(self, session_id: str) -> dict:
        path = self.session_path(session_id)
        if not path.exists():
            raise NotFoundError(f"no session {session_id!r} under {self.sessions_dir}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise CorruptDocumentError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise CorruptDocumentError(f"{path}: expected a JSON object")
        _check_format_version(doc, path)
        return doc

    def load_session(self, session_id: str, level: LevelSpec | None = None) -> Session:
        doc = self.load_session_doc(session_id)
        if level is None:
            level = self.load_level(doc["level_id"])
        try:
            return session_from_doc(doc, level)
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptDocumentError(f"{self.session_path(session_id)}: {exc}") from exc

    def list_session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.sessions_dir.glob("*.json"))

    # --- reports -------------------------------------------------------------

    def save_report(self, name: str, doc: dict) -> Path:
        path = self.reports_dir / f"{name}.json"
        atomic_write_text(path, canonical_json(doc))
        return path

    def save_report_text(self, filename: str, text: str) -> Path:
        path = self.reports_dir / filename
        atomic_write_text(path, text)
        return path

    def export_trajectories(
        self, session_ids: list[str], level: LevelSpec, out_svg: Path, out_csv: Path | None = None
    ) -> Path:
        sessions = [self.load_session(sid, level) for sid in session_ids]
        svg = trajectories_svg(level, sessions)
        atomic_write_text(out_svg, svg)
        if out_csv is not None:
            atomic_write_text(out_csv, trajectories_csv(level, sessions))
        return out_svg


def _check_levels_match(level: LevelSpec, sessions: list[Session]) -> None:
    for s in sessions:
        if s.level.level_id != level.level_id:
            raise StoreError(
                f"level_mismatch: session {s.session_id} is on level "
                f"{s.level.level_id!r}, overlay is for {level.level_id!r}"
            )


def trajectories_csv(level: LevelSpec, sessions: list[Session]) -> str:
    _check_levels_match(level, sessions)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["session_id", "t_ms", "x", "y"])
    for s in sessions:
        for sample in s.trajectory:
            writer.writerow([s.session_id, sample.t_ms, repr(sample.x), repr(sample.y)])
    return buf.getvalue()


def trajectories_svg(level: LevelSpec, sessions: list[Session]) -> str:
    """Top-down overlay: terrain, chests, start marker, one polyline per
    session. Sample coordinates map to pixels at CELL_PX per cell."""
    _check_levels_match(level, sessions)
    grid = level.grid
    w, h = grid.width * CELL_PX, grid.height * CELL_PX
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="#f4efe6"/>',
    ]
    for y in range(grid.height):
        for x in range(grid.width):
            if not grid.is_walkable((x, y)):
                parts.append(
                    f'<rect x="{x * CELL_PX}" y="{y * CELL_PX}" '
                    f'width="{CELL_PX}" height="{CELL_PX}" fill="#4a4238"/>'
                )
    for cp in sorted(level.checkpoints, key=lambda c: c.order_index):
        cx, cy = cp.chest_cell
        parts.append(
            f'<rect x="{cx * CELL_PX + 2}" y="{cy * CELL_PX + 2}" '
            f'width="{CELL_PX - 4}" height="{CELL_PX - 4}" fill="#c9a227"/>'
        )
        parts.append(
            f'<text x="{cx * CELL_PX + CELL_PX / 2:g}" y="{cy * CELL_PX + CELL_PX - 4}" '
            f'font-size="{CELL_PX - 6}" text-anchor="middle" fill="#201a12">'
            f"{cp.order_index}</text>"
        )
    sx, sy = level.start_cell
    parts.append(
        f'<circle cx="{(sx + 0.5) * CELL_PX:g}" cy="{(sy + 0.5) * CELL_PX:g}" '
        f'r="{CELL_PX / 3:g}" fill="#2d7d46"/>'
    )
    for i, s in enumerate(sessions):
        if not s.trajectory:
            continue
        color = _PATH_COLORS[i % len(_PATH_COLORS)]
        points = " ".join(
            f"{sample.x * CELL_PX:g},{sample.y * CELL_PX:g}" for sample in s.trajectory
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="2" stroke-opacity="0.75" data-session="{s.session_id}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
