"""Distance metrics, pairing, and correlation.

Per-session: traveled path length from the sampled trajectory, normalized
against the level's optimal course length. Cross-game: inner-join paired
observations on (participant, level rank) and compute Pearson's r with a
magnitude band. Degenerate inputs (too few pairs, zero variance) raise
rather than faking an r of 0.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable

from . import pathfind
from .engine import Complete, Session
from .model import TrajectorySample

PAIRS_CSV_HEADER = ("participant_id", "level_rank", "normalized_distance")

# Magnitude bands for interpreting |r|, encoded once. Thresholds are
# inclusive at the lower edge.
R_BANDS = (
    (0.90, "very_high"),
    (0.68, "high"),
    (0.36, "moderate"),
    (0.0, "low"),
)


class MetricsError(ValueError):
    pass


class InsufficientDataError(MetricsError):
    pass


class DegenerateDataError(MetricsError):
    pass


class IncompleteSessionError(MetricsError):
    pass


class AmbiguityError(MetricsError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    session_id: str
    participant_id: str
    level_id: str
    traveled_distance: float
    optimal_distance: float
    normalized_distance: float
    duration_ms: int
    per_checkpoint_arrival_ms: tuple[int, ...]
    items_correct: tuple[bool, ...]
    craft_success: bool

    def to_doc(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "participant_id": self.participant_id,
            "level_id": self.level_id,
            "traveled_distance": self.traveled_distance,
            "optimal_distance": self.optimal_distance,
            "normalized_distance": self.normalized_distance,
            "duration_ms": self.duration_ms,
            "per_checkpoint_arrival_ms": list(self.per_checkpoint_arrival_ms),
            "items_correct": list(self.items_correct),
            "craft_success": self.craft_success,
        }


@dataclass(frozen=True)
class MetricRow:
    """One (participant, level) observation on one side of the join."""

    participant_id: str
    level_rank: int
    value: float


@dataclass(frozen=True)
class PairedObservation:
    participant_id: str
    level_rank: int
    value_a: float
    value_b: float


@dataclass(frozen=True)
class JoinResult:
    pairs: tuple[PairedObservation, ...]
    unmatched_a: tuple[MetricRow, ...]
    unmatched_b: tuple[MetricRow, ...]


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int
    band: str

    def to_doc(self) -> dict[str, Any]:
        return {"r": self.r, "n": self.n, "band": self.band}


def traveled_distance(trajectory: list[TrajectorySample]) -> float:
    """Sum of Euclidean distances between consecutive samples, cell units."""
    if not trajectory:
        raise MetricsError("traveled_distance needs at least one sample")
    return math.fsum(
        math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(trajectory, trajectory[1:])
    )


def normalized_distance(traveled: float, optimal: float) -> float:
    if optimal <= 0:
        raise MetricsError(f"optimal distance must be positive, got {optimal}")
    return traveled / optimal


def session_metrics(session: Session) -> MetricsReport:
    """Full report for a completed session. Partial metrics are refused."""
    if not isinstance(session.phase, Complete):
        raise IncompleteSessionError(
            f"session {session.session_id} is in phase {session.phase.kind}, not complete"
        )
    level = session.level
    traveled = traveled_distance(session.trajectory)
    optimal = float(pathfind.optimal_course_length(level))
    checkpoints = sorted(level.checkpoints, key=lambda cp: cp.order_index)
    taken = session.inventory[: len(checkpoints)]
    items_correct = tuple(
        taken[i] == checkpoints[i].target_item for i in range(len(checkpoints))
    )
    arrivals = tuple(e.t_ms for e in session.events if e.kind == "chest_opened")
    return MetricsReport(
        session_id=session.session_id,
        participant_id=session.participant_id,
        level_id=level.level_id,
        traveled_distance=traveled,
        optimal_distance=optimal,
        normalized_distance=normalized_distance(traveled, optimal),
        duration_ms=session.events[-1].t_ms if session.events else 0,
        per_checkpoint_arrival_ms=arrivals,
        items_correct=items_correct,
        craft_success=session.phase.craft_success,
    )


def pearson_r(pairs: list[PairedObservation]) -> CorrelationResult:
    """Product-moment correlation of (value_a, value_b) with magnitude band."""
    n = len(pairs)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 pairs, got {n}")
    xs = [p.value_a for p in pairs]
    ys = [p.value_b for p in pairs]
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = math.fsum((x - mx) ** 2 for x in xs)
    vy = math.fsum((y - my) ** 2 for y in ys)
    if vx == 0.0 or vy == 0.0:
        which = "a" if vx == 0.0 else "b"
        raise DegenerateDataError(f"variable {which} has zero variance over {n} pairs")
    r = cov / math.sqrt(vx * vy)
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(r=r, n=n, band=interpret_r(r))


def interpret_r(r: float) -> str:
    if abs(r) > 1:
        raise MetricsError(f"correlation must lie in [-1, 1], got {r}")
    magnitude = abs(r)
    for threshold, band in R_BANDS:
        if magnitude >= threshold:
            return band
    return "low"


def build_pairs(side_a: Iterable[MetricRow], side_b: Iterable[MetricRow]) -> JoinResult:
    """Inner join on (participant_id, level_rank). Unmatched rows are
    reported, never silently dropped; duplicate keys within one side are an
    error because the pairing would be arbitrary."""
    index_a = _index_side(side_a, "a")
    index_b = _index_side(side_b, "b")
    pairs = []
    for key in sorted(index_a.keys() & index_b.keys()):
        a, b = index_a[key], index_b[key]
        pairs.append(
            PairedObservation(
                participant_id=key[0],
                level_rank=key[1],
                value_a=a.value,
                value_b=b.value,
            )
        )
    unmatched_a = tuple(index_a[k] for k in sorted(index_a.keys() - index_b.keys()))
    unmatched_b = tuple(index_b[k] for k in sorted(index_b.keys() - index_a.keys()))
    return JoinResult(pairs=tuple(pairs), unmatched_a=unmatched_a, unmatched_b=unmatched_b)


def _index_side(rows: Iterable[MetricRow], side: str) -> dict[tuple[str, int], MetricRow]:
    index: dict[tuple[str, int], MetricRow] = {}
    for row in rows:
        key = (row.participant_id, row.level_rank)
        if key in index:
            raise AmbiguityError(
                f"side {side} has duplicate observations for participant "
                f"{key[0]!r} at level rank {key[1]}"
            )
        index[key] = row
    return index


def zscore_per_level(rows: list[MetricRow]) -> list[MetricRow]:
    """Alternative normalization: z-score values within each level rank.

    Useful when raw values are not comparable across levels. Requires at
    least 2 observations and nonzero spread per level.
    """
    by_level: dict[int, list[MetricRow]] = defaultdict(list)
    for row in rows:
        by_level[row.level_rank].append(row)
    out = []
    for rank, group in by_level.items():
        n = len(group)
        if n < 2:
            raise InsufficientDataError(
                f"level rank {rank} has {n} observation(s); z-scoring needs at least 2"
            )
        mean = math.fsum(r.value for r in group) / n
        var = math.fsum((r.value - mean) ** 2 for r in group) / n
        if var == 0.0:
            raise DegenerateDataError(f"level rank {rank} has zero variance")
        sd = math.sqrt(var)
        out.extend(
            MetricRow(r.participant_id, r.level_rank, (r.value - mean) / sd) for r in group
        )
    return sorted(out, key=lambda r: (r.participant_id, r.level_rank))


def aggregate_by_participant(rows: list[MetricRow]) -> list[MetricRow]:
    """Collapse to one mean value per participant (level_rank 0 marks the
    aggregate, since it is no longer tied to a single level)."""
    by_participant: dict[str, list[float]] = defaultdict(list)
    for row in rows:
        by_participant[row.participant_id].append(row.value)
    return [
        MetricRow(pid, 0, math.fsum(values) / len(values))
        for pid, values in sorted(by_participant.items())
    ]


def read_pairs_csv(text: str) -> list[MetricRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MetricsError("pairs CSV is empty") from None
    if tuple(header) != PAIRS_CSV_HEADER:
        raise MetricsError(
            f"pairs CSV header must be {','.join(PAIRS_CSV_HEADER)}, got {','.join(header)}"
        )
    rows = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != 3:
            raise MetricsError(f"line {lineno}: expected 3 fields, got {len(record)}")
        try:
            rows.append(MetricRow(record[0], int(record[1]), float(record[2])))
        except ValueError as exc:
            raise MetricsError(f"line {lineno}: {exc}") from None
    return rows


def write_pairs_csv(rows: Iterable[MetricRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PAIRS_CSV_HEADER)
    for row in sorted(rows, key=lambda r: (r.participant_id, r.level_rank)):
        writer.writerow([row.participant_id, row.level_rank, _format_value(row.value)])
    return buf.getvalue()


def _format_value(value: float) -> str:
    return repr(value) if isinstance(value, float) else str(value)
