"""Simulated players.

Agents drive sessions purely through the public engine operations, so every
agent run doubles as an integration test of the rules. The optimal agent
walks the DP-optimal course cell by cell and its normalized distance is 1.0
by construction; the noisy agent injects random legal sidesteps at a
configurable rate and re-plans after each one.

The synthetic cohort stands in for a human study: each participant carries a
latent ability factor that drives detour intensity in this game, and the
counterpart game's score is derived from the same realized performance with
independent jitter, yielding paired datasets with a tunable correlation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any

from . import pathfind
from .engine import DEFAULT_STARTED_AT, Session, start_session
from .metrics import MetricRow, session_metrics
from .model import Cell, LevelSpec, TrajectorySample

SAMPLE_INTERVAL_MS = 250

# Keeps the per-step sidestep probability away from 1 even for extreme
# ability factors, so noisy walks always make progress.
MAX_DETOUR_RATE = 0.95


@dataclass(frozen=True)
class AgentProfile:
    kind: str
    detour_rate: float = 0.0
    wrong_item_rate: float = 0.0
    ability_factor: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("optimal", "noisy"):
            raise ValueError(f"agent kind must be optimal or noisy, got {self.kind!r}")
        if self.kind == "optimal" and (self.detour_rate or self.wrong_item_rate):
            raise ValueError("optimal agents must have detour_rate = wrong_item_rate = 0")
        if not 0 <= self.detour_rate < 1:
            raise ValueError(f"detour_rate must be in [0, 1), got {self.detour_rate}")
        if not 0 <= self.wrong_item_rate < 1:
            raise ValueError(f"wrong_item_rate must be in [0, 1), got {self.wrong_item_rate}")
        if self.ability_factor <= 0:
            raise ValueError(f"ability_factor must be positive, got {self.ability_factor}")


class _Walker:
    """Shared sample-emission plumbing for both agent kinds."""

    def __init__(self, session: Session):
        self.session = session
        self.tick = 0

    def emit(self, cells: list[Cell]) -> None:
        if not cells:
            return
        samples = []
        for x, y in cells:
            samples.append(TrajectorySample(t_ms=self.tick * SAMPLE_INTERVAL_MS, x=x + 0.5, y=y + 0.5))
            self.tick += 1
        self.session.record_samples(samples)


def run_agent(
    level: LevelSpec,
    profile: AgentProfile,
    participant_id: str = "agent",
    session_id: str | None = None,
    started_at: str = DEFAULT_STARTED_AT,
) -> Session:
    """Play one full session and return it in the Complete phase."""
    if session_id is None:
        session_id = f"{profile.kind}-{profile.seed}-{level.level_id}"
    session = start_session(level, participant_id, session_id, started_at)
    session.acknowledge_briefing()
    if profile.kind == "optimal":
        _play_optimal(session)
    else:
        _play_noisy(session, profile)
    _craft_everything(session)
    return session


def _play_optimal(session: Session) -> None:
    level = session.level
    course = pathfind.optimal_course(level)
    walker = _Walker(session)
    checkpoints = sorted(level.checkpoints, key=lambda cp: cp.order_index)
    for i, leg in enumerate(course.legs):
        cells = list(leg) if i == 0 else list(leg[1:])
        walker.emit(cells)
        session.open_chest(i + 1)
        session.select_item(checkpoints[i].target_item)
        session.close_chest()


def _play_noisy(session: Session, profile: AgentProfile) -> None:
    level = session.level
    grid = level.grid
    rng = random.Random(profile.seed)
    walker = _Walker(session)
    walker.emit([level.start_cell])
    current = level.start_cell
    checkpoints = sorted(level.checkpoints, key=lambda cp: cp.order_index)
    for i, cp in enumerate(checkpoints):
        goal_cells = pathfind.interaction_cells(grid, cp.chest_cell)
        while current not in goal_cells:
            step = None
            if rng.random() < profile.detour_rate:
                neighbours = [
                    (current[0] + dx, current[1] + dy)
                    for dx, dy in pathfind.STEPS
                    if grid.is_walkable((current[0] + dx, current[1] + dy))
                ]
                if neighbours:
                    step = rng.choice(neighbours)
            if step is None:
                found = pathfind.shortest_path(grid, current, goal_cells)
                assert found is not None, "validated levels have reachable chests"
                step = found[1][1]
            current = step
            walker.emit([current])
        session.open_chest(i + 1)
        choice = cp.target_item
        if rng.random() < profile.wrong_item_rate:
            decoys = [slot for slot in cp.chest_contents if slot != cp.target_item]
            if decoys:
                choice = rng.choice(decoys)
        session.select_item(choice)
        session.close_chest()


def _craft_everything(session: Session) -> None:
    """Place every held item in reading order; the final placement triggers
    the result preview, after which the result is taken."""
    for cell, item in enumerate(list(session.inventory)):
        session.place_in_craft(item, cell)
    session.take_result()


@dataclass(frozen=True)
class ParticipantMeta:
    participant_id: str
    ability_factor: float
    group: int
    play_order: str

    def to_doc(self) -> dict[str, Any]:
        return {
            "participant_id": self.participant_id,
            "ability_factor": self.ability_factor,
            "group": self.group,
            "play_order": self.play_order,
        }


@dataclass(frozen=True)
class CohortResult:
    rows_a: tuple[MetricRow, ...]
    rows_b: tuple[MetricRow, ...]
    participants: tuple[ParticipantMeta, ...]
    sessions: tuple[Session, ...]


def generate_cohort(
    levels: list[LevelSpec],
    n_participants: int,
    template: AgentProfile,
    seed: int = 0,
    jitter: float = 0.0,
) -> CohortResult:
    """Run every participant through every level and emit paired datasets.

    Game A values come from real engine runs whose detour rate scales with
    the participant's ability factor. The counterpart game's value is derived
    from the same run's realized excess distance with independent
    multiplicative jitter, so jitter 0 gives a perfect correlation and small
    jitter degrades it smoothly. Group split (who plays which game first) is
    recorded as metadata; it cannot alter synthetic results.
    """
    if n_participants < 1:
        raise ValueError(f"need at least 1 participant, got {n_participants}")
    if not levels:
        raise ValueError("need at least one level")
    ranked = sorted(levels, key=lambda lv: lv.difficulty_rank)
    rng = random.Random(seed)
    rows_a, rows_b, participants, sessions = [], [], [], []
    half = (n_participants + 1) // 2
    for idx in range(n_participants):
        pid = f"p{idx + 1:02d}"
        ability = rng.uniform(0.5, 2.0)
        group = 1 if idx < half else 2
        participants.append(
            ParticipantMeta(
                participant_id=pid,
                ability_factor=ability,
                group=group,
                play_order="engine_first" if group == 1 else "counterpart_first",
            )
        )
        for rank, level in enumerate(ranked, start=1):
            profile = AgentProfile(
                kind="noisy",
                detour_rate=min(MAX_DETOUR_RATE, template.detour_rate * ability),
                wrong_item_rate=template.wrong_item_rate,
                ability_factor=ability,
                seed=rng.getrandbits(63),
            )
            session = run_agent(
                level,
                profile,
                participant_id=pid,
                session_id=f"{pid}-{level.level_id}",
            )
            sessions.append(session)
            value_a = session_metrics(session).normalized_distance
            value_b = 1.0 + (value_a - 1.0) * (1.0 + jitter * rng.uniform(-1.0, 1.0))
            rows_a.append(MetricRow(pid, rank, value_a))
            rows_b.append(MetricRow(pid, rank, value_b))
    return CohortResult(
        rows_a=tuple(rows_a),
        rows_b=tuple(rows_b),
        participants=tuple(participants),
        sessions=tuple(sessions),
    )
