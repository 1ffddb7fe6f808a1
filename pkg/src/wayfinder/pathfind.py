"""Grid shortest paths and the optimal multi-leg course.

Movement is 4-connected with unit cost (no diagonals), matching the cell-by-
cell movement model used by the session engine and the play client. The
multi-leg course is solved exactly by dynamic programming over interaction
cells, never greedily per leg.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

from .model import Cell, Grid, LevelSpec, chebyshev

# Fixed neighbor expansion order keeps returned paths deterministic.
STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class UnreachableCourseError(Exception):
    """A checkpoint's interaction set cannot be reached from the previous leg."""

    def __init__(self, checkpoint_order: int):
        self.checkpoint_order = checkpoint_order
        super().__init__(f"checkpoint {checkpoint_order} is unreachable")


@dataclass(frozen=True)
class CourseWaypoints:
    """Start cell plus, per checkpoint in visit order, the set of walkable
    cells from which that checkpoint's chest can be opened."""

    start_cell: Cell
    interaction_sets: tuple[frozenset[Cell], ...]


@dataclass(frozen=True)
class OptimalCourse:
    length: int
    legs: tuple[tuple[Cell, ...], ...]  # leg i: path from previous arrival to checkpoint i

    def cells(self) -> tuple[Cell, ...]:
        """Full walk, start to final arrival, with leg joints deduplicated."""
        walk: list[Cell] = []
        for leg in self.legs:
            walk.extend(leg if not walk else leg[1:])
        return tuple(walk)


def interaction_cells(grid: Grid, chest_cell: Cell) -> frozenset[Cell]:
    """Walkable cells within Chebyshev distance 1 of a chest cell."""
    cx, cy = chest_cell
    cells = set()
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            cell = (cx + dx, cy + dy)
            if (dx or dy) and grid.is_walkable(cell):
                cells.add(cell)
    return frozenset(cells)


def course_waypoints(level: LevelSpec) -> CourseWaypoints:
    ordered = sorted(level.checkpoints, key=lambda cp: cp.order_index)
    return CourseWaypoints(
        start_cell=level.start_cell,
        interaction_sets=tuple(interaction_cells(level.grid, cp.chest_cell) for cp in ordered),
    )


def distances_from(grid: Grid, from_cell: Cell) -> dict[Cell, int]:
    """Breadth-first distance field over walkable cells."""
    if not grid.is_walkable(from_cell):
        raise ValueError(f"from_cell {from_cell} is not walkable")
    dist = {from_cell: 0}
    queue = deque([from_cell])
    while queue:
        x, y = queue.popleft()
        d = dist[(x, y)]
        for dx, dy in STEPS:
            nxt = (x + dx, y + dy)
            if nxt not in dist and grid.is_walkable(nxt):
                dist[nxt] = d + 1
                queue.append(nxt)
    return dist


def shortest_path(
    grid: Grid, from_cell: Cell, to_cells: frozenset[Cell] | set[Cell]
) -> tuple[int, list[Cell]] | None:
    """Minimal 4-connected walk from from_cell to any cell of to_cells.

    Returns (length, path) with path realizing the length, or None when no
    target is reachable. Blocked targets are simply never reached.
    """
    if not to_cells:
        raise ValueError("to_cells must be non-empty")
    if not grid.is_walkable(from_cell):
        raise ValueError(f"from_cell {from_cell} is not walkable")
    targets = set(to_cells)
    if from_cell in targets:
        return 0, [from_cell]
    parent: dict[Cell, Cell] = {from_cell: from_cell}
    queue = deque([from_cell])
    while queue:
        cur = queue.popleft()
        x, y = cur
        for dx, dy in STEPS:
            nxt = (x + dx, y + dy)
            if nxt in parent or not grid.is_walkable(nxt):
                continue
            parent[nxt] = cur
            if nxt in targets:
                path = [nxt]
                while path[-1] != from_cell:
                    path.append(parent[path[-1]])
                path.reverse()
                return len(path) - 1, path
            queue.append(nxt)
    return None


def shortest_path_astar(
    grid: Grid, from_cell: Cell, to_cells: frozenset[Cell] | set[Cell]
) -> tuple[int, list[Cell]] | None:
    """A*-accelerated variant of shortest_path; identical lengths by contract
    (heuristic: Manhattan distance to the nearest target, admissible)."""
    if not to_cells:
        raise ValueError("to_cells must be non-empty")
    if not grid.is_walkable(from_cell):
        raise ValueError(f"from_cell {from_cell} is not walkable")
    targets = set(to_cells)

    def h(cell: Cell) -> int:
        x, y = cell
        return min(abs(x - tx) + abs(y - ty) for tx, ty in targets)

    open_heap: list[tuple[int, int, Cell]] = [(h(from_cell), 0, from_cell)]
    g_score = {from_cell: 0}
    parent: dict[Cell, Cell] = {from_cell: from_cell}
    while open_heap:
        _, g, cur = heapq.heappop(open_heap)
        if g > g_score.get(cur, g):
            continue
        if cur in targets:
            path = [cur]
            while path[-1] != from_cell:
                path.append(parent[path[-1]])
            path.reverse()
            return g, path
        x, y = cur
        for dx, dy in STEPS:
            nxt = (x + dx, y + dy)
            if not grid.is_walkable(nxt):
                continue
            tentative = g + 1
            if tentative < g_score.get(nxt, tentative + 1):
                g_score[nxt] = tentative
                parent[nxt] = cur
                heapq.heappush(open_heap, (tentative + h(nxt), tentative, nxt))
    return None


def optimal_course(level: LevelSpec) -> OptimalCourse:
    """Shortest legal way to complete the course start -> cp1 -> ... -> cpN.

    Solved by DP over (checkpoint index, interaction cell): the arrival cell
    chosen at one checkpoint affects every later leg, so per-leg greedy
    choices are not admissible. Raises UnreachableCourseError naming the
    first checkpoint whose interaction set cannot be reached.
    """
    waypoints = course_waypoints(level)
    grid = level.grid
    fields: dict[Cell, dict[Cell, int]] = {}

    def field(cell: Cell) -> dict[Cell, int]:
        if cell not in fields:
            fields[cell] = distances_from(grid, cell)
        return fields[cell]

    # cost[cell] = minimal steps from start to `cell`, having visited all
    # previous interaction sets in order and arriving at `cell` in the
    # current set. back[i][cell] = chosen arrival cell of the previous set.
    start_field = field(waypoints.start_cell)
    cost: dict[Cell, int] = {}
    back: list[dict[Cell, Cell]] = []
    for i, targets in enumerate(waypoints.interaction_sets):
        new_cost: dict[Cell, int] = {}
        links: dict[Cell, Cell] = {}
        for cell in sorted(targets, key=lambda c: (c[1], c[0])):
            if i == 0:
                if cell in start_field:
                    new_cost[cell] = start_field[cell]
                    links[cell] = waypoints.start_cell
                continue
            best: tuple[int, Cell] | None = None
            for prev_cell in sorted(cost, key=lambda c: (c[1], c[0])):
                d = field(prev_cell).get(cell)
                if d is None:
                    continue
                candidate = cost[prev_cell] + d
                if best is None or candidate < best[0]:
                    best = (candidate, prev_cell)
            if best is not None:
                new_cost[cell] = best[0]
                links[cell] = best[1]
        if not new_cost:
            raise UnreachableCourseError(i + 1)
        cost = new_cost
        back.append(links)

    end = min(cost, key=lambda c: (cost[c], c[1], c[0]))
    total = cost[end]

    # Recover per-leg arrival cells, then realize each leg as an actual path.
    arrivals = [end]
    for links in reversed(back):
        arrivals.append(links[arrivals[-1]])
    arrivals.reverse()  # [start, arrival1, ..., arrivalN]

    legs = []
    for a, b in zip(arrivals, arrivals[1:]):
        found = shortest_path(grid, a, {b})
        assert found is not None  # reachability established by the DP
        legs.append(tuple(found[1]))
    course = OptimalCourse(length=total, legs=tuple(legs))
    assert sum(len(leg) - 1 for leg in course.legs) == total
    return course


def optimal_course_length(level: LevelSpec) -> int:
    return optimal_course(level).length
