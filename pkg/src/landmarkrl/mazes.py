"""Deterministic 2D point-mass maze environments with sparse rewards.

A maze is a boolean wall grid; the agent is a point at a continuous (x, y)
position, x along columns and y along rows. Motion is kinematic: the
position integrates the (clipped) action, collisions are resolved per
axis by clamping at the first wall boundary. Reward is -1 per step and 0
exactly when the goal is reached within its tolerance.

Specs load from plain text: a key-value header, a ``---`` line, then grid
rows of ``#`` (wall), ``.`` (free), ``S`` (start cell), ``G`` (goal cell).
The evaluation start is the S cell geodesically farthest from the goal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

WALL_MARGIN = 1e-6  # fraction of a cell kept clear of wall boundaries


class MazeSpecError(ValueError):
    """Malformed maze specification."""


@dataclass(frozen=True)
class MazeSpec:
    walls: np.ndarray  # bool (rows, cols), True = wall
    cell_size: float
    start_cells: tuple[tuple[int, int], ...]  # (row, col)
    eval_start_cell: tuple[int, int]
    goal_cell: tuple[int, int]
    goal_tolerance: float
    max_action: float
    max_steps: int
    randomize_start: bool = True
    noise_dims: int = 0
    name: str = "maze"

    @property
    def rows(self) -> int:
        return self.walls.shape[0]

    @property
    def cols(self) -> int:
        return self.walls.shape[1]

    @property
    def extent(self) -> float:
        """The longer side length, used to normalize positions for nets."""
        return max(self.rows, self.cols) * self.cell_size

    @property
    def goal_position(self) -> np.ndarray:
        r, c = self.goal_cell
        return np.array([(c + 0.5) * self.cell_size, (r + 0.5) * self.cell_size])

    def cell_of(self, position: np.ndarray) -> tuple[int, int]:
        c = int(np.floor(position[0] / self.cell_size))
        r = int(np.floor(position[1] / self.cell_size))
        return r, c

    def is_wall(self, row: int, col: int) -> bool:
        if row < 0 or col < 0 or row >= self.rows or col >= self.cols:
            return True
        return bool(self.walls[row, col])

    def validate(self) -> None:
        if self.goal_tolerance <= 0:
            raise MazeSpecError("goal_tolerance must be > 0")
        if self.max_steps < 1:
            raise MazeSpecError("max_steps must be >= 1")
        if self.max_action <= 0:
            raise MazeSpecError("max_action must be > 0")
        if not self.start_cells:
            raise MazeSpecError("start region is empty")
        for r, c in self.start_cells:
            if self.is_wall(r, c):
                raise MazeSpecError(f"start cell {(r, c)} lies in a wall")
        if self.is_wall(*self.goal_cell):
            raise MazeSpecError(f"goal cell {self.goal_cell} lies in a wall")


@dataclass
class Observation:
    position: np.ndarray  # (2,)
    velocity: np.ndarray  # (2,)
    noise: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity, self.noise])

    def copy(self) -> "Observation":
        return Observation(self.position.copy(), self.velocity.copy(), self.noise.copy())


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    success: bool


def _geodesic_distances(spec: MazeSpec) -> np.ndarray:
    """BFS cell distance from the goal; walls and unreachable cells are inf."""
    dist = np.full(spec.walls.shape, np.inf)
    start = spec.goal_cell
    dist[start] = 0.0
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nr, nc = r + dr, c + dc
            if not spec.is_wall(nr, nc) and np.isinf(dist[nr, nc]):
                dist[nr, nc] = dist[r, c] + 1.0
                queue.append((nr, nc))
    return dist


class Maze:
    """Stateful episode wrapper around a MazeSpec."""

    def __init__(self, spec: MazeSpec):
        spec.validate()
        self.spec = spec
        self._pos: np.ndarray | None = None
        self._t = 0
        self._rng: np.random.Generator | None = None

    @property
    def observation_dim(self) -> int:
        return 4 + self.spec.noise_dims

    def goal_observation(self) -> Observation:
        return Observation(
            self.spec.goal_position.copy(), np.zeros(2), np.zeros(self.spec.noise_dims)
        )

    def reset(self, seed: int = 0, mode: str = "train") -> tuple[Observation, Observation]:
        """Place the agent and return (observation, goal observation).

        Train mode samples uniformly over the start region (cell chosen
        uniformly, then a uniform point inside it); eval mode always uses
        the center of the fixed hardest start cell.
        """
        if mode not in ("train", "eval"):
            raise ValueError(f"unknown reset mode {mode!r}")
        self._rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x4D5A]))
        cell = self.spec.cell_size
        if mode == "eval" or not self.spec.randomize_start:
            r, c = self.spec.eval_start_cell
            pos = np.array([(c + 0.5) * cell, (r + 0.5) * cell])
        else:
            idx = int(self._rng.integers(len(self.spec.start_cells)))
            r, c = self.spec.start_cells[idx]
            frac = self._rng.uniform(WALL_MARGIN, 1.0 - WALL_MARGIN, size=2)
            pos = np.array([(c + frac[0]) * cell, (r + frac[1]) * cell])
        self._pos = pos
        self._t = 0
        noise = (
            self._rng.standard_normal(self.spec.noise_dims)
            if self.spec.noise_dims
            else np.zeros(0)
        )
        return Observation(pos.copy(), np.zeros(2), noise), self.goal_observation()

    def _slide_axis(self, pos: np.ndarray, delta: float, axis: int) -> float:
        """Move one coordinate, clamping at the first wall boundary crossed."""
        spec = self.spec
        cell = spec.cell_size
        margin = WALL_MARGIN * cell
        cur = pos[axis]
        target = cur + delta
        if delta == 0.0:
            return cur
        fixed_cell = int(np.floor(pos[1 - axis] / cell))
        cur_cell = int(np.floor(cur / cell))
        target_cell = int(np.floor(target / cell))
        step = 1 if delta > 0 else -1
        for k in range(cur_cell + step, target_cell + step, step):
            r, c = (fixed_cell, k) if axis == 0 else (k, fixed_cell)
            if spec.is_wall(r, c):
                if step > 0:
                    return k * cell - margin
                return (k + 1) * cell + margin
        return target

    def step(self, action: np.ndarray) -> StepResult:
        if self._pos is None or self._rng is None:
            raise RuntimeError("step() before reset()")
        a = np.asarray(action, dtype=np.float64).reshape(2).copy()
        norm = float(np.linalg.norm(a))
        if norm > self.spec.max_action:
            a *= self.spec.max_action / norm
        old = self._pos.copy()
        pos = self._pos
        pos[0] = self._slide_axis(pos, a[0], axis=0)
        pos[1] = self._slide_axis(pos, a[1], axis=1)
        self._t += 1
        velocity = pos - old
        noise = (
            self._rng.standard_normal(self.spec.noise_dims)
            if self.spec.noise_dims
            else np.zeros(0)
        )
        success = bool(
            np.linalg.norm(pos - self.spec.goal_position) <= self.spec.goal_tolerance
        )
        reward = 0.0 if success else -1.0
        done = success or self._t >= self.spec.max_steps
        obs = Observation(pos.copy(), velocity, noise)
        return StepResult(obs, reward, done, success)


# -- text format ----------------------------------------------------------

_HEADER_TYPES = {
    "cell_size": float,
    "goal_tolerance": float,
    "max_action": float,
    "max_steps": int,
    "randomize_start": lambda s: s.strip().lower() in ("1", "true", "yes"),
    "noise_dims": int,
    "name": str,
}

_HEADER_DEFAULTS = {
    "cell_size": 1.0,
    "goal_tolerance": 0.5,
    "max_action": 1.0,
    "max_steps": 200,
    "randomize_start": True,
    "noise_dims": 0,
    "name": "maze",
}


def parse_maze_text(text: str) -> MazeSpec:
    header = dict(_HEADER_DEFAULTS)
    lines = text.splitlines()
    grid_lines: list[str] = []
    in_grid = False
    for raw in lines:
        line = raw.rstrip("\n")
        if not in_grid:
            stripped = line.strip()
            if stripped == "---":
                in_grid = True
                continue
            if not stripped:
                continue
            if "=" not in stripped:
                raise MazeSpecError(f"bad header line (want key = value): {line!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in _HEADER_TYPES:
                raise MazeSpecError(f"unknown header key {key!r}")
            try:
                header[key] = _HEADER_TYPES[key](value.strip())
            except ValueError as exc:
                raise MazeSpecError(f"bad value for {key!r}: {value.strip()!r}") from exc
        else:
            if line.strip():
                grid_lines.append(line)
    if not grid_lines:
        raise MazeSpecError("no grid found (missing '---' separator?)")
    width = max(len(row) for row in grid_lines)
    walls = np.ones((len(grid_lines), width), dtype=bool)
    starts: list[tuple[int, int]] = []
    goal: tuple[int, int] | None = None
    for r, row in enumerate(grid_lines):
        for c, ch in enumerate(row):
            if ch == "#":
                continue
            if ch == ".":
                walls[r, c] = False
            elif ch == "S":
                walls[r, c] = False
                starts.append((r, c))
            elif ch == "G":
                walls[r, c] = False
                if goal is not None:
                    raise MazeSpecError("more than one goal cell")
                goal = (r, c)
            else:
                raise MazeSpecError(f"unknown grid character {ch!r} at row {r}")
    if goal is None:
        raise MazeSpecError("no goal cell (G) in grid")
    if not starts:
        raise MazeSpecError("no start cells (S) in grid")
    spec = MazeSpec(
        walls=walls,
        cell_size=header["cell_size"],
        start_cells=tuple(starts),
        eval_start_cell=starts[0],
        goal_cell=goal,
        goal_tolerance=header["goal_tolerance"],
        max_action=header["max_action"],
        max_steps=header["max_steps"],
        randomize_start=header["randomize_start"],
        noise_dims=header["noise_dims"],
        name=header["name"],
    )
    dist = _geodesic_distances(spec)
    best = max(starts, key=lambda rc: (dist[rc], -starts.index(rc)))
    if np.isinf(dist[best]):
        raise MazeSpecError("no start cell can reach the goal")
    spec = MazeSpec(
        walls=walls,
        cell_size=spec.cell_size,
        start_cells=spec.start_cells,
        eval_start_cell=best,
        goal_cell=goal,
        goal_tolerance=spec.goal_tolerance,
        max_action=spec.max_action,
        max_steps=spec.max_steps,
        randomize_start=spec.randomize_start,
        noise_dims=spec.noise_dims,
        name=spec.name,
    )
    spec.validate()
    return spec


def load_maze_file(path) -> MazeSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_maze_text(fh.read())


# A compact U-shaped corridor: start in the bottom-left pocket, goal in the
# top-left, the only route runs right along the bottom, up the far side and
# back left along the top.
_UMAZE = """
name = umaze
goal_tolerance = 0.5
max_steps = 200
max_action = 1.0
---
###########
#G........#
#.........#
########..#
########..#
#SS.......#
#SS.......#
###########
"""

# Four rooms joined by single-cell doorways; start bottom-left room, goal
# top-right room.
_FOUR_ROOMS = """
name = four_rooms
goal_tolerance = 0.5
max_steps = 200
max_action = 1.0
---
#############
#.....#.....#
#.....#....G#
#.....#.....#
#...........#
#.....#.....#
###.#####.###
#.....#.....#
#.....#.....#
#...........#
#SS...#.....#
#SS...#.....#
#############
"""


BUILTIN_MAZES = {
    "umaze": _UMAZE,
    "four_rooms": _FOUR_ROOMS,
}


def make_maze(name_or_path: str) -> Maze:
    if name_or_path in BUILTIN_MAZES:
        return Maze(parse_maze_text(BUILTIN_MAZES[name_or_path]))
    return Maze(load_maze_file(name_or_path))
