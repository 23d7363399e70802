"""Multi-goal MDP pieces: sparse binary reward, 2-D maze worlds, point reach.

States, goals, and achieved goals all live in the same 2-D coordinate space.
Episodes are fixed length; reaching the goal does not terminate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

BUILTIN_LAYOUTS = ("open_room", "u_corridor", "spiral")


class LayoutError(ValueError):
    """Maze layout text could not be parsed."""


@dataclass(frozen=True)
class MultiGoalSpec:
    state_dim: int
    action_dim: int
    goal_dim: int
    horizon: int
    gamma: float
    epsilon: float

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("goal radius epsilon must be > 0")


def reward(achieved: np.ndarray, desired: np.ndarray, epsilon: float) -> float:
    """0 when the achieved goal is strictly within epsilon of the desired one, else -1."""
    achieved = np.asarray(achieved, dtype=np.float64)
    desired = np.asarray(desired, dtype=np.float64)
    if achieved.shape != desired.shape:
        raise ValueError(f"goal shapes differ: {achieved.shape} vs {desired.shape}")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be > 0")
    return 0.0 if float(np.linalg.norm(achieved - desired)) < epsilon else -1.0


def reward_batch(achieved: np.ndarray, desired: np.ndarray, epsilon: float) -> np.ndarray:
    """Vectorized sparse reward over rows; same strict-inequality rule as reward()."""
    dist = np.linalg.norm(np.asarray(achieved, float) - np.asarray(desired, float), axis=-1)
    return np.where(dist < epsilon, 0.0, -1.0)


@dataclass(frozen=True)
class MazeSpec:
    width: int
    height: int
    blocked: frozenset[tuple[int, int]]
    start: tuple[int, int]
    v_max: float = 1.0
    epsilon: float = 0.5

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("maze must be at least 1x1")
        if self.start in self.blocked:
            raise ValueError("start cell is blocked")
        if len(self.free_cells()) < 2:
            raise ValueError("maze needs at least one free cell besides the start")

    def free_cells(self) -> list[tuple[int, int]]:
        """All non-blocked cells, in deterministic (row-major) order."""
        return [
            (c, r)
            for r in range(self.height)
            for c in range(self.width)
            if (c, r) not in self.blocked
        ]

    def cell_of(self, pos: np.ndarray) -> tuple[int, int]:
        """Grid cell containing a (clamped) continuous position."""
        c = min(int(math.floor(pos[0])), self.width - 1)
        r = min(int(math.floor(pos[1])), self.height - 1)
        return max(c, 0), max(r, 0)


def load_maze_layout(text: str) -> MazeSpec:
    """Parse a character grid: '#' block, '.' free, 'S' start (exactly one)."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise LayoutError("empty layout")
    width = len(lines[0])
    blocked: set[tuple[int, int]] = set()
    start: tuple[int, int] | None = None
    for r, line in enumerate(lines):
        if len(line) != width:
            raise LayoutError(f"line {r + 1}: ragged row (got {len(line)} cells, expected {width})")
        for c, ch in enumerate(line):
            if ch == "#":
                blocked.add((c, r))
            elif ch == "S":
                if start is not None:
                    raise LayoutError(f"line {r + 1}, column {c + 1}: multiple start cells")
                start = (c, r)
            elif ch != ".":
                raise LayoutError(f"line {r + 1}, column {c + 1}: unknown character {ch!r}")
    if start is None:
        raise LayoutError("layout has no start cell 'S'")
    return MazeSpec(width=width, height=len(lines), blocked=frozenset(blocked), start=start)


def load_layout(name_or_path: str) -> MazeSpec:
    """Load a maze layout from a file path or one of the builtin names."""
    p = Path(name_or_path)
    if p.is_file():
        return load_maze_layout(p.read_text(encoding="utf-8"))
    if name_or_path in BUILTIN_LAYOUTS:
        text = resources.files("teachrl").joinpath(f"layouts/{name_or_path}.txt").read_text("utf-8")
        return load_maze_layout(text)
    raise LayoutError(
        f"layout {name_or_path!r} is neither an existing file nor a builtin "
        f"({', '.join(BUILTIN_LAYOUTS)})"
    )


def maze_step(spec: MazeSpec, pos: np.ndarray, action: np.ndarray) -> np.ndarray:
    """Move by `action` (rescaled to norm <= v_max); reject the whole step on a block.

    The candidate position is clamped to the maze bounds first, so boundary
    cells act as implicit walls. There is no sliding: a blocked candidate
    leaves the position unchanged.
    """
    pos = np.asarray(pos, dtype=np.float64)
    action = np.asarray(action, dtype=np.float64)
    n = float(np.linalg.norm(action))
    if n > spec.v_max:
        action = action * (spec.v_max / n)
    cand = np.clip(pos + action, [0.0, 0.0], [float(spec.width), float(spec.height)])
    if spec.cell_of(cand) in spec.blocked:
        return pos.copy()
    return cand


def sample_goal_space(spec: MazeSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n positions uniformly over the free continuous area of the maze."""
    if n < 1:
        raise ValueError("need n >= 1 goals")
    free = spec.free_cells()
    if not free:
        raise ValueError("maze has no free cells to sample goals from")
    cells = np.asarray(free, dtype=np.float64)
    idx = rng.integers(len(free), size=n)
    return cells[idx] + rng.random((n, 2))


@dataclass
class GoalConditionedTransition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    achieved_goal: np.ndarray
    desired_goal: np.ndarray


class MazeEnv:
    """Continuous point agent in a blocked grid; observation is the 2-D position."""

    def __init__(self, maze: MazeSpec, horizon: int = 50, gamma: float = 0.98):
        self.maze = maze
        self.spec = MultiGoalSpec(
            state_dim=2,
            action_dim=2,
            goal_dim=2,
            horizon=horizon,
            gamma=gamma,
            epsilon=maze.epsilon,
        )
        self.pos = self.start_state()
        self.goal = np.zeros(2)
        self.t = 0

    def start_state(self) -> np.ndarray:
        c, r = self.maze.start
        return np.array([c + 0.5, r + 0.5])

    @property
    def bounds(self) -> np.ndarray:
        """Upper coordinate bound per dimension (positions live in [0, bounds])."""
        return np.array([float(self.maze.width), float(self.maze.height)])

    def reset(self, goal: np.ndarray) -> np.ndarray:
        self.pos = self.start_state()
        self.goal = np.asarray(goal, dtype=np.float64).copy()
        self.t = 0
        return self.pos.copy()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
        self.pos = maze_step(self.maze, self.pos, action)
        self.t += 1
        assert self.maze.cell_of(self.pos) not in self.maze.blocked
        assert 0.0 <= self.pos[0] <= self.maze.width and 0.0 <= self.pos[1] <= self.maze.height
        achieved = self.pos.copy()
        r = reward(achieved, self.goal, self.spec.epsilon)
        return self.pos.copy(), r, achieved

    def sample_goals(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_goal_space(self.maze, n, rng)


class PointReachEnv:
    """Fast sanity environment: a point in [-1, 1]^2 chasing goals from the origin.

    Actions are displacements clipped to norm 0.1; the goal radius is 0.05.
    """

    V_MAX = 0.1

    def __init__(self, horizon: int = 50, gamma: float = 0.98):
        self.spec = MultiGoalSpec(
            state_dim=2, action_dim=2, goal_dim=2, horizon=horizon, gamma=gamma, epsilon=0.05
        )
        self.pos = np.zeros(2)
        self.goal = np.zeros(2)
        self.t = 0

    def start_state(self) -> np.ndarray:
        return np.zeros(2)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([1.0, 1.0])

    def reset(self, goal: np.ndarray) -> np.ndarray:
        self.pos = np.zeros(2)
        self.goal = np.asarray(goal, dtype=np.float64).copy()
        self.t = 0
        return self.pos.copy()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
        a = np.asarray(action, dtype=np.float64)
        n = float(np.linalg.norm(a))
        if n > self.V_MAX:
            a = a * (self.V_MAX / n)
        self.pos = np.clip(self.pos + a, -1.0, 1.0)
        self.t += 1
        achieved = self.pos.copy()
        r = reward(achieved, self.goal, self.spec.epsilon)
        return self.pos.copy(), r, achieved

    def sample_goals(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ValueError("need n >= 1 goals")
        return rng.uniform(-1.0, 1.0, size=(n, 2))
