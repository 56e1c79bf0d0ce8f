"""Sparse goal-reaching gridworld and the hard-exploration chain task."""

from __future__ import annotations

import numpy as np

from ..spaces import Discrete
from .base import Env, EnvSpec

GRID_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))
GRID_LABELS = ("0: up", "1: down", "2: left", "3: right")


class SparseGridWorld(Env):
    """NxN grid; the agent starts in the corner, the goal cell is sampled per
    episode. Reward 1 is paid only on entering the goal (event reward).

    `min_goal_distance` restricts the goal distribution to cells at least
    that far (Manhattan) from the start; high values give a hard-exploration
    variant where undirected walks essentially never trigger the event.
    """

    def __init__(
        self,
        size: int = 7,
        max_episode_steps: int = 60,
        min_goal_distance: int = 1,
        rng=None,
    ):
        super().__init__(rng)
        if not 1 <= min_goal_distance <= 2 * (size - 1):
            raise ValueError("min_goal_distance must be in [1, 2*(size-1)]")
        self.size = size
        self.start = (0, 0)
        self.min_goal_distance = min_goal_distance
        self.goal: tuple[int, int] | None = None
        self._pos: tuple[int, int] | None = None
        self.spec = EnvSpec(
            name="sparse_gridworld",
            state_dim=4,
            action_space=Discrete(4, labels=GRID_LABELS),
            max_episode_steps=max_episode_steps,
            reward_regime="sparse-event",
        )

    # state: (row, col, goal_row, goal_col) scaled to [-1, 1]
    def _encode(self, pos, goal) -> np.ndarray:
        c = self.size - 1
        return np.array(
            [2 * pos[0] / c - 1, 2 * pos[1] / c - 1, 2 * goal[0] / c - 1, 2 * goal[1] / c - 1]
        )

    def decode(self, state: np.ndarray) -> tuple[tuple[int, int], tuple[int, int]]:
        c = self.size - 1
        vals = [int(round((x + 1) * c / 2)) for x in state]
        return (vals[0], vals[1]), (vals[2], vals[3])

    def _sample_initial(self) -> np.ndarray:
        while True:
            goal = (int(self._rng.integers(self.size)), int(self._rng.integers(self.size)))
            if abs(goal[0] - self.start[0]) + abs(goal[1] - self.start[1]) >= self.min_goal_distance:
                break
        self.goal = goal
        self._pos = self.start
        return self._encode(self._pos, goal)

    def _transition(self, action):
        dr, dc = GRID_MOVES[int(action)]
        r = min(max(self._pos[0] + dr, 0), self.size - 1)
        c = min(max(self._pos[1] + dc, 0), self.size - 1)
        self._pos = (r, c)
        reached = self._pos == self.goal
        return self._encode(self._pos, self.goal), float(reached), reached, reached

    def oracle_action(self, state: np.ndarray) -> int:
        (r, c), (gr, gc) = self.decode(state)
        if gr < r:
            return 0
        if gr > r:
            return 1
        if gc < c:
            return 2
        return 3

    def task_text(self) -> str:
        return (
            f"Navigate a {self.size}x{self.size} grid to the goal cell. "
            "Each move shifts the agent one cell; moves off the edge do nothing. "
            "The episode succeeds when the agent stands on the goal cell."
        )

    def state_text(self, state: np.ndarray) -> str:
        pos, goal = self.decode(state)
        vec = ", ".join(f"{x:.6f}" for x in state)
        return f"agent at (row={pos[0]}, col={pos[1]}); goal at (row={goal[0]}, col={goal[1]}); state vector [{vec}]"


class ChainMDP(Env):
    """Chain of `length` cells. Moving forward advances one cell; moving back
    resets to the start, which makes random exploration of the far end
    essentially hopeless. Reward 1 only at the final cell."""

    def __init__(self, length: int = 25, max_episode_steps: int = 120, rng=None):
        super().__init__(rng)
        self.length = length
        self._idx = 0
        self.spec = EnvSpec(
            name="chain",
            state_dim=1,
            action_space=Discrete(2, labels=("0: back to start", "1: forward")),
            max_episode_steps=max_episode_steps,
            reward_regime="sparse-event",
        )

    def _encode(self, idx: int) -> np.ndarray:
        return np.array([2 * idx / (self.length - 1) - 1])

    def decode(self, state: np.ndarray) -> int:
        return int(round((state[0] + 1) * (self.length - 1) / 2))

    def _sample_initial(self) -> np.ndarray:
        self._idx = 0
        return self._encode(0)

    def _transition(self, action):
        self._idx = self._idx + 1 if int(action) == 1 else 0
        reached = self._idx == self.length - 1
        return self._encode(self._idx), float(reached), reached, reached

    def oracle_action(self, state: np.ndarray) -> int:
        return 1

    def task_text(self) -> str:
        return (
            f"Walk a corridor of {self.length} cells from cell 0 to cell {self.length - 1}. "
            "Going forward advances one cell; going back returns to cell 0. "
            "The episode succeeds on reaching the last cell."
        )

    def state_text(self, state: np.ndarray) -> str:
        return f"agent at cell {self.decode(state)} of {self.length - 1}; state vector [{state[0]:.6f}]"
