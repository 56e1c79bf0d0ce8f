"""Episodic environment interface shared by all desk-scale tasks.

Rewards live in [0, 1]. Reward regimes:
  * sparse-event  — reward 1 exactly once, when the success event fires
  * distance      — bounded shaped reward from a distance to target
  * dense         — per-step reward from a fixed table

Timeouts end the episode (`done=True`) but are flagged as `truncated` so TD
targets can bootstrap through them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spaces import ActionSpace

REWARD_REGIMES = ("dense", "sparse-event", "distance")


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_space: ActionSpace
    max_episode_steps: int
    reward_regime: str

    def __post_init__(self):
        if self.reward_regime not in REWARD_REGIMES:
            raise ValueError(f"unknown reward regime {self.reward_regime!r}")
        if self.max_episode_steps < 1 or self.state_dim < 1:
            raise ValueError("state_dim and max_episode_steps must be positive")


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: float
    done: bool
    success: bool
    truncated: bool = False


class Env:
    """Base class: owns the episode counter, timeout handling and rng."""

    spec: EnvSpec

    def __init__(self, rng: np.random.Generator | None = None):
        self._rng = rng if rng is not None else np.random.default_rng()
        self._steps = 0
        self._done = True
        self._state: np.ndarray | None = None

    # -- to implement per task ----------------------------------------------

    def _sample_initial(self) -> np.ndarray:
        raise NotImplementedError

    def _transition(self, action) -> tuple[np.ndarray, float, bool, bool]:
        """Apply one action; returns (next_state, reward, terminal, success)."""
        raise NotImplementedError

    def oracle_action(self, state: np.ndarray):
        """Ground-truth controller used by scripted advisors and the expert
        prefill baseline; succeeds from any reachable state."""
        raise NotImplementedError

    def task_text(self) -> str:
        raise NotImplementedError

    def state_text(self, state: np.ndarray) -> str:
        raise NotImplementedError

    # -- episode driver -------------------------------------------------------

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = self._sample_initial()
        self._steps = 0
        self._done = False
        return self._state.copy()

    def step(self, action) -> StepResult:
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        if not self.spec.action_space.contains(action):
            raise ValueError(f"action {action!r} outside the action space")
        next_state, reward, terminal, success = self._transition(action)
        if not 0.0 <= reward <= 1.0:
            raise AssertionError(f"reward {reward} outside [0, 1]")
        self._steps += 1
        truncated = not terminal and self._steps >= self.spec.max_episode_steps
        done = terminal or truncated
        self._state = next_state
        self._done = done
        return StepResult(
            next_state=next_state.copy(),
            reward=float(reward),
            done=done,
            success=success,
            truncated=truncated,
        )
