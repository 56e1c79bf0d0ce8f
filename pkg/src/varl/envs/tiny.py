"""Two-state, two-action MDP with a known closed-form optimum; used as a
convergence sanity check for the critic stack."""

from __future__ import annotations

import numpy as np

from ..spaces import Discrete
from .base import Env, EnvSpec

# reward[state][action]; taking action a moves to state a deterministically
TINY_REWARDS = ((0.1, 0.0), (0.2, 1.0))


class TinyMDP(Env):
    """Continuing MDP truncated at `max_episode_steps`: state equals the last
    action taken, the reward table is fixed, and episodes only end by timeout
    (flagged truncated, so critics learn the infinite-horizon values)."""

    def __init__(self, max_episode_steps: int = 20, rng=None):
        super().__init__(rng)
        self._idx = 0
        self.spec = EnvSpec(
            name="tiny_mdp",
            state_dim=2,
            action_space=Discrete(2, labels=("0: stay cautious", "1: commit")),
            max_episode_steps=max_episode_steps,
            reward_regime="dense",
        )

    def _encode(self, idx: int) -> np.ndarray:
        state = np.zeros(2)
        state[idx] = 1.0
        return state

    def decode(self, state: np.ndarray) -> int:
        return int(np.argmax(state))

    def _sample_initial(self) -> np.ndarray:
        self._idx = 0
        return self._encode(0)

    def _transition(self, action):
        a = int(action)
        reward = TINY_REWARDS[self._idx][a]
        self._idx = a
        return self._encode(self._idx), reward, False, reward == 1.0

    def oracle_action(self, state: np.ndarray) -> int:
        return 1

    def task_text(self) -> str:
        return (
            "A two-state decision loop. Each action both pays a reward and "
            "selects the next state; committing from the committed state pays "
            "the most."
        )

    def state_text(self, state: np.ndarray) -> str:
        return f"in state {self.decode(state)}; state vector [{state[0]:.6f}, {state[1]:.6f}]"
