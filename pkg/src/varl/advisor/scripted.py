"""Scripted advisors: the environment oracle degraded by a controllable
quality model, standing in for a remote model in hermetic runs."""

from __future__ import annotations

import numpy as np

from ..envs.base import Env
from ..spaces import Box, Discrete


class ScriptedAdvisor:
    """Wraps an environment's oracle controller.

    Finite actions: returns the oracle action with probability `accuracy`,
    otherwise a uniformly random *other* action. Box actions: returns the
    oracle action plus a fixed bias and Gaussian noise, clipped into bounds.
    """

    def __init__(
        self,
        env: Env,
        rng: np.random.Generator,
        accuracy: float = 1.0,
        bias: np.ndarray | None = None,
        noise: float = 0.0,
    ):
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {accuracy}")
        self._env = env
        self._rng = rng
        self.accuracy = float(accuracy)
        self.noise = float(noise)
        space = env.spec.action_space
        if isinstance(space, Box):
            self.bias = np.zeros(space.dim) if bias is None else np.asarray(bias, dtype=np.float64)
            if self.bias.shape != (space.dim,):
                raise ValueError("bias shape must match the action dimension")
        else:
            self.bias = None

    def advise(self, state: np.ndarray, prior_action):
        oracle = self._env.oracle_action(state)
        space = self._env.spec.action_space
        if isinstance(space, Discrete):
            if self._rng.random() < self.accuracy:
                return int(oracle)
            other = int(self._rng.integers(space.n - 1))
            return other if other < int(oracle) else other + 1
        suggestion = oracle + self.bias
        if self.noise > 0.0:
            suggestion = suggestion + self.noise * self._rng.standard_normal(space.dim)
        return space.clip(suggestion)
