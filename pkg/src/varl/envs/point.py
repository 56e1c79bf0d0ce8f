"""Planar continuous-control tasks: reach a target, push a cube to a target."""

from __future__ import annotations

import numpy as np

from ..spaces import Box
from .base import Env, EnvSpec


def _unit_box() -> Box:
    return Box(low=np.array([-1.0, -1.0]), high=np.array([1.0, 1.0]))


class PointReach(Env):
    """Move a point agent to a target in the [-1, 1]^2 workspace. The action
    is a displacement direction; reward 1 is paid only on entering the target
    radius (event reward)."""

    step_scale = 0.1
    goal_radius = 0.1

    def __init__(self, max_episode_steps: int = 50, rng=None):
        super().__init__(rng)
        self._pos = np.zeros(2)
        self._target = np.zeros(2)
        self.spec = EnvSpec(
            name="point_reach",
            state_dim=4,
            action_space=_unit_box(),
            max_episode_steps=max_episode_steps,
            reward_regime="sparse-event",
        )

    def _sample_initial(self) -> np.ndarray:
        self._pos = np.zeros(2)
        while True:
            target = self._rng.uniform(-0.8, 0.8, size=2)
            if np.linalg.norm(target - self._pos) >= 0.3:
                break
        self._target = target
        return np.concatenate([self._pos, self._target])

    def _transition(self, action):
        a = np.asarray(action, dtype=np.float64)
        self._pos = np.clip(self._pos + self.step_scale * a, -1.0, 1.0)
        reached = bool(np.linalg.norm(self._pos - self._target) < self.goal_radius)
        state = np.concatenate([self._pos, self._target])
        return state, float(reached), reached, reached

    def oracle_action(self, state: np.ndarray) -> np.ndarray:
        pos, target = state[:2], state[2:4]
        return np.clip((target - pos) / self.step_scale, -1.0, 1.0)

    def task_text(self) -> str:
        return (
            "Drive a point agent across a square workspace to a target position. "
            "The action is a 2-D displacement direction, scaled by 0.1 per step. "
            f"The episode succeeds when the agent is within {self.goal_radius} of the target."
        )

    def state_text(self, state: np.ndarray) -> str:
        vec = ", ".join(f"{x:.6f}" for x in state)
        return (
            f"agent at ({state[0]:.6f}, {state[1]:.6f}); "
            f"target at ({state[2]:.6f}, {state[3]:.6f}); state vector [{vec}]"
        )


class PointPush(Env):
    """Push a cube to a target. The cube is carried while the agent stays in
    contact. Reward is shaped purely from the cube-to-target distance and is
    bounded to [0, 1]."""

    step_scale = 0.1
    contact_radius = 0.15
    success_radius = 0.1
    max_distance = 2.0 * np.sqrt(2.0)

    def __init__(self, max_episode_steps: int = 80, rng=None):
        super().__init__(rng)
        self._agent = np.zeros(2)
        self._cube = np.zeros(2)
        self._target = np.zeros(2)
        self.spec = EnvSpec(
            name="point_push",
            state_dim=6,
            action_space=_unit_box(),
            max_episode_steps=max_episode_steps,
            reward_regime="distance",
        )

    def _sample_initial(self) -> np.ndarray:
        self._agent = np.zeros(2)
        while True:
            cube = self._rng.uniform(-0.6, 0.6, size=2)
            if np.linalg.norm(cube - self._agent) >= 0.25:
                break
        while True:
            target = self._rng.uniform(-0.7, 0.7, size=2)
            if np.linalg.norm(target - cube) >= 0.3:
                break
        self._cube = cube
        self._target = target
        return np.concatenate([self._agent, self._cube, self._target])

    def reward_from_distance(self, distance: float) -> float:
        return 1.0 - min(max(distance / self.max_distance, 0.0), 1.0)

    def _transition(self, action):
        a = np.asarray(action, dtype=np.float64)
        carrying = np.linalg.norm(self._agent - self._cube) < self.contact_radius
        new_agent = np.clip(self._agent + self.step_scale * a, -1.0, 1.0)
        if carrying:
            self._cube = np.clip(self._cube + (new_agent - self._agent), -1.0, 1.0)
        self._agent = new_agent
        dist = float(np.linalg.norm(self._cube - self._target))
        reached = dist < self.success_radius
        state = np.concatenate([self._agent, self._cube, self._target])
        return state, self.reward_from_distance(dist), reached, reached

    def oracle_action(self, state: np.ndarray) -> np.ndarray:
        agent, cube, target = state[:2], state[2:4], state[4:6]
        if np.linalg.norm(agent - cube) >= self.contact_radius:
            direction = cube - agent
        else:
            direction = target - cube
        return np.clip(direction / self.step_scale, -1.0, 1.0)

    def task_text(self) -> str:
        return (
            "Push a cube to a target position in a square workspace. The cube "
            "moves with the agent while the agent is in contact with it. The "
            "action is a 2-D displacement direction, scaled by 0.1 per step. "
            "Reward grows as the cube-to-target distance shrinks."
        )

    def state_text(self, state: np.ndarray) -> str:
        vec = ", ".join(f"{x:.6f}" for x in state)
        return (
            f"agent at ({state[0]:.6f}, {state[1]:.6f}); "
            f"cube at ({state[2]:.6f}, {state[3]:.6f}); "
            f"target at ({state[4]:.6f}, {state[5]:.6f}); state vector [{vec}]"
        )
