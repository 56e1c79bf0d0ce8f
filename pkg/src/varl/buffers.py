"""Experience storage: the transition replay ring and the guidance buffer of
advisor-labelled state/action pairs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spaces import ActionSpace, Box, Discrete


@dataclass(frozen=True, eq=False)
class Transition:
    """One environment step. `done` includes timeouts; `truncated` marks the
    timeout case so TD targets can bootstrap through it."""

    state: np.ndarray
    action: int | np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool
    truncated: bool = False

    @property
    def terminal(self) -> bool:
        return self.done and not self.truncated


@dataclass(eq=False)
class GuidancePair:
    """Advisor-labelled (state, suggested action) pair. `presquash` caches the
    pre-squash coordinates of a continuous action, filled in once by the
    shaping code."""

    state: np.ndarray
    action: int | np.ndarray
    presquash: np.ndarray | None = None


class TransitionBatch:
    """Column view of sampled transitions, stacked for vectorised updates."""

    __slots__ = ("states", "actions", "rewards", "next_states", "terminal")

    def __init__(self, states, actions, rewards, next_states, terminal):
        self.states = states
        self.actions = actions
        self.rewards = rewards
        self.next_states = next_states
        self.terminal = terminal

    def __len__(self) -> int:
        return self.states.shape[0]


def _validate_action(space: ActionSpace | None, action) -> None:
    if space is not None and not space.contains(action):
        raise ValueError(f"action {action!r} outside the action space {space}")


class ReplayBuffer:
    """Fixed-capacity ring of transitions.

    Stored column-wise so minibatch assembly is a fancy-index, but the public
    API speaks Transition objects; insertion order is recoverable for the most
    recent `size` items, including across the wrap boundary.
    """

    def __init__(self, capacity: int, state_dim: int, action_space: ActionSpace | None = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.action_space = action_space
        self._states = np.zeros((capacity, state_dim))
        self._next_states = np.zeros((capacity, state_dim))
        if isinstance(action_space, Box):
            self._actions = np.zeros((capacity, action_space.dim))
        else:
            self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._done = np.zeros(capacity, dtype=bool)
        self._truncated = np.zeros(capacity, dtype=bool)
        self._cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        state = np.asarray(t.state, dtype=np.float64)
        next_state = np.asarray(t.next_state, dtype=np.float64)
        if not (
            np.all(np.isfinite(state))
            and np.all(np.isfinite(next_state))
            and np.isfinite(t.reward)
        ):
            raise ValueError("transition contains non-finite values")
        _validate_action(self.action_space, t.action)
        i = self._cursor
        self._states[i] = state
        self._next_states[i] = next_state
        self._actions[i] = t.action
        self._rewards[i] = t.reward
        self._done[i] = t.done
        self._truncated[i] = t.truncated
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _make(self, i: int) -> Transition:
        action = self._actions[i]
        return Transition(
            state=self._states[i].copy(),
            action=int(action) if action.ndim == 0 else action.copy(),
            reward=float(self._rewards[i]),
            next_state=self._next_states[i].copy(),
            done=bool(self._done[i]),
            truncated=bool(self._truncated[i]),
        )

    def recent(self, k: int) -> list[Transition]:
        """The min(k, size) most recent transitions, newest first."""
        if k < 1:
            raise ValueError("k must be >= 1")
        count = min(k, self.size)
        out = []
        for j in range(count):
            out.append(self._make((self._cursor - 1 - j) % self.capacity))
        return out

    def sample(self, batch: int, rng: np.random.Generator) -> list[Transition]:
        idx = self._sample_indices(batch, rng)
        return [self._make(int(i)) for i in idx]

    def sample_columns(self, batch: int, rng: np.random.Generator) -> TransitionBatch:
        idx = self._sample_indices(batch, rng)
        return TransitionBatch(
            states=self._states[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_states=self._next_states[idx],
            terminal=(self._done[idx] & ~self._truncated[idx]).astype(np.float64),
        )

    def _sample_indices(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        if batch < 1:
            raise ValueError("batch must be >= 1")
        return rng.integers(self.size, size=batch)

    def dump(self, path: str | Path) -> None:
        """Debug dump, oldest first, one JSON record per line."""
        with open(path, "w") as fh:
            for t in reversed(self.recent(self.size)):
                action = t.action if isinstance(t.action, int) else list(np.asarray(t.action))
                fh.write(
                    json.dumps(
                        {
                            "state": list(t.state),
                            "action": action,
                            "reward": t.reward,
                            "next_state": list(t.next_state),
                            "done": t.done,
                            "truncated": t.truncated,
                        }
                    )
                    + "\n"
                )


class GuidanceBuffer:
    """Append-only store of advisor suggestions, sampled uniformly with
    replacement. Rejects actions outside the declared action space."""

    def __init__(self, action_space: ActionSpace, capacity: int | None = None):
        self.action_space = action_space
        self.capacity = capacity
        self._pairs: list[GuidancePair] = []

    def __len__(self) -> int:
        return len(self._pairs)

    def push(self, state: np.ndarray, action) -> None:
        _validate_action(self.action_space, action)
        state = np.asarray(state, dtype=np.float64)
        if not np.all(np.isfinite(state)):
            raise ValueError("guidance state contains non-finite values")
        if isinstance(self.action_space, Discrete):
            action = int(action)
        else:
            action = np.asarray(action, dtype=np.float64).copy()
        self._pairs.append(GuidancePair(state=state.copy(), action=action))
        if self.capacity is not None and len(self._pairs) > self.capacity:
            self._pairs.pop(0)

    def sample(self, batch: int, rng: np.random.Generator) -> list[GuidancePair]:
        if not self._pairs:
            raise ValueError("cannot sample from an empty guidance buffer")
        if batch < 1:
            raise ValueError("batch must be >= 1")
        idx = rng.integers(len(self._pairs), size=batch)
        return [self._pairs[int(i)] for i in idx]

    def pairs(self) -> list[GuidancePair]:
        return list(self._pairs)
