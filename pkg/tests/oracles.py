"""Independent oracles used across the test suite.

These deliberately re-derive expected values through a different path than
the library: straight-line finite differences, tabular value iteration over
re-stated dynamics, and a plain-list replay reference.
"""

from __future__ import annotations

import numpy as np

GRID_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


def finite_difference(loss_fn, theta: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar loss over a flat parameter vector."""
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        plus = theta.copy()
        plus[i] += step
        minus = theta.copy()
        minus[i] -= step
        grad[i] = (loss_fn(plus) - loss_fn(minus)) / (2.0 * step)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    scale = np.maximum.reduce([np.abs(analytic), np.abs(numeric), np.full_like(numeric, floor)])
    return float((np.abs(analytic - numeric) / scale).max())


def gridworld_value_iteration(size: int, gamma: float, tol: float = 1e-12):
    """Tabular Q* over (agent, goal) pairs for the corner-start gridworld,
    with the movement rules restated from scratch: moves clip at walls, the
    goal is absorbing and pays 1 on entry.

    Returns (Q, index) with Q shaped (size^4, 4) and index(r, c, gr, gc).
    """

    def index(r, c, gr, gc):
        return ((r * size + c) * size + gr) * size + gc

    n = size**4
    next_idx = np.zeros((n, 4), dtype=np.int64)
    hit = np.zeros((n, 4))
    for r in range(size):
        for c in range(size):
            for gr in range(size):
                for gc in range(size):
                    i = index(r, c, gr, gc)
                    for a, (dr, dc) in enumerate(GRID_MOVES):
                        nr = min(max(r + dr, 0), size - 1)
                        nc = min(max(c + dc, 0), size - 1)
                        next_idx[i, a] = index(nr, nc, gr, gc)
                        hit[i, a] = float((nr, nc) == (gr, gc))
    Q = np.zeros((n, 4))
    while True:
        V = Q.max(axis=1)
        Qn = hit + gamma * (1.0 - hit) * V[next_idx]
        if np.abs(Qn - Q).max() < tol:
            return Qn, index
        Q = Qn


def tiny_mdp_value_iteration(rewards, gamma: float, tol: float = 1e-13) -> np.ndarray:
    """Q* for the two-state loop where action a moves to state a."""
    r = np.asarray(rewards, dtype=np.float64)
    Q = np.zeros_like(r)
    while True:
        V = Q.max(axis=1)
        Qn = r + gamma * V[None, :].repeat(2, axis=0)  # next state == action index
        if np.abs(Qn - Q).max() < tol:
            return Qn
        Q = Qn


class ShadowReplay:
    """Plain-list reference for the replay ring semantics."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.items: list = []

    def push(self, item) -> None:
        self.items.append(item)
        if len(self.items) > self.capacity:
            self.items.pop(0)

    def recent(self, k: int) -> list:
        return list(reversed(self.items[-k:]))
