"""Desk-scale environments, selectable by name."""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec, StepResult
from .gridworld import ChainMDP, SparseGridWorld
from .point import PointPush, PointReach
from .tiny import TinyMDP

ENV_REGISTRY = {
    "sparse_gridworld": SparseGridWorld,
    "chain": ChainMDP,
    "point_reach": PointReach,
    "point_push": PointPush,
    "tiny_mdp": TinyMDP,
}


def make_env(name: str, rng: np.random.Generator | None = None, **kwargs) -> Env:
    if name not in ENV_REGISTRY:
        known = ", ".join(sorted(ENV_REGISTRY))
        raise ValueError(f"unknown environment {name!r}; known: {known}")
    return ENV_REGISTRY[name](rng=rng, **kwargs)


__all__ = [
    "Env",
    "EnvSpec",
    "StepResult",
    "SparseGridWorld",
    "ChainMDP",
    "PointReach",
    "PointPush",
    "TinyMDP",
    "ENV_REGISTRY",
    "make_env",
]
