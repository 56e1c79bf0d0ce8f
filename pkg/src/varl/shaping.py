"""Gated behavior-cloning policy shaping.

Advisor suggestions enter the actor loss as a weighted negative log-likelihood
term, but each pair is first gated against the agent's own beliefs: a discrete
suggestion that already matches the critic-greedy action contributes nothing,
and a box-action suggestion inside the policy's acceptance ellipsoid (scaled
Mahalanobis distance in pre-squash space) contributes nothing. The whole term
is dropped after a fixed cutoff step, from which point updates are exactly the
baseline ones.

Gates are hard indicators evaluated on the current networks; no gradient flows
through the gate decision, and critics are never touched by any of this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buffers import GuidanceBuffer, GuidancePair
from .nets import add_grads
from .sac import SacAgent


@dataclass(frozen=True)
class ShapingConfig:
    guidance_weight: float = 10.0
    cutoff_step: int = 6000
    acceptance_radius: float = 1.0
    guidance_batch: int = 64

    def __post_init__(self):
        if self.guidance_weight < 0:
            raise ValueError("guidance_weight must be >= 0")
        if self.cutoff_step < 1:
            raise ValueError("cutoff_step must be >= 1")
        if self.acceptance_radius <= 0:
            raise ValueError("acceptance_radius must be > 0")
        if self.guidance_batch < 1:
            raise ValueError("guidance_batch must be >= 1")


@dataclass(frozen=True)
class GateResult:
    active: bool
    greedy_action: int | None = None
    sq_distance: float | None = None


def gate_discrete(agent: SacAgent, state: np.ndarray, advised: int) -> GateResult:
    """Suggestion passes the gate unless it coincides with a critic-greedy
    action; ties count as coincidence, and the reported greedy action is the
    lowest-index maximiser."""
    q = agent.min_q_values(state)[0]
    best = float(q.max())
    active = q[int(advised)] != best
    return GateResult(active=bool(active), greedy_action=int(np.argmax(q)))


def gate_continuous(
    agent: SacAgent, state: np.ndarray, advised_env: np.ndarray, acceptance_radius: float = 1.0
) -> GateResult:
    """Suggestion passes the gate when its scaled distance from the policy
    mean exceeds the acceptance radius; computed in pre-squash space with the
    policy's diagonal covariance."""
    u = agent.presquash(advised_env)[0]
    mu, log_std = agent.gaussian_params(state)
    z = (u - mu[0]) / np.exp(log_std[0])
    sq = float((z * z).sum())
    return GateResult(active=sq > acceptance_radius**2, sq_distance=sq)


def _gate_mask(agent: SacAgent, cfg: ShapingConfig, states: np.ndarray, pairs: list[GuidancePair]):
    """Vectorised gate decisions for a guidance minibatch. For box actions the
    pairs' pre-squash coordinates are computed once and cached on the pair."""
    if agent.is_discrete:
        q = agent.min_q_values(states)
        best = q.max(axis=1, keepdims=True)
        idx = np.array([p.action for p in pairs], dtype=np.int64)
        mask = q[np.arange(len(pairs)), idx] != best[:, 0]
        return mask.astype(np.float64), idx
    for p in pairs:
        if p.presquash is None:
            p.presquash = agent.presquash(p.action)[0]
    u = np.stack([p.presquash for p in pairs])
    mu, log_std = agent.gaussian_params(states)
    z = (u - mu) / np.exp(log_std)
    sq = (z * z).sum(axis=1)
    mask = sq > cfg.acceptance_radius**2
    return mask.astype(np.float64), u


def bc_loss_and_grads(agent: SacAgent, pairs: list[GuidancePair]):
    """Mean negative log-likelihood of the advised actions under the current
    policy, with gradients on the actor only."""
    if not pairs:
        raise ValueError("bc_loss needs a nonempty guidance batch")
    states = np.stack([p.state for p in pairs])
    if agent.is_discrete:
        actions = np.array([p.action for p in pairs], dtype=np.int64)
    else:
        for p in pairs:
            if p.presquash is None:
                p.presquash = agent.presquash(p.action)[0]
        actions = np.stack([p.presquash for p in pairs])
    logp, upstream, cache = agent.neg_logprob_upstream(states, actions)
    b = len(pairs)
    loss = float(-logp.mean())
    grads, _ = agent.actor.backward(cache, upstream / b)
    return loss, grads


def shaping_loss_and_grads(agent: SacAgent, cfg: ShapingConfig, pairs: list[GuidancePair]):
    """Gated, weighted behavior-cloning term over a guidance minibatch.

    loss = guidance_weight * mean_i[ gate_i * (-log pi(a_i|s_i)) ]; inactive
    pairs contribute exactly zero loss and zero gradient.
    """
    if not pairs:
        raise ValueError("shaping_loss needs a nonempty guidance batch")
    states = np.stack([p.state for p in pairs])
    mask, actions = _gate_mask(agent, cfg, states, pairs)
    b = len(pairs)
    stats = {"gate_active_rate": float(mask.mean())}
    if cfg.guidance_weight == 0.0 or not mask.any():
        return 0.0, agent.actor.zero_grads(), stats
    logp, upstream, cache = agent.neg_logprob_upstream(states, actions)
    loss = float(cfg.guidance_weight * np.mean(mask * -logp))
    upstream = upstream * (cfg.guidance_weight * mask / b)[:, None]
    grads, _ = agent.actor.backward(cache, upstream)
    return loss, grads, stats


def actor_update(
    agent: SacAgent,
    cfg: ShapingConfig,
    t: int,
    states: np.ndarray,
    guidance: GuidanceBuffer | None,
    guidance_rng: np.random.Generator | None,
) -> dict:
    """One actor step: baseline policy loss plus, while t <= cutoff_step and
    guidance exists, the gated cloning term on a guidance minibatch.

    Past the cutoff (or with no guidance) this is bit-for-bit the baseline
    update: no guidance is sampled, no rng is consumed, and the baseline
    gradients are applied unmodified.
    """
    base_loss, grads, aux = agent.baseline_policy_loss_and_grads(states)
    stats = {
        "policy_loss": base_loss,
        "shaping_loss": 0.0,
        "gate_active_rate": 0.0,
        "shaping_applied": False,
        "entropy": aux["entropy"],
    }
    if (
        cfg.guidance_weight > 0.0
        and t <= cfg.cutoff_step
        and guidance is not None
        and len(guidance) > 0
    ):
        pairs = guidance.sample(cfg.guidance_batch, guidance_rng)
        ps_loss, ps_grads, gstats = shaping_loss_and_grads(agent, cfg, pairs)
        grads = add_grads(grads, ps_grads)
        stats.update(
            shaping_loss=ps_loss,
            gate_active_rate=gstats["gate_active_rate"],
            shaping_applied=True,
        )
    agent.apply_actor_grads(grads)
    agent.maybe_update_alpha(aux)
    return stats
