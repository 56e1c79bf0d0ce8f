"""Soft actor-critic over the dense-network stack, for both finite action
sets and box actions.

Twin critics are combined with a pointwise minimum everywhere a Q-value is
consumed. The discrete actor outputs logits over all actions and its loss is
the exact expectation over the action set; the box actor outputs a diagonal
Gaussian (mean and log-std head) squashed through tanh and scaled into the
action box, trained with one reparameterised sample per state. All gradients
are computed analytically and checked against finite differences in the test
suite.
"""

from __future__ import annotations

import numpy as np

from . import checkpoint as ckpt
from .buffers import TransitionBatch
from .nets import Adam, DenseNet, Grads, polyak_update
from .spaces import ActionSpace, Box, Discrete

LOG_2PI = np.log(2.0 * np.pi)


def softmax_rows(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable row softmax; returns (probs, log_probs)."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsum
    return np.exp(logp), logp


def log1m_tanh_sq(u: np.ndarray) -> np.ndarray:
    """log(1 - tanh(u)^2), computed without catastrophic cancellation."""
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


class SacAgent:
    def __init__(
        self,
        state_dim: int,
        action_space: ActionSpace,
        hidden_sizes: tuple[int, ...] = (64, 64),
        activation: str = "tanh",
        lr: float = 3e-4,
        gamma: float = 0.99,
        tau: float = 0.005,
        alpha: float = 0.2,
        auto_alpha: bool = False,
        target_entropy: float | None = None,
        batch_size: int = 128,
        log_std_bounds: tuple[float, float] = (-5.0, 2.0),
        rng: np.random.Generator | None = None,
    ):
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {gamma}")
        self.state_dim = int(state_dim)
        self.action_space = action_space
        self.is_discrete = isinstance(action_space, Discrete)
        self.gamma = float(gamma)
        self.tau = float(tau)
        self.batch_size = int(batch_size)
        self.log_std_bounds = (float(log_std_bounds[0]), float(log_std_bounds[1]))
        self.auto_alpha = bool(auto_alpha)
        self._log_alpha = float(np.log(max(alpha, 1e-8)))
        self._fixed_alpha = float(alpha)
        self._alpha_m = 0.0
        self._alpha_v = 0.0
        self._alpha_t = 0
        self._alpha_lr = float(lr)
        self._rng = rng if rng is not None else np.random.default_rng()
        self.squash_clamp_count = 0

        hs = tuple(int(h) for h in hidden_sizes)
        if self.is_discrete:
            n = action_space.n
            self.n_actions = n
            actor_sizes = [state_dim, *hs, n]
            critic_sizes = [state_dim, *hs, n]
            self.target_entropy = (
                0.5 * np.log(n) if target_entropy is None else float(target_entropy)
            )
        else:
            adim = action_space.dim
            self.action_dim = adim
            self._center = (action_space.high + action_space.low) / 2.0
            self._scale = (action_space.high - action_space.low) / 2.0
            actor_sizes = [state_dim, *hs, 2 * adim]
            critic_sizes = [state_dim + adim, *hs, 1]
            self.target_entropy = (
                -float(adim) if target_entropy is None else float(target_entropy)
            )

        self.actor = DenseNet(actor_sizes, activation, self._rng)
        self.critic1 = DenseNet(critic_sizes, activation, self._rng)
        self.critic2 = DenseNet(critic_sizes, activation, self._rng)
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy()
        self.actor_opt = Adam(self.actor, lr=lr)
        self.critic1_opt = Adam(self.critic1, lr=lr)
        self.critic2_opt = Adam(self.critic2, lr=lr)
        self._config = {
            "state_dim": state_dim,
            "hidden_sizes": list(hs),
            "activation": activation,
            "lr": lr,
            "gamma": gamma,
            "tau": tau,
            "alpha": alpha,
            "auto_alpha": auto_alpha,
            "target_entropy": self.target_entropy,
            "batch_size": batch_size,
            "log_std_bounds": list(self.log_std_bounds),
        }

    # -- temperature -----------------------------------------------------------

    @property
    def alpha(self) -> float:
        return float(np.exp(self._log_alpha)) if self.auto_alpha else self._fixed_alpha

    def _alpha_step(self, entropy_estimate: float) -> None:
        # scalar adaptive-moment step on log(alpha) toward the entropy target
        g = entropy_estimate - self.target_entropy
        self._alpha_t += 1
        self._alpha_m = 0.9 * self._alpha_m + 0.1 * g
        self._alpha_v = 0.999 * self._alpha_v + 0.001 * g * g
        mhat = self._alpha_m / (1.0 - 0.9**self._alpha_t)
        vhat = self._alpha_v / (1.0 - 0.999**self._alpha_t)
        self._log_alpha -= self._alpha_lr * mhat / (np.sqrt(vhat) + 1e-8)

    def maybe_update_alpha(self, aux: dict) -> None:
        if self.auto_alpha:
            self._alpha_step(aux["entropy"])

    # -- policy heads ------------------------------------------------------------

    def _policy_discrete(self, states: np.ndarray):
        logits, cache = self.actor.forward_cached(states)
        probs, logp = softmax_rows(logits)
        return probs, logp, cache

    def _gaussian(self, states: np.ndarray):
        """Mean/log-std head with hard log-std clamping; `mask` is 1 where the
        clamp is inactive so gradients stop at saturated log-std outputs."""
        out, cache = self.actor.forward_cached(states)
        d = self.action_dim
        mu = out[:, :d]
        raw = out[:, d:]
        lo, hi = self.log_std_bounds
        log_std = np.clip(raw, lo, hi)
        mask = ((raw > lo) & (raw < hi)).astype(np.float64)
        return mu, log_std, mask, cache

    def action_probs(self, states: np.ndarray) -> np.ndarray:
        probs, _, _ = self._policy_discrete(np.atleast_2d(np.asarray(states, dtype=np.float64)))
        return probs

    def gaussian_params(self, states: np.ndarray):
        mu, log_std, _, _ = self._gaussian(np.atleast_2d(np.asarray(states, dtype=np.float64)))
        return mu, log_std

    def presquash(self, actions_env: np.ndarray) -> np.ndarray:
        """Map box actions to pre-squash coordinates, clamping into the open
        interval when an action sits on the box boundary."""
        a = np.atleast_2d(np.asarray(actions_env, dtype=np.float64))
        t = (a - self._center) / self._scale
        margin = 1.0 - 1e-6
        clipped = np.clip(t, -margin, margin)
        self.squash_clamp_count += int(np.sum(np.abs(t) >= margin))
        return np.arctanh(clipped)

    def _squash(self, u: np.ndarray) -> np.ndarray:
        return self._center + self._scale * np.tanh(u)

    def sample_with_logprob(self, states: np.ndarray, rng: np.random.Generator):
        """One reparameterised sample per state plus its squashed log-density."""
        mu, log_std, _, _ = self._gaussian(states)
        sigma = np.exp(log_std)
        eps = rng.standard_normal(mu.shape)
        u = mu + sigma * eps
        t = np.tanh(u)
        logp = (
            -0.5 * eps * eps - log_std - 0.5 * LOG_2PI - log1m_tanh_sq(u) - np.log(self._scale)
        ).sum(axis=1)
        return self._center + self._scale * t, logp

    def log_prob(self, states: np.ndarray, actions) -> np.ndarray:
        """log pi(a|s) for given env-space actions (batched)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        if self.is_discrete:
            _, logp, _ = self._policy_discrete(states)
            idx = np.asarray(actions, dtype=np.int64).reshape(-1)
            return logp[np.arange(states.shape[0]), idx]
        u = self.presquash(actions)
        mu, log_std, _, _ = self._gaussian(states)
        sigma = np.exp(log_std)
        z = (u - mu) / sigma
        return (
            -0.5 * z * z - log_std - 0.5 * LOG_2PI - log1m_tanh_sq(u) - np.log(self._scale)
        ).sum(axis=1)

    def entropy(self, states: np.ndarray) -> np.ndarray:
        """Policy entropy per state (exact for discrete; pre-squash Gaussian
        differential entropy for box actions — a diagnostic, not a loss)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        if self.is_discrete:
            probs, logp, _ = self._policy_discrete(states)
            return -(probs * logp).sum(axis=1)
        _, log_std, _, _ = self._gaussian(states)
        return (log_std + 0.5 * (LOG_2PI + 1.0)).sum(axis=1)

    # -- acting ------------------------------------------------------------------

    def act(self, state: np.ndarray, deterministic: bool = False):
        s = np.asarray(state, dtype=np.float64)[None, :]
        if self.is_discrete:
            probs, _, _ = self._policy_discrete(s)
            if deterministic:
                return int(np.argmax(probs[0]))
            return int(self._rng.choice(self.n_actions, p=probs[0]))
        mu, log_std, _, _ = self._gaussian(s)
        if deterministic:
            return self._squash(mu)[0]
        u = mu + np.exp(log_std) * self._rng.standard_normal(mu.shape)
        return self._squash(u)[0]

    # -- critic values -------------------------------------------------------------

    def min_q(self, state: np.ndarray, action) -> float:
        """min over the twin critics for a single (state, action) pair."""
        s = np.asarray(state, dtype=np.float64)
        if self.is_discrete:
            a = int(action)
            return float(min(self.critic1.forward(s)[a], self.critic2.forward(s)[a]))
        x = np.concatenate([s, np.asarray(action, dtype=np.float64)])
        return float(min(self.critic1.forward(x)[0], self.critic2.forward(x)[0]))

    def min_q_values(self, states: np.ndarray) -> np.ndarray:
        """Discrete only: (B, n) min-critic values for every action."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        return np.minimum(self.critic1.forward(states), self.critic2.forward(states))

    def min_q_sa(self, states: np.ndarray, actions) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        if self.is_discrete:
            idx = np.asarray(actions, dtype=np.int64).reshape(-1)
            return self.min_q_values(states)[np.arange(states.shape[0]), idx]
        x = np.concatenate([states, np.atleast_2d(np.asarray(actions, dtype=np.float64))], axis=1)
        return np.minimum(self.critic1.forward(x), self.critic2.forward(x))[:, 0]

    # -- critic update ---------------------------------------------------------------

    def critic_update(self, batch: TransitionBatch) -> dict:
        """One soft TD step on both critics followed by a Polyak target blend.
        Timeout transitions bootstrap (only true terminations cut the tail)."""
        if self.is_discrete:
            return self._critic_update_discrete(batch)
        return self._critic_update_continuous(batch)

    def _td_target(self, batch: TransitionBatch, next_value: np.ndarray) -> np.ndarray:
        y = batch.rewards + self.gamma * (1.0 - batch.terminal) * next_value
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(
                f"non-finite TD target (reward range [{batch.rewards.min()}, "
                f"{batch.rewards.max()}], next value range [{next_value.min()}, {next_value.max()}])"
            )
        return y

    def _critic_step(self, critic: DenseNet, opt: Adam, x: np.ndarray, upstream_fn) -> float:
        out, cache = critic.forward_cached(x)
        loss, upstream = upstream_fn(out)
        grads, _ = critic.backward(cache, upstream)
        opt.step(critic, grads)
        return loss

    def _critic_update_discrete(self, batch: TransitionBatch) -> dict:
        b = len(batch)
        probs2, logp2, _ = self._policy_discrete(batch.next_states)
        q_next = np.minimum(self.target1.forward(batch.next_states),
                            self.target2.forward(batch.next_states))
        v_next = (probs2 * (q_next - self.alpha * logp2)).sum(axis=1)
        y = self._td_target(batch, v_next)
        rows = np.arange(b)
        acts = batch.actions.astype(np.int64)

        losses = []
        for critic, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            def upstream_fn(out):
                diff = out[rows, acts] - y
                upstream = np.zeros_like(out)
                upstream[rows, acts] = 2.0 * diff / b
                return float(np.mean(diff * diff)), upstream

            losses.append(self._critic_step(critic, opt, batch.states, upstream_fn))
        polyak_update(self.target1, self.critic1, self.tau)
        polyak_update(self.target2, self.critic2, self.tau)
        return {"critic1_loss": losses[0], "critic2_loss": losses[1], "target_mean": float(y.mean())}

    def _critic_update_continuous(self, batch: TransitionBatch) -> dict:
        b = len(batch)
        a2, logp2 = self.sample_with_logprob(batch.next_states, self._rng)
        x2 = np.concatenate([batch.next_states, a2], axis=1)
        q_next = np.minimum(self.target1.forward(x2), self.target2.forward(x2))[:, 0]
        y = self._td_target(batch, q_next - self.alpha * logp2)
        x = np.concatenate([batch.states, batch.actions], axis=1)

        losses = []
        for critic, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            def upstream_fn(out):
                diff = out[:, 0] - y
                return float(np.mean(diff * diff)), (2.0 * diff / b)[:, None]

            losses.append(self._critic_step(critic, opt, x, upstream_fn))
        polyak_update(self.target1, self.critic1, self.tau)
        polyak_update(self.target2, self.critic2, self.tau)
        return {"critic1_loss": losses[0], "critic2_loss": losses[1], "target_mean": float(y.mean())}

    # -- actor loss --------------------------------------------------------------------

    def baseline_policy_loss_and_grads(self, states: np.ndarray):
        """Loss and actor-parameter gradients for the entropy-regularised
        policy objective; critics contribute values (and, for box actions,
        action gradients) but are never modified."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        if self.is_discrete:
            return self._baseline_loss_discrete(states)
        return self._baseline_loss_continuous(states)

    def _baseline_loss_discrete(self, states: np.ndarray):
        b = states.shape[0]
        probs, logp, cache = self._policy_discrete(states)
        q = self.min_q_values(states)
        f = self.alpha * logp - q
        per_state = (probs * f).sum(axis=1)
        loss = float(per_state.mean())
        upstream = probs * (f - per_state[:, None]) / b
        grads, _ = self.actor.backward(cache, upstream)
        entropy = float(-(probs * logp).sum(axis=1).mean())
        return loss, grads, {"entropy": entropy}

    def _baseline_loss_continuous(self, states: np.ndarray):
        b = states.shape[0]
        mu, log_std, clamp_mask, cache = self._gaussian(states)
        sigma = np.exp(log_std)
        eps = self._rng.standard_normal(mu.shape)
        u = mu + sigma * eps
        t = np.tanh(u)
        a_env = self._center + self._scale * t
        logp = (
            -0.5 * eps * eps - log_std - 0.5 * LOG_2PI - log1m_tanh_sq(u) - np.log(self._scale)
        ).sum(axis=1)

        x = np.concatenate([states, a_env], axis=1)
        q1, cache1 = self.critic1.forward_cached(x)
        q2, cache2 = self.critic2.forward_cached(x)
        use1 = q1[:, 0] <= q2[:, 0]
        q_min = np.where(use1, q1[:, 0], q2[:, 0])
        loss = float(np.mean(self.alpha * logp - q_min))

        # d(mean -q_min)/d(action): route through whichever critic is the min;
        # parameter gradients of the critics are discarded on purpose.
        up1 = np.where(use1, -1.0 / b, 0.0)[:, None]
        up2 = np.where(use1, 0.0, -1.0 / b)[:, None]
        _, dx1 = self.critic1.backward(cache1, up1)
        _, dx2 = self.critic2.backward(cache2, up2)
        g_action = (dx1 + dx2)[:, self.state_dim :]

        one_m_t2 = 1.0 - t * t
        chain = g_action * self._scale * one_m_t2
        d_mu = (self.alpha / b) * (2.0 * t) + chain
        d_ls = ((self.alpha / b) * (-1.0 + 2.0 * t * sigma * eps) + chain * sigma * eps) * clamp_mask
        upstream = np.concatenate([d_mu, d_ls], axis=1)
        grads, _ = self.actor.backward(cache, upstream)
        return loss, grads, {"entropy": float(-logp.mean())}

    def neg_logprob_upstream(self, states: np.ndarray, actions):
        """Per-pair log pi(a|s) plus the upstream gradient of -log pi(a_i|s_i)
        with respect to the actor output row i (unscaled; callers weight rows
        and divide by their batch size), plus the forward cache."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        if self.is_discrete:
            probs, logp, cache = self._policy_discrete(states)
            idx = np.asarray(actions, dtype=np.int64).reshape(-1)
            rows = np.arange(states.shape[0])
            upstream = probs.copy()
            upstream[rows, idx] -= 1.0
            return logp[rows, idx], upstream, cache
        u = actions  # callers pass pre-squash coordinates for box actions
        mu, log_std, clamp_mask, cache = self._gaussian(states)
        sigma = np.exp(log_std)
        z = (u - mu) / sigma
        logp = (
            -0.5 * z * z - log_std - 0.5 * LOG_2PI - log1m_tanh_sq(u) - np.log(self._scale)
        ).sum(axis=1)
        d_mu = -z / sigma
        d_ls = (1.0 - z * z) * clamp_mask
        upstream = np.concatenate([d_mu, d_ls], axis=1)
        return logp, upstream, cache

    def apply_actor_grads(self, grads: Grads) -> None:
        self.actor_opt.step(self.actor, grads)

    # -- persistence --------------------------------------------------------------------

    def save(self, path) -> None:
        arrays: dict[str, np.ndarray] = {}
        arrays.update(self.actor.param_arrays("actor/"))
        arrays.update(self.critic1.param_arrays("critic1/"))
        arrays.update(self.critic2.param_arrays("critic2/"))
        arrays.update(self.target1.param_arrays("target1/"))
        arrays.update(self.target2.param_arrays("target2/"))
        arrays.update(self.actor_opt.state_arrays("opt/actor/"))
        arrays.update(self.critic1_opt.state_arrays("opt/critic1/"))
        arrays.update(self.critic2_opt.state_arrays("opt/critic2/"))
        arrays["log_alpha"] = np.array(self._log_alpha)
        if isinstance(self.action_space, Discrete):
            space_meta = {
                "type": "discrete",
                "n": self.action_space.n,
                "labels": list(self.action_space.labels),
            }
        else:
            space_meta = {
                "type": "box",
                "low": list(self.action_space.low),
                "high": list(self.action_space.high),
            }
        ckpt.save_checkpoint(path, arrays, {"agent": self._config, "action_space": space_meta})

    @classmethod
    def load(cls, path, rng: np.random.Generator | None = None) -> "SacAgent":
        arrays, meta = ckpt.load_checkpoint(path)
        cfg = meta["agent"]
        sm = meta["action_space"]
        if sm["type"] == "discrete":
            space: ActionSpace = Discrete(sm["n"], labels=tuple(sm["labels"]))
        else:
            space = Box(low=np.array(sm["low"]), high=np.array(sm["high"]))
        agent = cls(
            state_dim=cfg["state_dim"],
            action_space=space,
            hidden_sizes=tuple(cfg["hidden_sizes"]),
            activation=cfg["activation"],
            lr=cfg["lr"],
            gamma=cfg["gamma"],
            tau=cfg["tau"],
            alpha=cfg["alpha"],
            auto_alpha=cfg["auto_alpha"],
            target_entropy=cfg["target_entropy"],
            batch_size=cfg["batch_size"],
            log_std_bounds=tuple(cfg["log_std_bounds"]),
            rng=rng,
        )
        agent.actor.load_param_arrays(arrays, "actor/")
        agent.critic1.load_param_arrays(arrays, "critic1/")
        agent.critic2.load_param_arrays(arrays, "critic2/")
        agent.target1.load_param_arrays(arrays, "target1/")
        agent.target2.load_param_arrays(arrays, "target2/")
        agent.actor_opt.load_state_arrays(arrays, "opt/actor/")
        agent.critic1_opt.load_state_arrays(arrays, "opt/critic1/")
        agent.critic2_opt.load_state_arrays(arrays, "opt/critic2/")
        agent._log_alpha = float(arrays["log_alpha"])
        return agent

    def clone(self) -> "SacAgent":
        """Deep copy sharing no arrays; the clone's rng continues from the
        same state, so identical call sequences stay identical."""
        import copy as _copy

        return _copy.deepcopy(self)
