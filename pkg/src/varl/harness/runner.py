"""Seeded training runs wiring environments, agent, shaping and advisors.

Per-purpose rng streams are spawned from the seed so that code paths which
never fire (advisor queries, guidance sampling) consume nothing from the
shared streams: a guided run with an empty trigger schedule is step-for-step
identical to the plain baseline at the same seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import shaping as shaping_mod
from ..advisor import QueryLedger, RemoteAdvisor, ScriptedAdvisor, TriggerSchedule, run_trigger
from ..buffers import GuidanceBuffer, ReplayBuffer, Transition
from ..envs import make_env
from ..sac import SacAgent
from .config import API_KEY_ENV_VAR, ExperimentConfig, expand_sweep

_STREAMS = ("env", "agent", "replay", "guidance", "advisor", "warmup", "prefill")


def spawn_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(_STREAMS, children)}


@dataclass
class RunResult:
    seed: int
    records: list[dict]
    ledger: dict
    run_dir: Path
    final_agent: SacAgent


def build_agent(cfg: ExperimentConfig, state_dim: int, action_space, rng) -> SacAgent:
    a = cfg.agent
    return SacAgent(
        state_dim=state_dim,
        action_space=action_space,
        hidden_sizes=tuple(a.hidden_sizes),
        activation=a.activation,
        lr=a.lr,
        gamma=a.gamma,
        tau=a.tau,
        alpha=a.alpha,
        auto_alpha=a.auto_alpha,
        batch_size=a.batch_size,
        log_std_bounds=tuple(a.log_std_bounds),
        rng=rng,
    )


def build_advisor(cfg: ExperimentConfig, env, rng):
    adv = cfg.advisor
    if adv.mode == "scripted":
        return ScriptedAdvisor(
            env, rng, accuracy=adv.accuracy, bias=adv.bias, noise=adv.noise
        )
    import os

    return RemoteAdvisor(
        env,
        endpoint=adv.resolved_endpoint(),
        timeout=adv.timeout,
        retries=adv.retries,
        parallelism=adv.parallelism,
        api_key=os.environ.get(API_KEY_ENV_VAR),
        api_key_header=adv.api_key_header,
    )


def resolve_trigger_schedule(cfg: ExperimentConfig) -> TriggerSchedule:
    tr = cfg.trigger
    if tr.steps is not None:
        if not tr.steps:
            return TriggerSchedule(steps=(), recent_k=tr.recent_k)
        return TriggerSchedule(steps=tuple(tr.steps), recent_k=tr.recent_k)
    return TriggerSchedule.from_fractions(
        cutoff_step=cfg.shaping.cutoff_step,
        recent_k=tr.recent_k,
        fractions=tuple(tr.fractions),
    )


def prefill_expert(replay: ReplayBuffer, env, n_episodes: int, base_seed: int) -> int:
    """Roll the environment oracle for n episodes and push every transition
    into the replay buffer; returns the number of transitions added."""
    added = 0
    for ep in range(n_episodes):
        state = env.reset(seed=base_seed + ep)
        done = False
        while not done:
            action = env.oracle_action(state)
            res = env.step(action)
            replay.push(
                Transition(state, action, res.reward, res.next_state, res.done, res.truncated)
            )
            added += 1
            state = res.next_state
            done = res.done
    return added


def eval_seed_for(seed: int, eval_index: int, episode: int) -> int:
    return (seed * 1_000_003 + eval_index * 1_009 + episode) % (2**31 - 1)


def evaluate(
    agent: SacAgent,
    env_name: str,
    episodes: int,
    seed: int,
    eval_index: int,
    env_kwargs: dict | None = None,
) -> dict:
    """Deterministic-policy rollouts on a fresh environment instance."""
    env = make_env(env_name, **(env_kwargs or {}))
    returns = np.zeros(episodes)
    successes = np.zeros(episodes)
    visited: list[np.ndarray] = []
    for ep in range(episodes):
        state = env.reset(seed=eval_seed_for(seed, eval_index, ep))
        done = False
        while not done:
            visited.append(state)
            action = agent.act(state, deterministic=True)
            res = env.step(action)
            returns[ep] += res.reward
            successes[ep] = max(successes[ep], float(res.success))
            state = res.next_state
            done = res.done
    entropy = float(agent.entropy(np.stack(visited)).mean()) if visited else 0.0
    return {
        "mean_return": float(returns.mean()),
        "success_rate": float(successes.mean()),
        "policy_entropy": entropy,
    }


def run_single_seed(cfg: ExperimentConfig, seed: int, run_dir: str | Path) -> RunResult:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    streams = spawn_streams(seed)
    env = make_env(cfg.env, rng=streams["env"], **cfg.env_kwargs)
    spec = env.spec
    agent = build_agent(cfg, spec.state_dim, spec.action_space, streams["agent"])
    replay = ReplayBuffer(cfg.replay_capacity, spec.state_dim, spec.action_space)
    guidance = GuidanceBuffer(spec.action_space)
    shaping_cfg = cfg.shaping.to_shaping_config()
    ledger = QueryLedger()

    is_guided = cfg.algo == "varl"
    advisor = build_advisor(cfg, env, streams["advisor"]) if is_guided else None
    schedule = resolve_trigger_schedule(cfg) if is_guided else None

    if cfg.algo == "sac_expert_prefill" and cfg.expert_episodes > 0:
        prefill_env = make_env(cfg.env, rng=streams["prefill"], **cfg.env_kwargs)
        prefill_expert(replay, prefill_env, cfg.expert_episodes, base_seed=seed * 7919)

    records: list[dict] = []
    update_stats: list[dict] = []
    start = time.monotonic()
    metrics_path = run_dir / "metrics.jsonl"
    state = env.reset()
    with open(metrics_path, "w") as metrics_file:
        for t in range(1, cfg.max_steps + 1):
            if t <= cfg.warmup_steps:
                action = spec.action_space.sample(streams["warmup"])
            else:
                action = agent.act(state)
            res = env.step(action)
            replay.push(
                Transition(state, action, res.reward, res.next_state, res.done, res.truncated)
            )
            if is_guided:
                run_trigger(schedule, t, replay, advisor, guidance, ledger)
            if t > cfg.warmup_steps and len(replay) >= cfg.agent.batch_size:
                batch = replay.sample_columns(cfg.agent.batch_size, streams["replay"])
                agent.critic_update(batch)
                stats = shaping_mod.actor_update(
                    agent, shaping_cfg, t, batch.states, guidance, streams["guidance"]
                )
                update_stats.append(stats)
            state = res.next_state if not res.done else env.reset()

            if t % cfg.eval_every == 0:
                record = evaluate(
                    agent, cfg.env, cfg.eval_episodes, seed, t // cfg.eval_every, cfg.env_kwargs
                )
                record["step"] = t
                if update_stats:
                    record["gate_active_rate"] = float(
                        np.mean([s["gate_active_rate"] for s in update_stats])
                    )
                    record["shaping_loss"] = float(
                        np.mean([s["shaping_loss"] for s in update_stats])
                    )
                else:
                    record["gate_active_rate"] = 0.0
                    record["shaping_loss"] = 0.0
                record["advisor_batches"] = len(ledger.batch_sizes)
                record["advisor_queries"] = ledger.total_queries
                record["guidance_pairs"] = ledger.pairs_added
                record["wall_clock_s"] = time.monotonic() - start
                records.append(record)
                metrics_file.write(json.dumps(record) + "\n")
                update_stats = []

    agent.save(run_dir / "agent_final.npz")
    with open(run_dir / "ledger.json", "w") as fh:
        json.dump(ledger.report(), fh, indent=2)
    return RunResult(
        seed=seed, records=records, ledger=ledger.report(), run_dir=run_dir, final_agent=agent
    )


def run_experiment(cfg: ExperimentConfig, echo=None) -> list[RunResult]:
    """Execute all seeds for every sweep point; archives the resolved config
    per run directory. Returns the per-seed results of the last sweep point
    (runs write all artifacts to disk regardless)."""
    results: list[RunResult] = []
    for label, sub in expand_sweep(cfg):
        out = Path(sub.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "config.json", "w") as fh:
            json.dump(sub.to_dict(), fh, indent=2)
        results = []
        for seed in sub.seeds:
            if echo:
                echo(f"[{sub.algo} on {sub.env}{' ' + label if label else ''}] seed {seed} ...")
            result = run_single_seed(sub, seed, out / f"seed{seed}")
            results.append(result)
            if echo:
                last = result.records[-1] if result.records else {}
                echo(
                    f"  done: success_rate={last.get('success_rate', float('nan')):.2f} "
                    f"return={last.get('mean_return', float('nan')):.3f} "
                    f"pairs={result.ledger['pairs_added']}"
                )
    return results
