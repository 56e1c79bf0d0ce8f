"""Aggregation of finished runs: windowed learning curves with cross-seed
mean and one-standard-deviation bands, a steps-to-threshold scalar per seed,
and the advisor query-budget report."""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

from ..envs import make_env

DEFAULT_WINDOW = 10
SUCCESS_THRESHOLD = 0.9
RETURN_FRACTION = 0.9


def trailing_moving_average(values, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Mean over the trailing `window` points (shorter at the start)."""
    values = np.asarray(values, dtype=np.float64)
    out = np.empty_like(values)
    csum = np.cumsum(values)
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out[i] = (csum[i] - (csum[lo - 1] if lo > 0 else 0.0)) / (i - lo + 1)
    return out


def load_seed_records(run_dir: str | Path) -> dict[int, list[dict]]:
    run_dir = Path(run_dir)
    out: dict[int, list[dict]] = {}
    for seed_dir in sorted(run_dir.glob("seed*")):
        try:
            seed = int(seed_dir.name.removeprefix("seed"))
        except ValueError:
            continue
        metrics = seed_dir / "metrics.jsonl"
        if not metrics.exists():
            continue
        with open(metrics) as fh:
            out[seed] = [json.loads(line) for line in fh if line.strip()]
    if not out:
        raise FileNotFoundError(f"no seed metrics found under {run_dir}")
    return out


def load_run_config(run_dir: str | Path) -> dict:
    with open(Path(run_dir) / "config.json") as fh:
        return json.load(fh)


def align_to_coarsest_grid(per_seed: dict[int, list[dict]]) -> tuple[np.ndarray, dict[int, list[dict]]]:
    """All seeds of a run normally share the eval grid; if they do not,
    resample every seed onto the coarsest grid (the one with fewest points)
    by taking the latest record at or before each grid step."""
    grids = {seed: [r["step"] for r in recs] for seed, recs in per_seed.items()}
    reference = min(grids.values(), key=len)
    if all(g == reference for g in grids.values()):
        return np.array(reference), per_seed
    warnings.warn("eval grids differ across seeds; resampling to the coarsest grid")
    aligned: dict[int, list[dict]] = {}
    for seed, recs in per_seed.items():
        picked = []
        for step in reference:
            candidates = [r for r in recs if r["step"] <= step]
            picked.append(candidates[-1] if candidates else recs[0])
        aligned[seed] = picked
    return np.array(reference), aligned


def oracle_mean_return(
    env_name: str, episodes: int = 10, base_seed: int = 0, env_kwargs: dict | None = None
) -> float:
    env = make_env(env_name, **(env_kwargs or {}))
    totals = []
    for ep in range(episodes):
        state = env.reset(seed=base_seed + ep)
        total, done = 0.0, False
        while not done:
            res = env.step(env.oracle_action(state))
            total += res.reward
            state = res.next_state
            done = res.done
        totals.append(total)
    return float(np.mean(totals))


def steps_to_threshold(
    steps: np.ndarray,
    success_ma: np.ndarray,
    return_ma: np.ndarray,
    reward_regime: str,
    oracle_return: float,
) -> int | None:
    """First eval step where the windowed success rate reaches 0.9 (event
    tasks) or the windowed return reaches 0.9x the oracle return (distance
    and dense tasks); None when never reached."""
    if reward_regime == "sparse-event":
        hits = np.nonzero(success_ma >= SUCCESS_THRESHOLD)[0]
    else:
        hits = np.nonzero(return_ma >= RETURN_FRACTION * oracle_return)[0]
    return int(steps[hits[0]]) if hits.size else None


def summarize(run_dir: str | Path, window: int = DEFAULT_WINDOW, write: bool = True) -> dict:
    """Aggregate one run directory (all seeds) into summary.json plus one
    curve file per metric with mean and one-standard-deviation columns."""
    run_dir = Path(run_dir)
    config = load_run_config(run_dir)
    per_seed = load_seed_records(run_dir)
    steps, per_seed = align_to_coarsest_grid(per_seed)
    env_kwargs = config.get("env_kwargs", {})
    regime = make_env(config["env"], **env_kwargs).spec.reward_regime
    oracle_ret = oracle_mean_return(
        config["env"], episodes=config.get("eval_episodes", 10), env_kwargs=env_kwargs
    )

    success_mas, return_mas, per_seed_summary = {}, {}, {}
    for seed, recs in per_seed.items():
        s_ma = trailing_moving_average([r["success_rate"] for r in recs], window)
        r_ma = trailing_moving_average([r["mean_return"] for r in recs], window)
        success_mas[seed] = s_ma
        return_mas[seed] = r_ma
        per_seed_summary[str(seed)] = {
            "steps_to_threshold": steps_to_threshold(steps, s_ma, r_ma, regime, oracle_ret),
            "final_success_ma": float(s_ma[-1]),
            "final_return_ma": float(r_ma[-1]),
        }

    reached = [v["steps_to_threshold"] for v in per_seed_summary.values()]
    finite = [v for v in reached if v is not None]
    # failed seeds count as +inf when taking the median
    padded = [float("inf") if v is None else float(v) for v in reached]
    median = float(np.median(padded)) if padded else None

    summary = {
        "env": config["env"],
        "algo": config["algo"],
        "reward_regime": regime,
        "seeds": sorted(per_seed),
        "window": window,
        "oracle_return": oracle_ret,
        "success_threshold": SUCCESS_THRESHOLD,
        "return_threshold": RETURN_FRACTION * oracle_ret,
        "per_seed": per_seed_summary,
        "threshold_reached": f"{len(finite)}/{len(reached)}",
        "median_steps_to_threshold": None if median is None or np.isinf(median) else median,
        "mean_steps_to_threshold": float(np.mean(finite)) if finite else None,
        "std_steps_to_threshold": float(np.std(finite)) if finite else None,
    }

    if write:
        with open(run_dir / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
        for name, series in (("success", success_mas), ("return", return_mas)):
            stacked = np.stack([series[s] for s in sorted(series)])
            with open(run_dir / f"curve_{name}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["step", "mean", "std"])
                for i, step in enumerate(steps):
                    writer.writerow(
                        [int(step), float(stacked[:, i].mean()), float(stacked[:, i].std())]
                    )
    return summary


def query_ledger_report(run_dir: str | Path) -> dict:
    """Advisor budget table for one run: per-seed trigger batches, batch
    sizes, and total guidance samples, with the product identity checked."""
    run_dir = Path(run_dir)
    rows = []
    for seed_dir in sorted(run_dir.glob("seed*")):
        ledger_path = seed_dir / "ledger.json"
        if not ledger_path.exists():
            continue
        with open(ledger_path) as fh:
            ledger = json.load(fh)
        sizes = ledger["batch_sizes"]
        uniform = len(set(sizes)) == 1 if sizes else True
        rows.append(
            {
                "seed": int(seed_dir.name.removeprefix("seed")),
                "trigger_batches": ledger["trigger_batches"],
                "batch_size": sizes[0] if sizes and uniform else sizes,
                "total_queries": ledger["total_queries"],
                "pairs_added": ledger["pairs_added"],
                "arithmetic_ok": sum(sizes) == ledger["total_queries"],
            }
        )
    if not rows:
        raise FileNotFoundError(f"no ledgers found under {run_dir}")
    return {"run": str(run_dir), "per_seed": rows}


def format_ledger_table(report: dict) -> str:
    lines = [f"query ledger for {report['run']}", "seed  batches  batch_size  total_queries  pairs"]
    for row in report["per_seed"]:
        lines.append(
            f"{row['seed']:<5} {row['trigger_batches']:<8} {str(row['batch_size']):<11} "
            f"{row['total_queries']:<14} {row['pairs_added']}"
        )
    return "\n".join(lines)
