"""Experiment harness: config parsing, seeded training runs, aggregation."""

from .config import ConfigError, ExperimentConfig, expand_sweep, load_config
from .runner import (
    evaluate,
    prefill_expert,
    resolve_trigger_schedule,
    run_experiment,
    run_single_seed,
    spawn_streams,
)
from .summary import oracle_mean_return, query_ledger_report, summarize, trailing_moving_average

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "evaluate",
    "expand_sweep",
    "load_config",
    "oracle_mean_return",
    "prefill_expert",
    "query_ledger_report",
    "resolve_trigger_schedule",
    "run_experiment",
    "run_single_seed",
    "spawn_streams",
    "summarize",
    "trailing_moving_average",
]
