"""Command-line entry point.

Subcommands: `run` trains from a config (flags override file values),
`summarize` aggregates a finished run directory, `ledger` prints the advisor
query-budget table, and `mock-advisor` starts the bundled test server.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig, load_config, merge_overrides


def _parse_seeds(value: str) -> list[int]:
    return [int(v) for v in value.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train from a config file and/or flags")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--env", help="environment name")
    run.add_argument("--algo", choices=("varl", "sac", "sac_expert_prefill"))
    run.add_argument("--seed", type=int, help="single seed (shorthand for --seeds)")
    run.add_argument("--seeds", type=_parse_seeds, help="comma-separated seed list")
    run.add_argument("--out", help="output directory")
    run.add_argument("--max-steps", type=int, dest="max_steps")
    run.add_argument("--endpoint", help="remote advisor endpoint URL")
    run.add_argument("--guidance-weight", type=float, dest="guidance_weight")
    run.add_argument("--cutoff-step", type=int, dest="cutoff_step")
    run.add_argument("--acceptance-radius", type=float, dest="acceptance_radius")
    run.add_argument("--recent-k", type=int, dest="recent_k")

    summ = sub.add_parser("summarize", help="aggregate a finished run directory")
    summ.add_argument("--run", required=True, help="run directory (contains seed*/)")
    summ.add_argument("--window", type=int, default=10)

    ledger = sub.add_parser("ledger", help="print the advisor query-budget report")
    ledger.add_argument("--run", required=True)

    mock = sub.add_parser("mock-advisor", help="start the bundled mock advisor server")
    mock.add_argument("--host", default="127.0.0.1")
    mock.add_argument("--port", type=int, default=8971)
    mock.add_argument("--strategy", choices=("first", "random"), default="first")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        "env": args.env,
        "algo": args.algo,
        "out_dir": args.out,
        "max_steps": args.max_steps,
        "advisor.endpoint": args.endpoint,
        "shaping.guidance_weight": args.guidance_weight,
        "shaping.cutoff_step": args.cutoff_step,
        "shaping.acceptance_radius": args.acceptance_radius,
        "trigger.recent_k": args.recent_k,
        "seeds": args.seeds if args.seeds else ([args.seed] if args.seed is not None else None),
    }
    if args.config:
        return load_config(args.config, overrides)
    return ExperimentConfig.from_dict(merge_overrides({}, overrides))


def cmd_run(args) -> int:
    from .runner import run_experiment

    cfg = _config_from_args(args)
    run_experiment(cfg, echo=print)
    print(f"run complete; artifacts under {cfg.out_dir}")
    return 0


def cmd_summarize(args) -> int:
    from .summary import summarize

    summary = summarize(args.run, window=args.window)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_ledger(args) -> int:
    from .summary import format_ledger_table, query_ledger_report

    print(format_ledger_table(query_ledger_report(args.run)))
    return 0


def cmd_mock_advisor(args) -> int:
    from ..advisor import MockAdvisorServer, scripted_responder

    server = MockAdvisorServer(
        responder=scripted_responder(args.strategy), host=args.host, port=args.port
    )
    server.start()
    print(f"mock advisor listening on {server.url} (Ctrl+C to stop)")
    try:
        while True:
            import time

            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "summarize": cmd_summarize,
        "ledger": cmd_ledger,
        "mock-advisor": cmd_mock_advisor,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, FloatingPointError) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
