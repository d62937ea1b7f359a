"""``parksense run|sweep|validate``.

Exit codes: 0 success, 1 runtime failure (or a failed validation check),
2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__, checks
from .belief import SensorModel
from .config import ConfigError, ExperimentConfig
from .engine import run_day
from .harness import format_csv, replication_seed, sweep, time_avg_error
from .lot import LotSchemaError

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _split(values):
    out = []
    for v in values or ():
        out.extend(x for x in v.split(",") if x)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config (or a run manifest to replay)")
    common.add_argument("--policy", help="random | nearest | max-satisfaction | near-optimal")
    common.add_argument("--gamma", type=float, help="share of arriving cars that are probe cars")
    common.add_argument("--mode", help="one-way | two-way")
    common.add_argument("--reps", type=int, help="replications per sweep point")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--workers", type=int, help="worker processes for replications")
    common.add_argument("--out", type=Path, help="output path; a manifest is written beside it")

    parser = argparse.ArgumentParser(prog="parksense", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"parksense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="simulate one day")
    run.add_argument("--trace", action="store_true", help="write a JSON-lines event trace")
    run.add_argument("--trace-beliefs", action="store_true",
                     help="include the belief vector in every trace record")

    sw = sub.add_parser("sweep", parents=[common], help="policy x gamma x mode table")
    sw.add_argument("--policies", action="append", help="comma-separated policy filter")
    sw.add_argument("--gammas", action="append", help="comma-separated gamma values")
    sw.add_argument("--modes", action="append", help="comma-separated route modes")

    val = sub.add_parser("validate", parents=[common], help="run the oracle checks")
    val.add_argument("--perturb-sensor", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: must be a JSON object")
        if isinstance(data.get("config"), dict):
            data = data["config"]
    data = dict(data)
    flags = {"policy": args.policy, "gamma": args.gamma, "route_mode": args.mode,
             "replications": args.reps, "seed": args.seed, "workers": args.workers}
    data.update({k: v for k, v in flags.items() if v is not None})
    if getattr(args, "command", None) == "sweep":
        if args.policies or args.policy:
            data["policies"] = _split(args.policies) or [args.policy]
        if args.modes or args.mode:
            data["modes"] = _split(args.modes) or [args.mode]
        if args.gammas or args.gamma is not None:
            try:
                data["gammas"] = [float(g) for g in _split(args.gammas)] or [args.gamma]
            except ValueError:
                raise ConfigError("gammas: expected comma-separated numbers") from None
    return ExperimentConfig.from_dict(data)


def write_manifest(config: ExperimentConfig, args, artifacts: dict) -> Path | None:
    if args.out is None:
        return None
    path = args.out.with_name(args.out.name + ".manifest.json")
    manifest = {
        "tool": "parksense",
        "version": __version__,
        "command": args.command,
        "seed": config.seed,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "artifacts": {k: str(v) for k, v in artifacts.items()},
        "config": config.to_dict(),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def cmd_run(args, config: ExperimentConfig) -> int:
    trace_path = None
    if args.trace or args.trace_beliefs:
        trace_path = args.out or Path("trace.jsonl")
    write_manifest(config, args, {"trace": trace_path} if trace_path else {})
    day = run_day(config, replication_seed(config.seed, 0),
                  trace=trace_path is not None, trace_beliefs=args.trace_beliefs)
    if trace_path is not None:
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        with trace_path.open("w") as fh:
            for ev in day.events:
                fh.write(json.dumps(ev.to_json()) + "\n")
    summary = {
        "policy": config.policy.value,
        "route_mode": config.route_mode.value,
        "gamma": config.gamma,
        "seed": config.seed,
        "mean_error": time_avg_error(list(zip(day.times, day.errors)), config.horizon)
        if day.errors.size else None,
        "counters": day.counters.as_dict(),
        "events": len(day.times) - 1,
    }
    if trace_path is not None:
        summary["trace"] = str(trace_path)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_sweep(args, config: ExperimentConfig) -> int:
    write_manifest(config, args, {"table": args.out} if args.out else {})
    text = format_csv(sweep(config))
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_bytes(text.encode())
    return EXIT_OK


def cmd_validate(args, config: ExperimentConfig) -> int:
    model = None
    if args.perturb_sensor:
        model = SensorModel(config.sensor_p_hit + args.perturb_sensor, config.sensor_p_true_neg)
    reps = args.reps if args.reps is not None else 100
    write_manifest(config, args, {"report": args.out} if args.out else {})
    results = checks.run_all(reps, model)
    for r in results:
        print(r.line())
    if args.out is not None:
        report = [{"name": r.name, "passed": r.passed, "informational": r.informational,
                   "measured": r.measured, "tolerance": r.tolerance, "detail": r.detail}
                  for r in results]
        args.out.write_text(json.dumps(report, indent=2) + "\n")
    failed = [r for r in results if not r.passed and not r.informational]
    return EXIT_RUNTIME if failed else EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except (ConfigError, LotSchemaError) as exc:
        print(f"parksense: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, config)
    except (ConfigError, LotSchemaError) as exc:
        print(f"parksense: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"parksense: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
