"""``stosym run --config <file> [--out <dir>] [--seed-override <u64>]``.

The config is JSON, either a single experiment::

    {"experiment": "sec6-determining", "seed": 0, "params": {"n_points": 200}}

or a list under ``"experiments"``. ``"output_dir"`` may set the output
directory; ``--out`` wins over it. Exit status: 0 when every check passes,
1 when a check fails, 2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import StosymError, UsageError
from .experiments import experiment_names, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _entries(config) -> list[dict]:
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    if "experiments" in config:
        items = config["experiments"]
        if not isinstance(items, list) or not items:
            raise UsageError('"experiments" must be a non-empty list')
    elif "experiment" in config:
        items = [config]
    else:
        raise UsageError('config needs "experiment" or "experiments"')
    out = []
    for item in items:
        if isinstance(item, str):
            item = {"experiment": item}
        if not isinstance(item, dict) or "experiment" not in item:
            raise UsageError('each entry needs an "experiment" name')
        name = item["experiment"]
        if name not in experiment_names():
            raise UsageError(f"unknown experiment {name!r}; valid names: {', '.join(experiment_names())}")
        params = item.get("params", {})
        if not isinstance(params, dict):
            raise UsageError('"params" must be an object')
        seed = item.get("seed", config.get("seed", 0))
        if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        out.append({"experiment": name, "seed": seed, "params": params})
    return out


def run(config: dict, out_dir: Path, seed_override: int | None = None, stream=sys.stdout) -> int:
    entries = _entries(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for entry in entries:
        seed = entry["seed"] if seed_override is None else seed_override
        result = run_experiment(entry["experiment"], seed, entry["params"])
        print(f"[{'PASS' if result.passed else 'FAIL'}] {result.name} (seed {seed})", file=stream)
        for check in result.checks:
            print(f"    {check.line()}", file=stream)
        for label, path in result.artifacts.items():
            target = out_dir / result.name / f"{label}.csv"
            target.parent.mkdir(parents=True, exist_ok=True)
            path.to_csv(target)
        reports.append(result.to_dict())
    report = {"passed": all(r["passed"] for r in reports), "experiments": reports}
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("expected an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stosym", description="Run symmetry and scheme experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run experiments from a JSON config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--seed-override", type=_u64, default=None)
    sub.add_parser("list", help="list experiment names")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "list":
        print("\n".join(experiment_names()))
        return EXIT_OK
    try:
        config = json.loads(args.config.read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON in {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or Path(config.get("output_dir", "stosym-out") if isinstance(config, dict) else "stosym-out")
    try:
        return run(config, out, args.seed_override)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StosymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
