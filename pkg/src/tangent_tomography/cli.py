"""Command-line front end for batch experiments.

Exit codes: 0 when every cell succeeds, 1 when any cell fails, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .experiment import ExperimentConfig, run_batch


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tangent-tomography",
                description="Run adaptive pure-state tomography experiments and write CSV/JSON results.")
    p.add_argument("--config", help="JSON configuration file; flags override its values")
    p.add_argument("--dimension", type=int, nargs="+", help="Hilbert space dimension(s)")
    p.add_argument("--horizon", type=int, help="total copy budget T_total")
    p.add_argument("--seed", type=int, help="single master seed")
    p.add_argument("--seeds", help="half-open seed range A..B")
    p.add_argument("--preset", choices=("paper", "practical"))
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="replace an algorithm constant (repeatable)")
    p.add_argument("--state-file", help="explicit hidden state, one 're im' pair per line")
    p.add_argument("--out", help="output directory")
    p.add_argument("--checkpoint-every", type=int, help="checkpoint spacing in copies")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    return p


def _parse_range(text: str) -> list[int]:
    try:
        a, b = text.split("..")
        a, b = int(a), int(b)
    except ValueError:
        raise ConfigError(f"seeds: expected A..B, got {text!r}") from None
    if b <= a:
        raise ConfigError(f"seeds: empty range {text!r}")
    return list(range(a, b))


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"override: value {text!r} is not numeric") from None


def parse_config(argv: list[str] | None = None) -> ExperimentConfig:
    """Merge an optional config file with command-line flags."""
    args = build_parser().parse_args(argv)
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
    if args.seed is not None and args.seeds is not None:
        raise ConfigError("seed: --seed and --seeds are mutually exclusive")
    if args.dimension is not None:
        data["dimensions"] = args.dimension
    if args.horizon is not None:
        data["horizon"] = args.horizon
    if args.seed is not None:
        data["seeds"] = [args.seed]
    if args.seeds is not None:
        data["seeds"] = _parse_range(args.seeds)
    if args.preset is not None:
        data["preset"] = args.preset
    if args.override:
        overrides = dict(data.get("overrides", {}))
        for item in args.override:
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigError(f"override: expected KEY=VALUE, got {item!r}")
            overrides[key.strip()] = _parse_value(value.strip())
        data["overrides"] = overrides
    if args.state_file is not None:
        data["state_file"] = args.state_file
    if args.out is not None:
        data["out"] = args.out
    if args.checkpoint_every is not None:
        data["checkpoint_every"] = args.checkpoint_every
    if args.workers is not None:
        data["workers"] = args.workers
    try:
        return ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from None


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    results, _ = run_batch(cfg)
    failed = [r for r in results if r.error is not None]
    for r in failed:
        print(f"cell d={r.d} seed={r.seed} failed: {r.error}", file=sys.stderr)
    print(f"{len(results) - len(failed)}/{len(results)} cells completed; output in {cfg.out}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
