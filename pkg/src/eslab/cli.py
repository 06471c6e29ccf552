"""Command-line entry point: ``eslab <experiment> --config <path>`` and ``eslab weights``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import EslabError
from .harness import EXPERIMENTS, load_config, run_experiment
from .weights import KINDS, WeightScheme, make_weights


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eslab", description="Weighted Kronecker-sequence experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="TOML or JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
        p.add_argument("--threads", type=int, default=None, help="worker threads for the sweep")
    w = sub.add_parser("weights", help="export a weight sequence")
    w.add_argument("scheme", choices=KINDS)
    w.add_argument("--N", type=int, required=True)
    w.add_argument("--gamma", type=float, default=None)
    w.add_argument("--theta", type=float, default=None)
    w.add_argument("--j", type=int, default=None)
    w.add_argument("--sequence", default=None, help="comma-separated weights for the custom scheme")
    w.add_argument("--n-min", type=int, default=0)
    w.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "weights":
            seq = None if args.sequence is None else tuple(float(v) for v in args.sequence.split(","))
            scheme = WeightScheme(
                kind=args.scheme, gamma=args.gamma, theta=args.theta, j=args.j, sequence=seq, n_min=args.n_min
            )
            w = make_weights(scheme, args.N)
            sys.stdout.write(w.to_csv() if args.format == "csv" else w.to_json() + "\n")
            return 0
        overrides = {"experiment": args.command, "output": args.out, "seed": args.seed, "threads": args.threads}
        cfg = load_config(args.config, overrides=overrides)
        result = run_experiment(cfg)
        print(json.dumps(result.paths))
        return 0
    except EslabError as exc:
        print(f"eslab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
