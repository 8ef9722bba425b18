"""Command-line front end.

Subcommands: ``population``, ``route``, ``run`` and ``sweep``. Every command
writes CSV files to ``--out-dir`` and a short report to stdout. Exit status
is 0 on success, 1 on a configuration or usage error, 2 on a runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import population, routecmp
from .multicast import Network
from .sim import metrics as metrics_mod
from .sim import sweep as sweep_mod
from .sim.config import ConfigError, load_config
from .sim.metrics import summarize
from .sim.scenarios import Scenario, build_topology

log = logging.getLogger("mmstate")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, seed_default: Optional[int] = 0) -> None:
    p.add_argument("--seed", type=int, default=seed_default, help="base seed")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="directory for CSV outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmstate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("population", help="random number-population aggregation curves")
    _common(p)
    p.add_argument("--width", type=int, default=10, help="address width k")
    p.add_argument("--limit", type=int, default=1000, help="population size (numbers 0..limit-1)")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at --seed")

    p = sub.add_parser("route", help="handoff and path-stretch comparison of mobility protocols")
    _common(p)
    p.add_argument("--topology", default="ts:100", help="ts:N, ts:T,S,Z,P or an edge-list file")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--movement", choices=("cluster", "neighbor", "random"), default="cluster")
    p.add_argument("--moves-per-trial", type=int, default=10)
    p.add_argument("--cluster-size", type=int, default=6)

    p = sub.add_parser("run", help="run one scenario from a config file")
    _common(p, seed_default=None)
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--topology", help="override the config's topology")
    p.add_argument("--width", type=int, help="override the config's address width")

    p = sub.add_parser("sweep", help="snapshot aggregation ratios over sizes and proxy counts")
    _common(p)
    p.add_argument("--sizes", type=_int_list, default=[50, 100, 150, 200, 250, 300])
    p.add_argument("--mps", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--mn-count", type=int, default=10_000)
    p.add_argument("--seeds", type=int, default=5, help="number of seeds, starting at --seed")
    p.add_argument("--placement", default="high-degree", help="high-degree or centers")
    p.add_argument("--width", type=int, default=16)
    return parser


def _open(out_dir: Path, name: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    return open(out_dir / name, "w", newline="")


def cmd_population(args) -> None:
    if args.limit > 1 << args.width:
        raise ConfigError("limit", f"{args.limit} numbers do not fit in {args.width} bits")
    if args.seeds < 1:
        raise ConfigError("seeds", "must be >= 1")
    seeds = range(args.seed, args.seed + args.seeds)
    result = population.run_population(seeds, args.width, args.limit)
    with _open(args.out_dir, "population_curves.csv") as fh:
        population.write_curves(result, fh)
    with _open(args.out_dir, "population_summary.csv") as fh:
        population.write_summary(result, fh)
    print(f"prefix mean {result.mean_over_seeds('mean_prefix'):.3f}  "
          f"bitwise mean {result.mean_over_seeds('mean_bitwise'):.3f}  "
          f"bitwise/prefix over first 80% {result.mean_over_seeds('advantage', 0.8):.3f}  "
          f"crossover {result.mean_crossover()}")


def cmd_route(args) -> None:
    if args.trials < 1:
        raise ConfigError("trials", "must be >= 1")
    g, _ = build_topology(args.topology, args.seed)
    result = routecmp.route_analysis(g, args.trials, args.movement, args.seed,
                                     args.moves_per_trial, args.cluster_size, Network(g))
    with _open(args.out_dir, "route_moves.csv") as fh:
        routecmp.write_records(result, fh)
    with _open(args.out_dir, "route_summary.csv") as fh:
        routecmp.write_summary(result, fh)
    for k, v in routecmp.summary_rows(result):
        print(f"{k:>20} {v:.3f}" if isinstance(v, float) else f"{k:>20} {v}")


def cmd_run(args) -> None:
    if not args.config.is_file():
        raise ConfigError("config", f"no such config file {str(args.config)!r}")
    cfg = load_config(args.config)
    changes = {k: v for k, v in (("seed", args.seed), ("topology", args.topology),
                                 ("width", args.width)) if v is not None}
    if changes:
        cfg = cfg.replace(**changes)
    scenario = Scenario(cfg)
    mlog = scenario.run()
    summary = summarize(mlog)
    with _open(args.out_dir, "metrics.csv") as fh:
        metrics_mod.write_metrics_csv(mlog, fh)
    with _open(args.out_dir, "summary.csv") as fh:
        metrics_mod.write_summary_csv(summary, fh)
    for combo in mlog.combos:
        row = summary.final(combo)
        print(f"{combo}: events {row.event_index}  mean ratio {row.mean_ratio}  "
              f"p90 ratio {row.p90_ratio}  max ratio {row.max_ratio}")


def cmd_sweep(args) -> None:
    if not args.sizes or not args.mps or args.seeds < 1:
        raise ConfigError("sweep", "sizes, mps and seeds must be nonempty")
    cells = sweep_mod.run_sweep(args.sizes, args.mps, args.mn_count,
                                range(args.seed, args.seed + args.seeds), args.placement, args.width)
    with _open(args.out_dir, "sweep_cells.csv") as fh:
        sweep_mod.write_cells(cells, fh)
    with _open(args.out_dir, "sweep.csv") as fh:
        sweep_mod.write_table(cells, fh)
    for (n, m), (leaky, perfect) in sweep_mod.cell_means(cells).items():
        print(f"nodes {n:>4} mps {m}  leaky {leaky:.3f}  perfect {perfect:.3f}")


COMMANDS = {"population": cmd_population, "route": cmd_route, "run": cmd_run, "sweep": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"mmstate: usage error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"mmstate: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, ValueError, KeyError) as e:
        print(f"mmstate: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
