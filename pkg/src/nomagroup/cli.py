"""Command-line entry point: ``nomagroup {generate,solve,sweep,certify}``.

Exit codes: 0 success, 1 certify found an improving loop, 2 configuration
error, 3 capability error, 4 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import bench
from .errors import CapabilityError, ConfigurationError, ScenarioFormatError
from .graph import build_graph, extend_with_virtuals
from .power import allocate_all
from .scenario import (
    ChannelModelParams,
    export_users_csv,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .solvers import SolverConfig, is_all_stable

EXIT_OK, EXIT_UNSTABLE, EXIT_CONFIG, EXIT_CAPABILITY, EXIT_IO = 0, 1, 2, 3, 4


def _cmd_generate(args) -> int:
    params = ChannelModelParams(rate_min=args.rate_min, rate_max=args.rate_max,
                                cell_radius=args.radius, min_distance=args.min_distance)
    seeds = range(args.seed, args.seed + args.count)
    for seed in seeds:
        s = generate_scenario(args.users, args.groups, seed, params)
        out = Path(args.output.format(seed=seed))
        out.parent.mkdir(parents=True, exist_ok=True)
        save_scenario(s, out)
        if args.csv:
            export_users_csv(s, out.with_suffix(".csv"))
        print(out)
    return EXIT_OK


def _cmd_solve(args) -> int:
    s = load_scenario(args.scenario)
    if args.dump_graph and args.strategy not in ("bellman_ford", "greedy"):
        raise ConfigurationError("--dump-graph needs a graph-based strategy")
    cfg = SolverConfig(alpha=args.alpha, exact_mode_group_cap=args.group_cap)
    row, grouping = bench.run_strategy(s, args.strategy, cfg)
    if args.dump_graph:
        build_graph(extend_with_virtuals(grouping, s), s).to_csv(args.dump_graph)
    if args.output:
        bench.write_solution(args.output, args.strategy, s, grouping, row.total_power_w)
    print(json.dumps(asdict(row)))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = bench.ExperimentConfig.from_json(Path(args.config).read_text())
    if args.output:
        cfg.output_path = args.output
    rows = bench.run_sweep(cfg, on_row=lambda r: print(json.dumps(asdict(r)), flush=True))
    if args.plot_data:
        bench.emit_plot_data(rows, args.group_by, args.plot_data)
    return EXIT_OK


def _cmd_certify(args) -> int:
    s, grouping, _ = bench.read_solution(args.solution)
    stable = is_all_stable(grouping, s)
    print(json.dumps({"all_stable": stable, "total_power_w": allocate_all(grouping, s).total}))
    return EXIT_OK if stable else EXIT_UNSTABLE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nomagroup", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write seeded scenario files")
    g.add_argument("--users", type=int, required=True)
    g.add_argument("--groups", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1, help="consecutive seeds to generate")
    g.add_argument("--rate-min", type=float, default=0.5)
    g.add_argument("--rate-max", type=float, default=8.0)
    g.add_argument("--radius", type=float, default=500.0)
    g.add_argument("--min-distance", type=float, default=35.0)
    g.add_argument("--csv", action="store_true", help="also export users as CSV")
    g.add_argument("-o", "--output", default="scenario_{seed}.json",
                   help="output path; '{seed}' is substituted")
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="run one strategy on one scenario")
    s.add_argument("scenario")
    s.add_argument("--strategy", choices=bench.STRATEGIES, default="greedy")
    s.add_argument("--alpha", type=float, default=5.0)
    s.add_argument("--group-cap", type=int, default=12, help="exact finder group cap")
    s.add_argument("-o", "--output", help="write a solution file for `certify`")
    s.add_argument("--dump-graph", help="write the final adjacency matrix as CSV")
    s.set_defaults(func=_cmd_solve)

    w = sub.add_parser("sweep", help="run an experiment config")
    w.add_argument("config")
    w.add_argument("-o", "--output", help="results CSV (overrides output_path)")
    w.add_argument("--plot-data", help="write per-(strategy, x) mean/std CSV")
    w.add_argument("--group-by", default="group_count")
    w.set_defaults(func=_cmd_sweep)

    c = sub.add_parser("certify", help="exhaustively check a solution for improving loops")
    c.add_argument("solution")
    c.set_defaults(func=_cmd_certify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (OSError, ScenarioFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"configuration error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
