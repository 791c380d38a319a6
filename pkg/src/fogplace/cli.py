"""Command-line experiment harness.

Examples:

    # full reference grid, one seed, results under ./out
    fogplace --out out

    # two seeds of the S2 cells at 40 Gb/s in disaggregated mode
    fogplace --mode ds --scenario s2 --access-link-gbps 40 --seeds 3,4 --out out

    # cross-check the exact solver against the brute-force oracle
    fogplace --oracle-check

    # dump replayable instance files instead of solving
    fogplace --dump-instance --out out
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .capacity import PlacementMode
from .errors import FogPlaceError
from .optimizer import ObjectiveWeights, RegularTrafficProfile
from .runner import (
    PAPER_ACCESS_CAPACITIES,
    ScenarioConfig,
    dump_instance,
    expand_grid,
    run_grid,
    run_oracle_check,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NON_OPTIMAL = 2


def _parse_list(raw: str, convert):
    return [convert(part) for part in raw.split(",") if part != ""]


def _parse_regular_traffic(raw: str) -> RegularTrafficProfile:
    path = Path(raw)
    if path.suffix == ".json" and path.exists():
        data = json.loads(path.read_text())
        return RegularTrafficProfile.from_dict(data)
    values = _parse_list(raw, float)
    if len(values) == 2:
        access, core = values
        return RegularTrafficProfile(access, access, core)
    if len(values) == 3:
        access, last_mile, core = values
        return RegularTrafficProfile(access, last_mile, core)
    raise argparse.ArgumentTypeError(
        "expected a JSON profile file, 'access,core' or 'access,last_mile,core'"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogplace",
        description="Run the fog placement scenario grid and emit reports.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--mode", default="ts,ds", help="comma list of server modes (ts,ds)")
    parser.add_argument("--scenario", default="s1,s2", help="comma list of traffic scenarios")
    parser.add_argument(
        "--access-link-gbps",
        default=",".join(str(c) for c in PAPER_ACCESS_CAPACITIES),
        help="comma list of BO/CS access-link capacities",
    )
    parser.add_argument("--seeds", default=None, help="comma list of seeds (overrides --seed-count)")
    parser.add_argument("--seed-count", type=int, default=1, help="use seeds 0..N-1")
    parser.add_argument("--config", default=None, help="JSON file with ScenarioConfig overrides")
    parser.add_argument("--out", default=None, help="output directory for reports")
    parser.add_argument("--time-limit", type=float, default=600.0, help="per-solve limit (s)")
    parser.add_argument(
        "--regular-traffic",
        default=None,
        help="background profile: JSON file or 'access,core' / 'access,last_mile,core' fractions",
    )
    parser.add_argument("--traffic-split", default=None, help="'to_source,to_dc' fractions")
    parser.add_argument("--parallel", type=int, default=1, help="worker processes for grid cells")
    parser.add_argument(
        "--oracle-check",
        action="store_true",
        help="cross-check solve() against the brute-force oracle on tiny instances, then exit",
    )
    parser.add_argument("--oracle-count", type=int, default=50, help="instances for --oracle-check")
    parser.add_argument(
        "--dump-instance",
        action="store_true",
        help="write replayable instance files for each grid cell instead of solving",
    )
    return parser


def _base_config(args) -> ScenarioConfig:
    overrides: dict = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        base = ScenarioConfig.from_dict({**ScenarioConfig().to_dict(), **data})
    else:
        base = ScenarioConfig()
    if args.regular_traffic:
        overrides["regular_traffic"] = _parse_regular_traffic(args.regular_traffic)
    if args.traffic_split:
        split = _parse_list(args.traffic_split, float)
        if len(split) != 2:
            raise argparse.ArgumentTypeError("--traffic-split needs two fractions")
        overrides["traffic_split"] = tuple(split)
    overrides["time_limit_s"] = args.time_limit
    from dataclasses import replace

    return replace(base, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.oracle_check:
        result = run_oracle_check(count=args.oracle_count, time_limit_s=args.time_limit)
        print(f"oracle check: {result.checked} instances in {result.elapsed_s:.1f}s")
        for line in result.mismatches:
            print(f"MISMATCH: {line}")
        print("PASS" if result.ok else "FAIL")
        return EXIT_OK if result.ok else EXIT_ERROR

    try:
        base = _base_config(args)
        modes = [PlacementMode(m) for m in _parse_list(args.mode, str)]
        scenarios = _parse_list(args.scenario, str)
        capacities = _parse_list(args.access_link_gbps, float)
        seeds = (
            _parse_list(args.seeds, int) if args.seeds else list(range(args.seed_count))
        )
        configs = expand_grid(modes, scenarios, capacities, seeds, base)

        if args.dump_instance:
            if not args.out:
                print("--dump-instance requires --out", file=sys.stderr)
                return EXIT_ERROR
            for config in configs:
                name = "_".join(str(part) for part in config.cell_key())
                target = dump_instance(config, Path(args.out) / "instances" / name)
                print(f"dumped {name} -> {target}")
            return EXIT_OK

        grid = run_grid(configs, out_dir=args.out, parallel=args.parallel)
    except FogPlaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    for row in grid.summary_rows:
        print(
            f"{row['mode']}/{row['scenario']}/{row['access_link_gbps']}G "
            f"seeds={row['n_seeds']} blocked={row['blocked_count_mean']:.2f} "
            f"servers={row['active_servers_mean']:.1f} "
            f"components={row['active_components_mean']:.1f} "
            f"tnpc={row['tnpc_w_mean']:.1f}W"
        )
    if not grid.all_optimal:
        print("warning: at least one solve hit the time limit", file=sys.stderr)
        return EXIT_NON_OPTIMAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
