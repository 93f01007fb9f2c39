"""Command-line front end: simulate series, estimate positions, run sweeps,
produce bound maps, and profile runtimes.

Every command reads a JSON config (``--config PATH`` or a shipped
``--preset NAME``), writes CSV/JSON outputs, and derives all randomness
from the config seed (or ``--seed`` override) -- no wall-clock entropy
reaches any result.

Exit codes: 0 all outputs written, 1 runtime/IO failure, 2 invalid
configuration (the message names the offending field), 3 malformed series
CSV (the message names the row).
"""

import argparse
import json
import sys

import numpy as np

from . import bench
from .config import (
    ConfigError,
    SimulateConfig,
    load_map_config,
    load_preset,
    load_scenario_config,
    load_simulate_config,
    preset_names,
)
from .crlb import MODES, crlb_heatmap, write_grid_csv, write_grid_matrix
from .estimators import ESTIMATORS
from .synthesis import (
    SeriesFormatError,
    generate_series,
    read_series_csv,
    sample_noise_profiles,
    write_series_csv,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_SERIES_FORMAT = 3


def _config_source(args) -> dict | str:
    if args.preset is not None:
        return load_preset(args.preset)
    return args.config


def _resolve_profiles(config: SimulateConfig, rng: np.random.Generator):
    if config.profiles is not None:
        return config.profiles
    return sample_noise_profiles(config.noise, config.anchors.shape[0], rng)


def _cmd_simulate(args) -> int:
    config = load_simulate_config(_config_source(args))
    if config.target is None:
        raise ConfigError("target", "required by the simulate command")
    seed = args.seed if args.seed is not None else config.seed
    rng = np.random.default_rng(seed)
    profiles = _resolve_profiles(config, rng)
    series = generate_series(
        config.target, config.anchors, profiles, config.path_loss, config.t_steps, rng
    )
    write_series_csv(series, args.out)
    print(
        f"wrote {series.n_anchors * series.t_steps} measurement rows "
        f"({series.n_anchors} anchors x {series.t_steps} steps) to {args.out}"
    )
    return EXIT_OK


def _cmd_estimate(args) -> int:
    config = load_simulate_config(_config_source(args))
    series = read_series_csv(args.series)
    if series.n_anchors != config.anchors.shape[0]:
        raise SeriesFormatError(
            f"series has {series.n_anchors} anchors but config lists {config.anchors.shape[0]}"
        )
    estimator = ESTIMATORS[args.method]
    estimate = estimator(series, config.anchors, config.path_loss)
    result = {
        "method": args.method,
        "stage": estimate.stage,
        "condition_flag": estimate.condition_flag,
        "position": None if estimate.position is None else [float(v) for v in estimate.position],
    }
    if estimate.position is None:
        print(f"no position: system ill-conditioned (method={args.method})")
    else:
        p = estimate.position
        print(
            f"position: {p[0]:.6f} {p[1]:.6f} {p[2]:.6f}  "
            f"(method={args.method}, stage={estimate.stage}, "
            f"flagged={estimate.condition_flag})"
        )
    print(json.dumps(result))
    if args.out is not None:
        with open(args.out, "w") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    return EXIT_OK if estimate.position is not None else EXIT_FAILURE


def _scenario_with_overrides(args) -> bench.ScenarioConfig:
    from dataclasses import replace

    config = load_scenario_config(_config_source(args))
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.mc is not None:
        config = replace(config, mc_runs=args.mc)
    if args.method is not None:
        config = replace(config, methods=(args.method,))
    return config


def _cmd_sweep(args) -> int:
    config = _scenario_with_overrides(args)
    if config.sweep_param is not None:
        report = bench.sweep_parameter(config)
    else:
        report = bench.run_monte_carlo(config)
    bench.write_report_csv(report, args.out, include_runtime=args.timing)
    if args.json is not None:
        bench.write_report_json(report, args.json)
    for point in report.points:
        label = "" if point.sweep_value is None else f" {report.sweep_param}={point.sweep_value:g}"
        summary = ", ".join(
            f"{name}: {result.rmse:.3f} m" for name, result in point.methods.items()
        )
        print(f"{label.strip() or 'scenario'}: {summary}, bound {point.crlb_mean:.3f} m")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_crlb_map(args) -> int:
    config = load_map_config(_config_source(args))
    mode = args.mode if args.mode is not None else config.mode
    grid = crlb_heatmap(
        config.anchors, config.profiles, config.path_loss, config.t_steps, config.grid, mode
    )
    write_grid_csv(grid, args.out)
    if args.matrix_out is not None:
        write_grid_matrix(grid, args.matrix_out)
    x1, x2, value = grid.min_point()
    print(
        f"{mode} map: {grid.values.size} points, {grid.masked_count} singular/masked, "
        f"minimum {value:.3f} m at ({x1:g}, {x2:g}); wrote {args.out}"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = _scenario_with_overrides(args)
    profile = bench.runtime_profile(config)
    bench.write_runtime_csv(profile, args.out)
    for name, seconds in profile.items():
        print(f"{name}: {seconds * 1e3:.3f} ms per fix (mean of {config.mc_runs} runs)")
    print(f"wrote {args.out}")
    return EXIT_OK


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="path to a JSON config file")
    group.add_argument(
        "--preset", help="name of a shipped preset config (see `presets` command)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rssaoa",
        description="Hybrid RSS/AOA localization: simulation, estimation, bounds, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a measurement series CSV for a fixed scene")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output series CSV path")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate a position from a series CSV")
    _add_config_arguments(p)
    p.add_argument("--series", required=True, help="input series CSV path")
    p.add_argument(
        "--method", choices=sorted(ESTIMATORS), default="two-stage", help="estimator to run"
    )
    p.add_argument("--out", help="optional JSON result path")
    p.set_defaults(handler=_cmd_estimate)

    p = sub.add_parser("sweep", help="run a Monte-Carlo scenario or parameter sweep")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output report CSV path")
    p.add_argument("--json", help="optional JSON report path (includes config echo)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--mc", type=int, help="override the Monte-Carlo run count")
    p.add_argument("--method", choices=sorted(ESTIMATORS), help="run only this method")
    p.add_argument(
        "--timing",
        action="store_true",
        help="include the wall-clock runtime column (breaks byte-reproducibility)",
    )
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("crlb-map", help="evaluate the error lower bound over a grid")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output grid CSV path")
    p.add_argument("--matrix-out", help="optional dense-matrix text output path")
    p.add_argument("--mode", choices=MODES, help="override the config channel mode")
    p.set_defaults(handler=_cmd_crlb_map)

    p = sub.add_parser("bench", help="profile per-fix estimator runtimes")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output runtime CSV path")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--mc", type=int, help="override the Monte-Carlo run count")
    p.add_argument("--method", choices=sorted(ESTIMATORS), help="profile only this method")
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser("presets", help="list shipped preset configs")
    p.set_defaults(handler=lambda args: (print("\n".join(preset_names())), EXIT_OK)[1])

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SeriesFormatError as exc:
        print(f"error: series CSV: {exc}", file=sys.stderr)
        return EXIT_SERIES_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
