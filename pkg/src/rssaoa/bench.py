"""Monte-Carlo benchmark engine: random scenes, estimator RMSE, bound curves.

Every run draws fresh anchor/target placements, fresh per-anchor noise
levels and a fresh measurement series, feeds the same series to every
configured estimator, and accumulates squared position errors; the report
carries RMSE, failure counts, mean per-fix runtime and the mean
position-error lower bound per sweep value.

Reproducibility: the generator for run r of sweep point k is
``numpy.random.default_rng([seed, k, r])``, so results do not depend on
execution order, on which methods are configured, or on how many sweep
values follow -- appending sweep values never shifts earlier points.
Within a run the draw order is: anchor positions, target position
(re-drawn together while any anchor-target pair is closer than
``MIN_SEPARATION``), then noise profiles, then the series.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .crlb import SingularFisherError, crlb, fim
from .estimators import ESTIMATORS
from .geometry import CoincidentNodesError, PathLossParams
from .synthesis import HeteroNoiseSpec, generate_series, sample_noise_profiles

# Placements closer than this (meters) sit in the path-loss model's near
# field; the whole placement is re-drawn.
MIN_SEPARATION = 1.0

SWEEPABLE_PARAMS = ("n_anchors", "t_steps", "mu_m", "mu_v", "mu_n")

# Sweep parameters that are angles: radians internally, degrees at the
# config-file and report boundary.
ANGLE_PARAMS = ("mu_m", "mu_v")

REPORT_CSV_COLUMNS = ("method", "sweep_param", "sweep_value", "rmse_m", "crlb_m", "failures")
RUNTIME_CSV_COLUMNS = ("method", "mean_runtime_s")


@dataclass(frozen=True)
class ScenarioConfig:
    """One benchmark scenario; all quantities in internal units (radians, dB, m).

    ``sweep_values`` (when a sweep is configured) are also internal units;
    conversion to/from the degree-based config files happens at the JSON
    boundary only.
    """

    n_anchors: int
    t_steps: int
    noise: HeteroNoiseSpec
    path_loss: PathLossParams
    region_min: tuple[float, float, float]
    region_max: tuple[float, float, float]
    mc_runs: int
    seed: int
    methods: tuple[str, ...] = ("ls", "wls-d", "two-stage")
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n_anchors < 1:
            raise ValueError(f"n_anchors must be >= 1, got {self.n_anchors}")
        if self.t_steps < 1:
            raise ValueError(f"t_steps must be >= 1, got {self.t_steps}")
        if self.mc_runs < 1:
            raise ValueError(f"mc_runs must be >= 1, got {self.mc_runs}")
        lo = np.asarray(self.region_min, dtype=float)
        hi = np.asarray(self.region_max, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,) or not np.all(hi > lo):
            raise ValueError("placement region must be a box with positive volume")
        if not self.methods:
            raise ValueError("at least one estimation method is required")
        for name in self.methods:
            if name not in ESTIMATORS:
                raise ValueError(f"unknown method {name!r}; choose from {sorted(ESTIMATORS)}")
        if self.sweep_param is not None:
            if self.sweep_param not in SWEEPABLE_PARAMS:
                raise ValueError(
                    f"sweep parameter must be one of {SWEEPABLE_PARAMS}, got {self.sweep_param!r}"
                )
            if not self.sweep_values:
                raise ValueError("sweep_values must be nonempty when sweep_param is set")


@dataclass
class MethodResult:
    """RMSE, failure count and mean per-fix runtime of one method at one point."""

    rmse: float
    failures: int
    runtime_mean: float


@dataclass
class SweepPoint:
    """Results of all methods plus the mean bound at one sweep value."""

    sweep_value: float | None
    crlb_mean: float
    methods: dict[str, MethodResult] = field(default_factory=dict)


@dataclass
class RmseReport:
    """Assembled benchmark results; one SweepPoint per sweep value."""

    sweep_param: str | None
    points: list[SweepPoint]
    config: ScenarioConfig


def _apply_sweep_value(config: ScenarioConfig, value) -> ScenarioConfig:
    if config.sweep_param in ("n_anchors", "t_steps"):
        return replace(config, **{config.sweep_param: int(value)})
    if config.sweep_param in ("mu_m", "mu_v", "mu_n"):
        noise = replace(config.noise, **{config.sweep_param: float(value)})
        return replace(config, noise=noise)
    raise ValueError(f"cannot apply sweep parameter {config.sweep_param!r}")


def _draw_placement(
    config: ScenarioConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform anchors and target in the region, min separation enforced."""
    lo = np.asarray(config.region_min, dtype=float)
    hi = np.asarray(config.region_max, dtype=float)
    while True:
        anchors = rng.uniform(lo, hi, size=(config.n_anchors, 3))
        target = rng.uniform(lo, hi)
        if np.min(np.linalg.norm(anchors - target, axis=1)) >= MIN_SEPARATION:
            return anchors, target


def _run_point(config: ScenarioConfig, sweep_index: int, sweep_value) -> SweepPoint:
    methods = config.methods
    sq_error = {m: 0.0 for m in methods}
    successes = {m: 0 for m in methods}
    failures = {m: 0 for m in methods}
    runtime = {m: 0.0 for m in methods}
    crlb_sum = 0.0
    crlb_count = 0

    for run in range(config.mc_runs):
        rng = np.random.default_rng([config.seed, sweep_index, run])
        anchors, target = _draw_placement(config, rng)
        profiles = sample_noise_profiles(config.noise, config.n_anchors, rng)
        series = generate_series(
            target, anchors, profiles, config.path_loss, config.t_steps, rng
        )
        try:
            crlb_sum += crlb(
                fim(target, anchors, profiles, config.path_loss, config.t_steps)
            )
            crlb_count += 1
        except (CoincidentNodesError, SingularFisherError):
            pass
        for name in methods:
            estimator = ESTIMATORS[name]
            t0 = time.perf_counter()
            estimate = estimator(series, anchors, config.path_loss)
            runtime[name] += time.perf_counter() - t0
            if estimate.position is None:
                failures[name] += 1
            else:
                sq_error[name] += float(np.sum((estimate.position - target) ** 2))
                successes[name] += 1

    results = {}
    for name in methods:
        rmse = math.sqrt(sq_error[name] / successes[name]) if successes[name] else math.nan
        results[name] = MethodResult(
            rmse=rmse, failures=failures[name], runtime_mean=runtime[name] / config.mc_runs
        )
    crlb_mean = crlb_sum / crlb_count if crlb_count else math.nan
    return SweepPoint(sweep_value=sweep_value, crlb_mean=crlb_mean, methods=results)


def run_monte_carlo(config: ScenarioConfig) -> RmseReport:
    """Run one scenario (no sweep): M randomized runs, all configured methods.

    Runs where a method could not produce a position are counted as failures
    for that method and excluded from its RMSE.
    """
    return RmseReport(
        sweep_param=None, points=[_run_point(config, 0, None)], config=config
    )


def sweep_parameter(config: ScenarioConfig) -> RmseReport:
    """Run the configured sweep: one Monte-Carlo batch per sweep value.

    Sweep point k uses sub-seed stream ``[seed, k, run]`` -- the first point
    of any sweep reproduces a plain :func:`run_monte_carlo` of the same
    config, and appending values never changes earlier points.
    """
    if config.sweep_param is None:
        raise ValueError("config has no sweep parameter")
    points = []
    for index, value in enumerate(config.sweep_values):
        sub_config = _apply_sweep_value(config, value)
        points.append(_run_point(sub_config, index, value))
    return RmseReport(sweep_param=config.sweep_param, points=points, config=config)


def runtime_profile(config: ScenarioConfig) -> dict[str, float]:
    """Mean wall-clock seconds per fix for each configured method.

    Timed region is the estimator call only; series generation and bound
    computation are excluded.
    """
    point = _run_point(config, 0, None)
    return {name: result.runtime_mean for name, result in point.methods.items()}


def _display_sweep_value(sweep_param, value):
    """Convert an internal sweep value to config-file units (degrees for angles)."""
    if value is None:
        return ""
    if sweep_param in ANGLE_PARAMS:
        return repr(math.degrees(value))
    if float(value).is_integer():
        return repr(int(value))
    return repr(float(value))


def config_to_jsonable(config: ScenarioConfig) -> dict:
    """Config echo in config-file units (angles in degrees), for provenance."""
    data = {
        "n_anchors": config.n_anchors,
        "t_steps": config.t_steps,
        "noise": {
            "mu_m": math.degrees(config.noise.mu_m),
            "mu_v": math.degrees(config.noise.mu_v),
            "mu_n": config.noise.mu_n,
        },
        "path_loss": {
            "p0": config.path_loss.p0,
            "d0": config.path_loss.d0,
            "gamma": config.path_loss.gamma,
        },
        "region": {"min": list(config.region_min), "max": list(config.region_max)},
        "mc_runs": config.mc_runs,
        "seed": config.seed,
        "methods": list(config.methods),
    }
    if config.sweep_param is not None:
        values = [
            math.degrees(v) if config.sweep_param in ANGLE_PARAMS else v
            for v in config.sweep_values
        ]
        data["sweep"] = {"param": config.sweep_param, "values": values}
    return data


def write_report_csv(report: RmseReport, path, include_runtime: bool = False) -> None:
    """Write the report as CSV, one row per (method, sweep value).

    Angle sweep values appear in degrees, matching config files.  The
    runtime column is opt-in: wall-clock timings vary between executions,
    and leaving them out keeps result CSVs byte-identical across repeated
    seeded runs.
    """
    columns = REPORT_CSV_COLUMNS + (("runtime_s",) if include_runtime else ())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for point in report.points:
            for name, result in point.methods.items():
                row = [
                    name,
                    report.sweep_param or "",
                    _display_sweep_value(report.sweep_param, point.sweep_value),
                    repr(result.rmse),
                    repr(point.crlb_mean),
                    result.failures,
                ]
                if include_runtime:
                    row.append(repr(result.runtime_mean))
                writer.writerow(row)


def write_report_json(report: RmseReport, path) -> None:
    """Write the report plus a full config echo as JSON."""
    data = {
        "config": config_to_jsonable(report.config),
        "sweep_param": report.sweep_param,
        "points": [
            {
                "sweep_value": (
                    None
                    if point.sweep_value is None
                    else float(_display_sweep_value(report.sweep_param, point.sweep_value))
                ),
                "crlb_m": point.crlb_mean,
                "methods": {
                    name: {
                        "rmse_m": result.rmse,
                        "failures": result.failures,
                        "runtime_s": result.runtime_mean,
                    }
                    for name, result in point.methods.items()
                },
            }
            for point in report.points
        ],
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def write_runtime_csv(profile: dict[str, float], path) -> None:
    """Write a per-method mean-runtime table as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUNTIME_CSV_COLUMNS)
        for name, seconds in profile.items():
            writer.writerow([name, repr(seconds)])
