"""JSON configuration files: parsing, validation and shipped presets.

Unit convention at the file boundary: angles (noise means, noise sigmas)
are degrees in JSON and converted to radians here; received-power values
are dB on both sides.  Nothing outside this module converts units.
"""

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .bench import ScenarioConfig
from .crlb import GridSpec, MODES
from .geometry import PathLossParams
from .synthesis import HeteroNoiseSpec, NoiseProfile


class ConfigError(ValueError):
    """A configuration file is invalid; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


@dataclass
class SimulateConfig:
    """Inputs for one fixed-scene series generation (and for `estimate`)."""

    anchors: np.ndarray
    target: np.ndarray | None
    t_steps: int
    path_loss: PathLossParams
    seed: int
    profiles: list[NoiseProfile] | None = None
    noise: HeteroNoiseSpec | None = None


@dataclass
class MapConfig:
    """Inputs for a bound heatmap over a fixed scene."""

    anchors: np.ndarray
    profiles: list[NoiseProfile]
    t_steps: int
    path_loss: PathLossParams
    grid: GridSpec
    mode: str


def _load_json(source) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("<file>", "top level must be a JSON object")
    return data


def _get(data: dict, field: str, kind, required: bool = True, default=None):
    if field not in data:
        if required:
            raise ConfigError(field, "missing")
        return default
    value = data[field]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(field, f"expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigError(field, f"expected {kind.__name__}, got {value!r}")
    return value


def _positive(field: str, value: float) -> float:
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(field, f"must be finite and > 0, got {value}")
    return value


def _parse_path_loss(data: dict) -> PathLossParams:
    sub = _get(data, "path_loss", dict)
    try:
        return PathLossParams(
            p0=_get(sub, "p0", float),
            d0=_get(sub, "d0", float),
            gamma=_get(sub, "gamma", float),
        )
    except ConfigError as exc:
        raise ConfigError(f"path_loss.{exc.field}", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("path_loss", str(exc)) from exc


def _parse_noise_spec(sub: dict, prefix: str) -> HeteroNoiseSpec:
    try:
        return HeteroNoiseSpec(
            mu_m=math.radians(_positive("mu_m", _get(sub, "mu_m", float))),
            mu_v=math.radians(_positive("mu_v", _get(sub, "mu_v", float))),
            mu_n=_positive("mu_n", _get(sub, "mu_n", float)),
        )
    except ConfigError as exc:
        raise ConfigError(f"{prefix}.{exc.field}", str(exc)) from exc


def _parse_profiles(raw, field: str) -> list[NoiseProfile]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(field, "expected a nonempty list of profile objects")
    profiles = []
    for index, item in enumerate(raw):
        name = f"{field}[{index}]"
        if not isinstance(item, dict):
            raise ConfigError(name, "expected an object")
        try:
            profiles.append(
                NoiseProfile(
                    sigma_m=math.radians(_get(item, "sigma_m", float)),
                    sigma_v=math.radians(_get(item, "sigma_v", float)),
                    sigma_n=_get(item, "sigma_n", float),
                )
            )
        except ConfigError as exc:
            raise ConfigError(f"{name}.{exc.field}", str(exc)) from exc
        except ValueError as exc:
            raise ConfigError(name, str(exc)) from exc
    return profiles


def _parse_points(raw, field: str) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(field, "expected a nonempty list of [x1, x2, x3] points")
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, f"not numeric: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != 3 or not np.all(np.isfinite(arr)):
        raise ConfigError(field, "each point must be a finite [x1, x2, x3] triple")
    return arr


def load_scenario_config(source) -> ScenarioConfig:
    """Parse a benchmark scenario config (see README for the schema)."""
    data = _load_json(source)
    noise = _parse_noise_spec(_get(data, "noise", dict), "noise")
    region = _get(data, "region", dict)
    region_min = _get(region, "min", list)
    region_max = _get(region, "max", list)
    methods = _get(data, "methods", list, required=False, default=["ls", "wls-d", "two-stage"])

    sweep_param = None
    sweep_values: tuple[float, ...] = ()
    sweep = _get(data, "sweep", dict, required=False)
    if sweep is not None:
        sweep_param = _get(sweep, "param", str)
        raw_values = _get(sweep, "values", list)
        if not raw_values:
            raise ConfigError("sweep.values", "must be nonempty")
        try:
            values = [float(v) for v in raw_values]
        except (TypeError, ValueError):
            raise ConfigError("sweep.values", f"must be numeric, got {raw_values!r}")
        if sweep_param in ("mu_m", "mu_v"):
            values = [math.radians(v) for v in values]
        sweep_values = tuple(values)

    try:
        return ScenarioConfig(
            n_anchors=_get(data, "n_anchors", int),
            t_steps=_get(data, "t_steps", int),
            noise=noise,
            path_loss=_parse_path_loss(data),
            region_min=tuple(float(v) for v in region_min),
            region_max=tuple(float(v) for v in region_max),
            mc_runs=_get(data, "mc_runs", int),
            seed=_get(data, "seed", int),
            methods=tuple(methods),
            sweep_param=sweep_param,
            sweep_values=sweep_values,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("<scenario>", str(exc)) from exc


def load_simulate_config(source) -> SimulateConfig:
    """Parse a fixed-scene config for series generation / estimation."""
    data = _load_json(source)
    anchors = _parse_points(_get(data, "anchors", list), "anchors")
    target = None
    if "target" in data:
        target = _parse_points([data["target"]], "target")[0]

    profiles = None
    noise = None
    if "noise_profiles" in data:
        profiles = _parse_profiles(data["noise_profiles"], "noise_profiles")
        if len(profiles) != anchors.shape[0]:
            raise ConfigError(
                "noise_profiles",
                f"expected one per anchor ({anchors.shape[0]}), got {len(profiles)}",
            )
    elif "noise" in data:
        noise = _parse_noise_spec(_get(data, "noise", dict), "noise")
    else:
        raise ConfigError("noise_profiles", "either noise_profiles or noise is required")

    try:
        t_steps = _get(data, "t_steps", int)
        if t_steps < 1:
            raise ConfigError("t_steps", f"must be >= 1, got {t_steps}")
        return SimulateConfig(
            anchors=anchors,
            target=target,
            t_steps=t_steps,
            path_loss=_parse_path_loss(data),
            seed=_get(data, "seed", int, required=False, default=0),
            profiles=profiles,
            noise=noise,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("<simulate>", str(exc)) from exc


def load_map_config(source) -> MapConfig:
    """Parse a bound-heatmap config."""
    data = _load_json(source)
    anchors = _parse_points(_get(data, "anchors", list), "anchors")
    profiles = _parse_profiles(_get(data, "noise_profiles", list), "noise_profiles")
    if len(profiles) != anchors.shape[0]:
        raise ConfigError(
            "noise_profiles",
            f"expected one per anchor ({anchors.shape[0]}), got {len(profiles)}",
        )
    grid_data = _get(data, "grid", dict)
    x1 = _get(grid_data, "x1", list)
    x2 = _get(grid_data, "x2", list)
    if len(x1) != 2 or len(x2) != 2:
        raise ConfigError("grid.x1", "axis ranges must be [min, max] pairs")
    mode = _get(data, "mode", str, required=False, default="hybrid")
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}, got {mode!r}")
    try:
        grid = GridSpec(
            x1_min=float(x1[0]),
            x1_max=float(x1[1]),
            x2_min=float(x2[0]),
            x2_max=float(x2[1]),
            step=_get(grid_data, "step", float, required=False, default=0.5),
            x3=_get(grid_data, "x3", float, required=False, default=0.0),
        )
        t_steps = _get(data, "t_steps", int)
        if t_steps < 1:
            raise ConfigError("t_steps", f"must be >= 1, got {t_steps}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("grid", str(exc)) from exc
    return MapConfig(
        anchors=anchors,
        profiles=profiles,
        t_steps=t_steps,
        path_loss=_parse_path_loss(data),
        grid=grid,
        mode=mode,
    )


def preset_names() -> list[str]:
    """Names of the shipped preset configs."""
    root = resources.files("rssaoa") / "presets"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    """Load a shipped preset config by name."""
    root = resources.files("rssaoa") / "presets"
    candidate = root / f"{name}.json"
    if not candidate.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {preset_names()}")
    return json.loads(candidate.read_text())
