"""Synthesis of per-anchor azimuth/elevation/RSS measurement time series.

Anchors are heterogeneous: each gets its own noise standard deviations,
drawn once per scenario from exponential distributions, so a few anchors
end up much noisier than others.  The target is static over the window, so
a series is the true value per anchor plus independent zero-mean Gaussian
noise per channel and time step.

Reproducibility contract: all randomness flows through one explicit
``numpy.random.Generator`` (PCG64 via ``numpy.random.default_rng``), and
draws happen in a fixed documented order -- noise profiles first (anchors in
index order; sigma_m, sigma_v, sigma_n within an anchor), then the series
(anchors in index order; the azimuth block, then the elevation block, then
the RSS block within an anchor, each block time-ordered).  A fixed seed
therefore reproduces every series bit for bit.

Angles are generated and stored unwrapped (true angle plus noise, possibly
outside (-pi, pi]).  Consumers only ever take sin/cos of them, and plain
arithmetic time-averaging of wrapped samples would be biased at the +/-pi
seam, so no wrap normalization is applied anywhere.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geometry import PathLossParams, azimuth_true, elevation_true, rss_true

# Exponential draws can land arbitrarily close to zero; sigmas are clamped to
# this floor (radians or dB) so downstream inverse-variance weights stay finite.
SIGMA_FLOOR = 1e-6

SERIES_CSV_COLUMNS = ("anchor_index", "time_step", "azimuth_rad", "elevation_rad", "rss_db")


class SeriesFormatError(ValueError):
    """A series CSV file does not match the expected schema.

    ``row`` is the 1-based line number in the file when the problem is
    attributable to a single line.
    """

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


@dataclass(frozen=True)
class NoiseProfile:
    """Measurement-noise standard deviations of one anchor.

    ``sigma_m``/``sigma_v`` in radians (azimuth/elevation), ``sigma_n`` in dB.
    """

    sigma_m: float
    sigma_v: float
    sigma_n: float

    def __post_init__(self):
        for name in ("sigma_m", "sigma_v", "sigma_n"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class HeteroNoiseSpec:
    """Means of the exponential distributions the per-anchor sigmas are drawn from.

    ``mu_m``/``mu_v`` in radians, ``mu_n`` in dB.
    """

    mu_m: float
    mu_v: float
    mu_n: float

    def __post_init__(self):
        for name in ("mu_m", "mu_v", "mu_n"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")


@dataclass
class MeasurementSeries:
    """Rectangular (n_anchors, t_steps) arrays of azimuth, elevation, RSS readings."""

    azimuth: np.ndarray
    elevation: np.ndarray
    rss: np.ndarray

    def __post_init__(self):
        self.azimuth = np.asarray(self.azimuth, dtype=float)
        self.elevation = np.asarray(self.elevation, dtype=float)
        self.rss = np.asarray(self.rss, dtype=float)
        shape = self.azimuth.shape
        if len(shape) != 2 or shape[0] < 1 or shape[1] < 1:
            raise ValueError(f"series arrays must be (n_anchors, t_steps), got {shape}")
        if self.elevation.shape != shape or self.rss.shape != shape:
            raise ValueError("azimuth, elevation and rss arrays must have equal shapes")

    @property
    def n_anchors(self) -> int:
        return self.azimuth.shape[0]

    @property
    def t_steps(self) -> int:
        return self.azimuth.shape[1]


@dataclass
class AveragedMeasurements:
    """Per-anchor arithmetic means over time: azimuth, elevation (rad), rss (dB)."""

    azimuth: np.ndarray
    elevation: np.ndarray
    rss: np.ndarray


def sample_noise_profiles(
    spec: HeteroNoiseSpec, n_anchors: int, rng: np.random.Generator
) -> list[NoiseProfile]:
    """Draw one noise profile per anchor from the exponential hyper-distributions.

    Each sigma is an independent exponential draw with mean equal to the
    corresponding ``mu``, clamped to ``SIGMA_FLOOR``.  Draw order is part of
    the reproducibility contract (see module docstring).
    """
    if n_anchors < 1:
        raise ValueError(f"n_anchors must be >= 1, got {n_anchors}")
    profiles = []
    for _ in range(n_anchors):
        profiles.append(
            NoiseProfile(
                sigma_m=max(rng.exponential(spec.mu_m), SIGMA_FLOOR),
                sigma_v=max(rng.exponential(spec.mu_v), SIGMA_FLOOR),
                sigma_n=max(rng.exponential(spec.mu_n), SIGMA_FLOOR),
            )
        )
    return profiles


def generate_series(
    target,
    anchors,
    profiles: list[NoiseProfile],
    params: PathLossParams,
    t_steps: int,
    rng: np.random.Generator,
) -> MeasurementSeries:
    """Generate a measurement series: true values plus per-channel Gaussian noise.

    Noise is independent across anchors, channels and time steps.  Draw order
    is part of the reproducibility contract (see module docstring).

    Raises:
        CoincidentNodesError: the target coincides with an anchor (propagated
            from the noise-free geometry).
    """
    anchors = np.asarray(anchors, dtype=float)
    if anchors.ndim != 2 or anchors.shape[1] != 3:
        raise ValueError(f"anchors must be an (N, 3) array, got shape {anchors.shape}")
    if len(profiles) != anchors.shape[0]:
        raise ValueError(
            f"got {anchors.shape[0]} anchors but {len(profiles)} noise profiles"
        )
    if t_steps < 1:
        raise ValueError(f"t_steps must be >= 1, got {t_steps}")

    n = anchors.shape[0]
    azimuth = np.empty((n, t_steps))
    elevation = np.empty((n, t_steps))
    rss = np.empty((n, t_steps))
    for i in range(n):
        az = azimuth_true(target, anchors[i])
        el = elevation_true(target, anchors[i])
        power = rss_true(target, anchors[i], params)
        azimuth[i] = az + rng.normal(0.0, profiles[i].sigma_m, t_steps)
        elevation[i] = el + rng.normal(0.0, profiles[i].sigma_v, t_steps)
        rss[i] = power + rng.normal(0.0, profiles[i].sigma_n, t_steps)
    return MeasurementSeries(azimuth, elevation, rss)


def time_average(series: MeasurementSeries) -> AveragedMeasurements:
    """Arithmetic mean over time per anchor and channel.

    Plain means, no angle wrapping (see module docstring).
    """
    return AveragedMeasurements(
        azimuth=series.azimuth.mean(axis=1),
        elevation=series.elevation.mean(axis=1),
        rss=series.rss.mean(axis=1),
    )


def write_series_csv(series: MeasurementSeries, path) -> None:
    """Write a series as CSV, one row per (anchor, time step), anchor-major.

    Columns: anchor_index, time_step (both 0-based), azimuth_rad,
    elevation_rad, rss_db.  Floats use shortest round-trip formatting, so a
    write/read cycle is lossless and repeated writes are byte-identical.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_CSV_COLUMNS)
        for i in range(series.n_anchors):
            for t in range(series.t_steps):
                writer.writerow(
                    [
                        i,
                        t,
                        repr(float(series.azimuth[i, t])),
                        repr(float(series.elevation[i, t])),
                        repr(float(series.rss[i, t])),
                    ]
                )


def read_series_csv(path) -> MeasurementSeries:
    """Read a series CSV produced by :func:`write_series_csv`.

    Rows may appear in any order but must cover every (anchor, time step)
    pair exactly once, with 0-based contiguous indices.

    Raises:
        SeriesFormatError: malformed header, row, or an incomplete/duplicated
            (anchor, time) grid; carries the offending 1-based row number
            when one line is to blame.
    """
    entries: dict[tuple[int, int], tuple[float, float, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SeriesFormatError("empty file")
        if [h.strip() for h in header] != list(SERIES_CSV_COLUMNS):
            raise SeriesFormatError(
                f"expected header {','.join(SERIES_CSV_COLUMNS)}, got {','.join(header)}",
                row=1,
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise SeriesFormatError(f"expected 5 fields, got {len(row)}", row=line_no)
            try:
                i = int(row[0])
                t = int(row[1])
                values = (float(row[2]), float(row[3]), float(row[4]))
            except ValueError as exc:
                raise SeriesFormatError(str(exc), row=line_no) from exc
            if i < 0 or t < 0:
                raise SeriesFormatError("indices must be >= 0", row=line_no)
            if not all(math.isfinite(v) for v in values):
                raise SeriesFormatError("values must be finite", row=line_no)
            if (i, t) in entries:
                raise SeriesFormatError(f"duplicate entry for anchor {i}, step {t}", row=line_no)
            entries[(i, t)] = values

    if not entries:
        raise SeriesFormatError("no data rows")
    n = max(i for i, _ in entries) + 1
    t_steps = max(t for _, t in entries) + 1
    if len(entries) != n * t_steps:
        raise SeriesFormatError(
            f"incomplete grid: {len(entries)} rows for {n} anchors x {t_steps} steps"
        )
    azimuth = np.empty((n, t_steps))
    elevation = np.empty((n, t_steps))
    rss = np.empty((n, t_steps))
    for (i, t), (az, el, power) in entries.items():
        azimuth[i, t] = az
        elevation[i, t] = el
        rss[i, t] = power
    return MeasurementSeries(azimuth, elevation, rss)
