"""Fisher information and position-error lower bounds for the measurement model.

The root-mean-square error of any unbiased position estimator is bounded
below by sqrt(trace(FIM^{-1})), where the 3x3 Fisher information matrix of
the Gaussian measurement model accumulates, per anchor and channel, the
outer product of the gradient of the noise-free measurement with respect to
the target position, divided by that channel's noise variance, all scaled
by the number of time steps:

    FIM = T * sum_i ( g_az g_az^T / sigma_m_i^2
                    + g_el g_el^T / sigma_v_i^2
                    + g_rss g_rss^T / sigma_n_i^2 )

with delta = x - a_i, d2 = planar (x1-x2) distance, d = full distance:

    g_az  = [-delta_2, delta_1, 0] / d2^2
    g_el  = [delta_1 delta_3 / d2, delta_2 delta_3 / d2, -d2] / d^2
    g_rss = -(10 gamma / ln 10) delta / d^2

The outer-product form is symmetric and positive semidefinite by
construction; the test suite validates it entry by entry against a
finite-difference Hessian of the log-likelihood.  Note the natural-log
constant in the RSS factor: the model's base-10 logarithm contributes
10 gamma / ln 10, and dropping it would misscale the RSS information.

The azimuth and elevation gradients blow up as d2 -> 0 (target straight
above or below an anchor): there the azimuth carries no information about
the position and the matrix is singular.  Heatmaps mask such points.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import CoincidentNodesError, PathLossParams, SEPARATION_EPS, as_point3
from .synthesis import NoiseProfile

HYBRID = "hybrid"
RSS_ONLY = "rss_only"
AOA_ONLY = "aoa_only"
MODES = (HYBRID, RSS_ONLY, AOA_ONLY)

# Condition-number limit above which a Fisher matrix is reported singular.
CONDITION_LIMIT = 1e12

GRID_CSV_COLUMNS = ("x1", "x2", "crlb", "masked")


class SingularFisherError(RuntimeError):
    """The Fisher matrix is singular (or numerically so); no bound exists."""


def fim(
    target,
    anchors,
    profiles: list[NoiseProfile],
    params: PathLossParams,
    t_steps: int,
    mode: str = HYBRID,
) -> np.ndarray:
    """3x3 Fisher information matrix for a target/anchor/noise configuration.

    ``mode`` selects which channels contribute: ``"hybrid"`` all three,
    ``"rss_only"`` just received power, ``"aoa_only"`` just the two angles.
    The result scales linearly with ``t_steps``.

    Raises:
        CoincidentNodesError: the target coincides with an anchor, or (in
            angle-bearing modes) sits on an anchor's vertical axis where the
            azimuth is undefined.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if t_steps < 1:
        raise ValueError(f"t_steps must be >= 1, got {t_steps}")
    x = as_point3(target)
    anchors = np.asarray(anchors, dtype=float)
    if len(profiles) != anchors.shape[0]:
        raise ValueError(
            f"got {anchors.shape[0]} anchors but {len(profiles)} noise profiles"
        )
    rss_factor = 10.0 * params.gamma / math.log(10.0)

    info = np.zeros((3, 3))
    for anchor, profile in zip(anchors, profiles):
        delta = x - anchor
        planar_sq = delta[0] ** 2 + delta[1] ** 2
        dist_sq = planar_sq + delta[2] ** 2
        if dist_sq < SEPARATION_EPS**2:
            raise CoincidentNodesError("information undefined: nodes coincide")
        if mode != RSS_ONLY:
            if planar_sq < SEPARATION_EPS**2:
                raise CoincidentNodesError(
                    "azimuth information undefined: target on an anchor's vertical axis"
                )
            planar = math.sqrt(planar_sq)
            g_az = np.array([-delta[1], delta[0], 0.0]) / planar_sq
            g_el = (
                np.array(
                    [delta[0] * delta[2] / planar, delta[1] * delta[2] / planar, -planar]
                )
                / dist_sq
            )
            info += np.outer(g_az, g_az) / profile.sigma_m**2
            info += np.outer(g_el, g_el) / profile.sigma_v**2
        if mode != AOA_ONLY:
            g_rss = -rss_factor * delta / dist_sq
            info += np.outer(g_rss, g_rss) / profile.sigma_n**2
    return t_steps * info


def crlb(fim_matrix: np.ndarray) -> float:
    """Position-error lower bound sqrt(trace(FIM^{-1})), in meters.

    Raises:
        SingularFisherError: the matrix is singular or its condition number
            exceeds ``CONDITION_LIMIT``.
    """
    matrix = np.asarray(fim_matrix, dtype=float)
    eigenvalues = np.linalg.eigvalsh(matrix)
    if not np.all(np.isfinite(eigenvalues)) or eigenvalues[0] <= 0:
        raise SingularFisherError("Fisher matrix is not positive definite")
    if eigenvalues[-1] / eigenvalues[0] > CONDITION_LIMIT:
        raise SingularFisherError("Fisher matrix condition number exceeds limit")
    return float(math.sqrt(np.trace(np.linalg.inv(matrix))))


@dataclass(frozen=True)
class GridSpec:
    """A regular x1-x2 evaluation grid at fixed height ``x3``."""

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    step: float = 0.5
    x3: float = 0.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError(f"grid step must be > 0, got {self.step}")
        if self.x1_max < self.x1_min or self.x2_max < self.x2_min:
            raise ValueError("grid max must be >= min on both axes")

    def x1_coords(self) -> np.ndarray:
        return np.arange(self.x1_min, self.x1_max + self.step / 2, self.step)

    def x2_coords(self) -> np.ndarray:
        return np.arange(self.x2_min, self.x2_max + self.step / 2, self.step)


@dataclass
class CrlbGrid:
    """Per-point bounds over a grid; singular points are masked, not interpolated.

    ``values[i, j]`` is the bound at (x1_coords[i], x2_coords[j]); it is NaN
    wherever ``mask[i, j]`` is True.
    """

    x1_coords: np.ndarray
    x2_coords: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    mode: str
    x3: float = 0.0

    @property
    def masked_count(self) -> int:
        return int(self.mask.sum())

    def min_point(self) -> tuple[float, float, float]:
        """(x1, x2, value) of the smallest unmasked bound."""
        masked_values = np.where(self.mask, np.inf, self.values)
        flat = int(np.argmin(masked_values))
        i, j = np.unravel_index(flat, self.values.shape)
        return float(self.x1_coords[i]), float(self.x2_coords[j]), float(self.values[i, j])


def crlb_heatmap(
    anchors,
    profiles: list[NoiseProfile],
    params: PathLossParams,
    t_steps: int,
    grid: GridSpec,
    mode: str = HYBRID,
) -> CrlbGrid:
    """Evaluate the bound over a grid of candidate target positions.

    Points where the Fisher matrix is undefined or singular are masked.
    Evaluation order is grid order (x1-major), and every point is
    independent of the others.
    """
    x1 = grid.x1_coords()
    x2 = grid.x2_coords()
    values = np.full((x1.size, x2.size), np.nan)
    mask = np.zeros((x1.size, x2.size), dtype=bool)
    for i, c1 in enumerate(x1):
        for j, c2 in enumerate(x2):
            try:
                values[i, j] = crlb(
                    fim((c1, c2, grid.x3), anchors, profiles, params, t_steps, mode)
                )
            except (CoincidentNodesError, SingularFisherError):
                mask[i, j] = True
    return CrlbGrid(x1, x2, values, mask, mode, grid.x3)


def write_grid_csv(grid: CrlbGrid, path) -> None:
    """Write a grid as CSV: x1, x2, crlb (NaN when masked), masked (0/1)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GRID_CSV_COLUMNS)
        for i, c1 in enumerate(grid.x1_coords):
            for j, c2 in enumerate(grid.x2_coords):
                writer.writerow(
                    [repr(float(c1)), repr(float(c2)), repr(float(grid.values[i, j])), int(grid.mask[i, j])]
                )


def write_grid_matrix(grid: CrlbGrid, path) -> None:
    """Write a grid as a dense whitespace matrix for external plotting tools.

    Rows follow x1, columns follow x2; masked points are NaN.  Two header
    comment lines carry the axis coordinates.
    """
    header = (
        "x1 coords (rows): " + " ".join(repr(float(v)) for v in grid.x1_coords) + "\n"
        "x2 coords (columns): " + " ".join(repr(float(v)) for v in grid.x2_coords)
    )
    np.savetxt(path, grid.values, header=header)
