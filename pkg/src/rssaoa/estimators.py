"""Closed-form position estimators built on 3N linearized measurement equations.

For anchor i at known position a_i, the time-averaged azimuth phi_i,
elevation alpha_i and received power P_i give three relations that are
linear in the unknown target position x (u_i is the unit direction vector
built from the averaged angles, k = [0, 0, 1]):

    azimuth    [-sin phi_i, cos phi_i, 0] . (x - a_i)   ~ 0
    elevation  (cos alpha_i * u_i - k) . (x - a_i)      ~ 0
    range      lambda_i * u_i . (x - a_i)               ~ beta

with lambda_i = 10^(P_i / (10 gamma)) and beta = d0 * 10^(p0 / (10 gamma)).
The azimuth row is the horizontal normal to the measured bearing; the
elevation row cancels the vertical offset because u_i . (x - a_i) is the
distance; the range row works because lambda_i times the distance implied
by the measured power equals beta identically under the log-distance model.

Stacked over anchors this is a 3N x 3 weighted least-squares problem
min ||W (A x - b)||^2 with a closed-form solution.  Three weightings are
provided:

* ``estimate_ls`` -- unit weights;
* ``estimate_wls_d`` -- range-based weights w_i = 1 - d_i / sum(d), which
  down-weight the far (weaker-signal) anchors;
* ``estimate_two_stage`` -- solves with range-based weights for a rough
  fix, evaluates every equation's residual at that fix for each individual
  time step, and re-solves with each equation weighted by the inverse
  standard deviation of its residuals.  The residual spread of an equation
  tracks that anchor's actual noise level, so the second stage adapts to
  heterogeneous anchors without being told their noise levels.

All functions are pure; concurrent use is unrestricted.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import PathLossParams
from .synthesis import AveragedMeasurements, MeasurementSeries, time_average

# Estimated residual variances are floored here (squared units) so that
# zero-noise data cannot produce infinite second-stage weights.
VARIANCE_FLOOR = 1e-10

# A weighted normal matrix A^T W^2 A whose condition number exceeds this is
# treated as singular and flagged instead of solved.
CONDITION_LIMIT = 1e12

STAGE1 = "stage1"
STAGE2 = "stage2"
BASELINE = "baseline"

K_VERTICAL = np.array([0.0, 0.0, 1.0])


@dataclass
class LinearSystem:
    """The stacked 3N x 3 weighted least-squares problem.

    Rows are ordered: N azimuth rows, then N elevation rows, then N range
    rows.  ``weights`` is the diagonal of W, all entries positive and finite.
    """

    design: np.ndarray
    rhs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.design = np.asarray(self.design, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        rows = self.design.shape[0]
        if self.design.ndim != 2 or self.design.shape[1] != 3 or rows % 3 != 0:
            raise ValueError(f"design must be (3N, 3), got {self.design.shape}")
        if self.rhs.shape != (rows,) or self.weights.shape != (rows,):
            raise ValueError("rhs and weights must match the design row count")
        if not np.all(np.isfinite(self.design)) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("design and rhs must be finite")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("weights must be positive and finite")

    @property
    def n_anchors(self) -> int:
        return self.design.shape[0] // 3


@dataclass
class Estimate:
    """A solver result.

    ``position`` is None when the system was too ill-conditioned to solve;
    ``condition_flag`` is also set when a two-stage solve had to fall back
    to its first stage.
    """

    position: np.ndarray | None
    stage: str
    condition_flag: bool = False


@dataclass
class ResidualStats:
    """Per-anchor residual variances for the three equation families."""

    var_azimuth: np.ndarray
    var_elevation: np.ndarray
    var_rss: np.ndarray

    def stacked(self) -> np.ndarray:
        """Variances in system row order (azimuth block, elevation, range)."""
        return np.concatenate([self.var_azimuth, self.var_elevation, self.var_rss])


def _direction_vectors(azimuth: np.ndarray, elevation: np.ndarray) -> np.ndarray:
    """Unit direction vectors for arrays of angles; shape (..., 3)."""
    sin_el = np.sin(elevation)
    return np.stack(
        [np.cos(azimuth) * sin_el, np.sin(azimuth) * sin_el, np.cos(elevation)],
        axis=-1,
    )


def rss_scale(power_db, params: PathLossParams) -> np.ndarray:
    """lambda = 10^(P / (10 gamma)): the factor that turns a measured power
    into the reciprocal of its implied distance, times beta."""
    return 10.0 ** (np.asarray(power_db, dtype=float) / (10.0 * params.gamma))


def rss_offset(params: PathLossParams) -> float:
    """beta = d0 * 10^(p0 / (10 gamma)), the constant of the range rows."""
    return params.d0 * 10.0 ** (params.p0 / (10.0 * params.gamma))


def build_linear_system(
    avg: AveragedMeasurements, anchors, params: PathLossParams, weights
) -> LinearSystem:
    """Assemble the 3N x 3 system from time-averaged measurements.

    Row i is the azimuth normal c_i = [-sin phi_i, cos phi_i, 0] with rhs
    c_i . a_i; row N+i is (cos alpha_i u_i - k) with rhs (cos alpha_i u_i - k) . a_i;
    row 2N+i is lambda_i u_i with rhs lambda_i u_i . a_i + beta.
    """
    anchors = np.asarray(anchors, dtype=float)
    phi = np.asarray(avg.azimuth, dtype=float)
    alpha = np.asarray(avg.elevation, dtype=float)
    cos_alpha = np.cos(alpha)
    u = _direction_vectors(phi, alpha)
    c = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=1)
    elevation_rows = cos_alpha[:, None] * u - K_VERTICAL
    range_rows = rss_scale(avg.rss, params)[:, None] * u
    beta = rss_offset(params)
    design = np.vstack([c, elevation_rows, range_rows])
    rhs = np.concatenate(
        [
            np.sum(c * anchors, axis=1),
            np.sum(elevation_rows * anchors, axis=1),
            np.sum(range_rows * anchors, axis=1) + beta,
        ]
    )
    return LinearSystem(design, rhs, weights)


def stage1_weights(avg_rss, params: PathLossParams) -> np.ndarray:
    """Range-based weights, one value per anchor repeated across all three rows.

    The measured power implies a distance d_i = d0 * 10^((p0 - P_i)/(10 gamma));
    the weight is w_i = 1 - d_i / sum(d), in (0, 1) for N >= 2.

    Raises:
        ValueError: fewer than two anchors (the single weight would be zero).
    """
    power = np.asarray(avg_rss, dtype=float)
    if power.ndim != 1 or power.size < 2:
        raise ValueError("range-based weights need at least 2 anchors")
    implied = params.d0 * 10.0 ** ((params.p0 - power) / (10.0 * params.gamma))
    w = 1.0 - implied / implied.sum()
    return np.tile(w, 3)


def solve_lwls(system: LinearSystem, stage: str = BASELINE) -> Estimate:
    """Closed-form minimizer of ||W (A x - b)||^2.

    Mathematically x = (A^T W^2 A)^{-1} A^T W^2 b; computed via an SVD of the
    weighted design W A instead of an explicit inverse.  When the implied
    normal-matrix condition number exceeds ``CONDITION_LIMIT`` the system is
    flagged and no position is returned.
    """
    weighted_design = system.weights[:, None] * system.design
    weighted_rhs = system.weights * system.rhs
    u, s, vt = np.linalg.svd(weighted_design, full_matrices=False)
    if not np.all(np.isfinite(s)) or s[-1] <= 0 or (s[0] / s[-1]) ** 2 > CONDITION_LIMIT:
        return Estimate(position=None, stage=stage, condition_flag=True)
    position = vt.T @ ((u.T @ weighted_rhs) / s)
    return Estimate(position=position, stage=stage, condition_flag=False)


def compute_residuals(
    series: MeasurementSeries,
    avg_elevation,
    rough,
    anchors,
    params: PathLossParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-(anchor, time step) residuals of the three equation families at a fix.

    Each time step's raw measurements are substituted into the azimuth,
    elevation and range relations with x replaced by the rough fix.  The
    elevation family keeps the time-averaged cos(alpha_i) as its leading
    factor while using the per-step direction vector, matching how the
    averaged system's elevation rows are built.

    Returns three (n_anchors, t_steps) arrays.
    """
    anchors = np.asarray(anchors, dtype=float)
    rough = np.asarray(rough, dtype=float)
    offset = rough - anchors  # (N, 3)
    phi = series.azimuth
    alpha = series.elevation
    cos_avg_alpha = np.cos(np.asarray(avg_elevation, dtype=float))

    sin_alpha = np.sin(alpha)
    u_dot_offset = (
        np.cos(phi) * sin_alpha * offset[:, 0, None]
        + np.sin(phi) * sin_alpha * offset[:, 1, None]
        + np.cos(alpha) * offset[:, 2, None]
    )
    r1 = -np.sin(phi) * offset[:, 0, None] + np.cos(phi) * offset[:, 1, None]
    r2 = cos_avg_alpha[:, None] * u_dot_offset - offset[:, 2, None]
    r3 = rss_scale(series.rss, params) * u_dot_offset - rss_offset(params)
    return r1, r2, r3


def residual_variances(residuals) -> ResidualStats:
    """Mean squared residual per anchor and family, floored at VARIANCE_FLOOR.

    The mean square (not the signed mean, which can be negative) is what can
    serve as a variance estimate for inverse-variance weighting.
    """
    r1, r2, r3 = residuals

    def mean_square(r: np.ndarray) -> np.ndarray:
        return np.maximum(np.mean(np.square(r), axis=1), VARIANCE_FLOOR)

    return ResidualStats(mean_square(r1), mean_square(r2), mean_square(r3))


def estimate_two_stage(
    series: MeasurementSeries, anchors, params: PathLossParams
) -> Estimate:
    """Two-stage solve: range-weighted rough fix, then residual-variance weights.

    Stage 2 reuses the averaged design matrix and right-hand side unchanged;
    only the weights differ (w = 1 / sigma of each equation's residuals).
    Falls back to the stage-1 estimate with ``condition_flag`` set if the
    second stage is singular.
    """
    avg = time_average(series)
    system = build_linear_system(avg, anchors, params, stage1_weights(avg.rss, params))
    rough = solve_lwls(system, stage=STAGE1)
    if rough.position is None:
        return rough
    residuals = compute_residuals(series, avg.elevation, rough.position, anchors, params)
    stats = residual_variances(residuals)
    weights = 1.0 / np.sqrt(stats.stacked())
    refined = solve_lwls(
        LinearSystem(system.design, system.rhs, weights), stage=STAGE2
    )
    if refined.position is None:
        return Estimate(rough.position, STAGE1, condition_flag=True)
    return refined


def estimate_ls(series: MeasurementSeries, anchors, params: PathLossParams) -> Estimate:
    """Plain least squares on the time-averaged system (all weights 1)."""
    avg = time_average(series)
    anchors = np.asarray(anchors, dtype=float)
    system = build_linear_system(avg, anchors, params, np.ones(3 * anchors.shape[0]))
    return solve_lwls(system, stage=BASELINE)


def estimate_wls_d(series: MeasurementSeries, anchors, params: PathLossParams) -> Estimate:
    """Range-weighted least squares on the time-averaged system.

    This is exactly the first stage of :func:`estimate_two_stage`, exposed
    as a baseline in its own right.
    """
    avg = time_average(series)
    system = build_linear_system(avg, anchors, params, stage1_weights(avg.rss, params))
    return solve_lwls(system, stage=BASELINE)


ESTIMATORS = {
    "ls": estimate_ls,
    "wls-d": estimate_wls_d,
    "two-stage": estimate_two_stage,
}
