"""Noise-free geometry and radio relations between a target and anchor nodes.

Coordinates are 3D Cartesian, in meters.  Angles follow the spherical
convention used throughout the package: azimuth is the four-quadrant bearing
in the x1-x2 plane with range (-pi, pi], and elevation is the polar angle
measured from the +x3 axis with range [0, pi].  With these conventions

    unit_vector(azimuth, elevation) . (target - anchor) == |target - anchor|

holds identically for the true angles, which is what makes the linearized
estimators in :mod:`rssaoa.estimators` work.  Received power follows the
log-distance path-loss model.

All functions are pure and safe for concurrent use.
"""

import math
from dataclasses import dataclass

import numpy as np

# Below this node separation (meters) angles and received power are treated
# as undefined rather than risking division by ~0.
SEPARATION_EPS = 1e-9


class CoincidentNodesError(ValueError):
    """A target/anchor pair is too close for the requested quantity to exist."""


@dataclass(frozen=True)
class PathLossParams:
    """Log-distance path-loss model: ``p0`` dB received at reference distance ``d0``.

    ``gamma`` is the environment-dependent decay exponent; received power
    drops by ``10 * gamma`` dB per decade of distance.
    """

    p0: float
    d0: float
    gamma: float

    def __post_init__(self):
        for name in ("p0", "d0", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"path-loss parameter {name} must be finite")
        if self.d0 <= 0:
            raise ValueError(f"reference distance d0 must be > 0, got {self.d0}")
        if self.gamma <= 0:
            raise ValueError(f"path-loss exponent gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class Angles:
    """An azimuth/elevation pair in radians, range-checked on construction."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not -math.pi < self.azimuth <= math.pi:
            raise ValueError(f"azimuth must lie in (-pi, pi], got {self.azimuth}")
        if not 0.0 <= self.elevation <= math.pi:
            raise ValueError(f"elevation must lie in [0, pi], got {self.elevation}")


def as_point3(point) -> np.ndarray:
    """Validate and return a position as a finite float 3-vector."""
    arr = np.asarray(point, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"coordinates must be finite, got {arr}")
    return arr


def distance(target, anchor) -> float:
    """Euclidean distance between two positions, meters."""
    return float(np.linalg.norm(as_point3(target) - as_point3(anchor)))


def azimuth_true(target, anchor) -> float:
    """Four-quadrant bearing of the target seen from the anchor, in (-pi, pi].

    Raises:
        CoincidentNodesError: the nodes project onto (nearly) the same point
            in the x1-x2 plane, where the bearing is undefined.
    """
    t = as_point3(target)
    a = as_point3(anchor)
    dx1 = t[0] - a[0]
    dx2 = t[1] - a[1]
    if math.hypot(dx1, dx2) < SEPARATION_EPS:
        raise CoincidentNodesError(
            "azimuth undefined: nodes coincide in the x1-x2 plane"
        )
    return math.atan2(dx2, dx1)


def elevation_true(target, anchor) -> float:
    """Polar angle of the target seen from the anchor, in [0, pi].

    0 means the target is straight above the anchor (+x3), pi straight below.
    """
    t = as_point3(target)
    a = as_point3(anchor)
    d = float(np.linalg.norm(t - a))
    if d < SEPARATION_EPS:
        raise CoincidentNodesError("elevation undefined: nodes coincide")
    # clip: rounding can push |dz| / d a hair past 1 for near-vertical pairs
    return math.acos(min(1.0, max(-1.0, (t[2] - a[2]) / d)))


def angles_true(target, anchor) -> Angles:
    """Both true angles at once."""
    return Angles(azimuth_true(target, anchor), elevation_true(target, anchor))


def rss_true(target, anchor, params: PathLossParams) -> float:
    """Noise-free received power in dB under the log-distance model."""
    t = as_point3(target)
    a = as_point3(anchor)
    d = float(np.linalg.norm(t - a))
    if d < SEPARATION_EPS:
        raise CoincidentNodesError("received power undefined: nodes coincide")
    return params.p0 - 10.0 * params.gamma * math.log10(d / params.d0)


def unit_vector(azimuth: float, elevation: float) -> np.ndarray:
    """Unit direction vector [cos(az) sin(el), sin(az) sin(el), cos(el)].

    Dotting it with (target - anchor) recovers the full 3D distance when the
    angles are exact.
    """
    sin_el = math.sin(elevation)
    return np.array(
        [math.cos(azimuth) * sin_el, math.sin(azimuth) * sin_el, math.cos(elevation)]
    )
