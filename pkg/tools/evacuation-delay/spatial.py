"""
Spatial Poisson models of primary (TV receiver) and secondary user placement.

Users are Poisson point processes on a flat torus; guard-zone membership is
pure disk geometry of radius r_p.
"""

import logging
import math

import numpy as np
from scipy import special, stats

from models import Point2D, ScenarioValidationError
from rng import make_rng

logger = logging.getLogger(__name__)

# Truncate Poisson supports once the cumulative mass reaches 1 - POISSON_TAIL
POISSON_TAIL = 1e-12


def guard_zone_area(r_p):
    return math.pi * r_p * r_p


def expected_sus_in_guard_zone(spatial):
    """E(n) = lambda_s * pi * r_p^2, the mean SU count in a PU's guard zone."""
    return spatial.lambda_s * guard_zone_area(spatial.r_p)


def expected_pus_in_range(spatial):
    """E(m) = lambda_p * pi * r_p^2, the mean PU count in an SBS's range."""
    return spatial.lambda_p * guard_zone_area(spatial.r_p)


def density_for_expected_count(expected, r_p):
    """Density giving `expected` users on average inside a disk of radius r_p."""
    if expected < 0 or r_p <= 0:
        raise ScenarioValidationError("expected count must be >= 0 and r_p > 0")
    return expected / guard_zone_area(r_p)


def _poisson_pmf(k, mean):
    if not float(k).is_integer() or k < 0:
        raise ScenarioValidationError(f"count k must be a non-negative integer, got {k!r}")
    # log domain; xlogy(0, 0) == 0 keeps Pr(0) = 1 for an empty process
    log_p = special.xlogy(k, mean) - mean - special.gammaln(k + 1)
    return float(np.exp(log_p))


def pmf_sus_in_guard_zone(k, spatial):
    """Pr(n = k): Poisson PMF of SUs inside one guard zone."""
    return _poisson_pmf(k, expected_sus_in_guard_zone(spatial))


def pmf_pus_in_range(k, spatial):
    """Pr(m = k): Poisson PMF of PUs inside one SBS interference range."""
    return _poisson_pmf(k, expected_pus_in_range(spatial))


def poisson_support(mean):
    """Smallest K with Pr(X <= K) >= 1 - POISSON_TAIL."""
    if mean <= 0:
        return 0
    return int(stats.poisson.isf(POISSON_TAIL, mean))


def sample_ppp(density, region, seed, cap=None):
    """
    Sample a homogeneous Poisson point process over the region.

    Args:
        density: Points per m^2 (>= 0)
        region: SpatialParams supplying region_width/region_height
        seed: Integer seed or numpy Generator
        cap: Optional maximum number of points kept

    Returns:
        List of Point2D, uniform over the region
    """
    if density < 0:
        raise ScenarioValidationError("density must be >= 0")
    rng = make_rng(seed)

    count = int(rng.poisson(density * region.area)) if density > 0 else 0
    if cap is not None and count > cap:
        logger.debug(f"PPP draw of {count} points capped at {cap}")
        count = cap
    return sample_uniform_points(count, region, rng)


def sample_uniform_points(count, region, seed):
    """Exactly `count` points i.i.d. uniform over the region."""
    if count < 0:
        raise ScenarioValidationError(f"point count must be >= 0, got {count}")
    rng = make_rng(seed)
    xs = rng.uniform(0.0, region.region_width, size=int(count))
    ys = rng.uniform(0.0, region.region_height, size=int(count))
    return [Point2D(float(x), float(y)) for x, y in zip(xs, ys)]


def torus_delta(a, b, extent):
    d = abs(a - b) % extent
    return min(d, extent - d)


def torus_distance(p, q, width, height):
    """Wrap-around Euclidean distance between two points on a width x height torus."""
    return math.hypot(torus_delta(p.x, q.x, width), torus_delta(p.y, q.y, height))
