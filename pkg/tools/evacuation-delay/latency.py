"""
Latency models: network latency, secondary-link handover delay and
spectrum-manager job service time.

Each model has closed-form moments and a sampler taking an explicit numpy
Generator. All sampled delays are in ms and never negative.
"""

import logging
import math

import numpy as np
from scipy import stats

from models import ScenarioValidationError

logger = logging.getLogger(__name__)

# =============================================================================
# Database Size -> Per-Query Time Anchors
# =============================================================================

# (records, ms per query) measurements; interpolated log-linearly
DB_PROFILES = {
    # in-memory store: 6 ms up to 1 million records, 100 ms at 45 million
    "in-memory": ((1.0e6, 6.0), (45.0e6, 100.0)),
    # disk-based store: 6 / 26 / 220 ms at 1,200 / 4,800 / 19,000 records
    "disk": ((1200.0, 6.0), (4800.0, 26.0), (19000.0, 220.0)),
}


def _draws(value, size):
    return float(value) if size is None else np.asarray(value, dtype=float)


# =============================================================================
# Network Latency
# =============================================================================

def network_latency_mean(x, net):
    """
    Mean round-trip network latency a*x + b (ms) at distance x (miles).

    Args:
        x: Distance between users and the spectrum manager in miles
        net: NetworkParams

    Returns:
        Mean latency in ms; fixed_rtt_override when set
    """
    if x < 0:
        raise ScenarioValidationError(f"distance must be >= 0 miles, got {x}")
    if net.fixed_rtt_override is not None:
        return float(net.fixed_rtt_override)
    return net.a * x + net.b


def network_latency_variance(net):
    return net.sigma2


def clamp_probability(mean, sigma2):
    """Probability a N(mean, sigma2) latency draw falls below 0 and is clamped."""
    if sigma2 <= 0:
        return 0.0 if mean >= 0 else 1.0
    return float(stats.norm.cdf(0.0, loc=mean, scale=math.sqrt(sigma2)))


def sample_network_latency(x, net, rng, size=None, scale=1.0):
    """
    Draw network latency: mean + N(0, sigma2), clamped below at 0.

    Args:
        x: Distance in miles
        net: NetworkParams
        rng: numpy Generator
        size: None for one float, or an int for an array of draws
        scale: Fraction of the round trip drawn (0.5 for one leg); scales
               both mean and variance so two legs sum to the round-trip law

    Returns:
        Latency in ms (float or ndarray)
    """
    mean = network_latency_mean(x, net) * scale
    variance = network_latency_variance(net) * scale
    if variance == 0:
        return _draws(np.full(size, mean) if size is not None else mean, size)
    draws = rng.normal(mean, math.sqrt(variance), size=size)
    return _draws(np.maximum(draws, 0.0), size)


# =============================================================================
# Handover Delay
# =============================================================================

def handover_mean(h):
    return h.f + h.l_f / 2.0


def handover_variance(h):
    return h.l_f ** 2 / 12.0


def sample_handover_delay(h, rng, size=None):
    """Handover delay f + U(0, l_f) in ms."""
    if h.l_f == 0:
        return _draws(np.full(size, h.f) if size is not None else h.f, size)
    return _draws(h.f + rng.uniform(0.0, h.l_f, size=size), size)


# =============================================================================
# Spectrum Manager Service Time
# =============================================================================

def _check_counts(**counts):
    for name, value in counts.items():
        if value < 0:
            raise ScenarioValidationError(f"{name} must be >= 0, got {value}")


def service_time_mean(s, M, N, n, m, expected_n=None):
    """
    Mean job service time (ms) under the configured service law.

    Args:
        s: ServiceTimeParams
        M: Registered TV receivers
        N: Registered secondary links
        n: SUs to be searched / evacuated by this job
        m: PUs interfering with each of those SUs
        expected_n: E(n) used by the exponential law (defaults to n)

    Returns:
        Mean service time in ms
    """
    _check_counts(M=M, N=N, n=n, m=m)
    if s.distribution == "exponential":
        return s.tau * (n if expected_n is None else expected_n)
    if s.distribution == "deterministic":
        return s.l_mean
    return s.g * (M + N) + s.g * M * n + s.h * m * n + s.l_mean


def _sample_jitter(s, rng):
    if s.l_var == 0:
        return s.l_mean
    if s.l_mean > 0:
        # gamma keeps the OS jitter non-negative with the configured moments
        shape = s.l_mean ** 2 / s.l_var
        return float(rng.gamma(shape, s.l_var / s.l_mean))
    return max(0.0, float(rng.normal(0.0, math.sqrt(s.l_var))))


def sample_service_time(s, M, N, n, m, rng, expected_n=None):
    """
    Draw one job service time t_p (ms).

    formula:       g(M+N) + gMn + hmn + l, l drawn with moments (l_mean, l_var)
    exponential:   Exp with mean tau * E(n)
    deterministic: l_mean
    """
    _check_counts(M=M, N=N, n=n, m=m)
    if s.distribution == "exponential":
        mean = service_time_mean(s, M, N, n, m, expected_n)
        return float(rng.exponential(mean)) if mean > 0 else 0.0
    if s.distribution == "deterministic":
        return s.l_mean
    fixed = s.g * (M + N) + s.g * M * n + s.h * m * n
    return max(0.0, fixed + _sample_jitter(s, rng))


def estimate_sm_response_simple(per_query_ms, records_touched, p_evac):
    """
    Back-of-envelope spectrum-manager response for a job that evacuates:
    per-query time x records touched x evacuation probability (ms).
    """
    if per_query_ms < 0 or records_touched < 0 or p_evac < 0:
        raise ScenarioValidationError("per-query time, records and p_evac must be >= 0")
    return per_query_ms * records_touched * p_evac


def per_query_time_for_db_size(records, profile="in-memory"):
    """
    Per-query database time (ms) for a database holding `records` entries.

    Interpolates log(time) linearly in log(records) between the profile's
    anchors; flat below the first anchor, extends the last segment above.

    Args:
        records: Database size (> 0)
        profile: Key of DB_PROFILES

    Returns:
        ms per query
    """
    if profile not in DB_PROFILES:
        raise ScenarioValidationError(
            f"unknown database profile {profile!r}; expected one of {sorted(DB_PROFILES)}")
    if records <= 0:
        raise ScenarioValidationError(f"database size must be > 0, got {records}")

    anchors = DB_PROFILES[profile]
    log_sizes = np.log([r for r, _ in anchors])
    log_times = np.log([t for _, t in anchors])
    log_r = math.log(records)

    if log_r <= log_sizes[0]:
        return float(anchors[0][1])
    if log_r >= log_sizes[-1]:
        slope = (log_times[-1] - log_times[-2]) / (log_sizes[-1] - log_sizes[-2])
        return float(math.exp(log_times[-1] + slope * (log_r - log_sizes[-1])))
    return float(math.exp(np.interp(log_r, log_sizes, log_times)))
