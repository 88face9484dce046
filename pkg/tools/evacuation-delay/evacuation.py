"""
Evacuation delay of a scenario: t_E = t_N + t_D + t_H.

Two modes:
    simple    - per-job spectrum-manager time from per-query time x records
                touched x evacuation probability (no queueing)
    queueing  - spectrum-manager time from the M/M/C response-time law at a
                time of day
"""

import logging
from dataclasses import dataclass
from typing import Optional

from distributions import (
    compose_evacuation_delay,
    from_law,
    gaussian,
    point_mass,
    protection_probability,
    uniform,
)
from latency import (
    estimate_sm_response_simple,
    handover_mean,
    network_latency_mean,
    network_latency_variance,
)
from models import ScenarioValidationError
from queueing import erlang_c, queue_model_for, response_time_law

logger = logging.getLogger(__name__)

SIMPLE = "simple"
QUEUEING = "queueing"
MODES = (SIMPLE, QUEUEING)


def check_mode(mode):
    if mode not in MODES:
        raise ScenarioValidationError(f"mode must be one of {MODES}, got {mode!r}")


# =============================================================================
# Component Laws
# =============================================================================

def network_distribution(scenario):
    """Round-trip latency law N(a*x + b, sigma2) (or the fixed RTT), clamped at 0."""
    mean = network_latency_mean(scenario.distance_x, scenario.net)
    return gaussian(mean, network_latency_variance(scenario.net), name="network")


def handover_distribution(scenario):
    h = scenario.handover
    return uniform(h.f, h.f + h.l_f, name="handover")


def sm_response_simple(scenario):
    """Per-job spectrum-manager time of the back-of-envelope estimate (ms)."""
    s = scenario.service
    return estimate_sm_response_simple(s.per_query_ms, s.records_touched, scenario.traffic.p_evac)


def sm_distribution(scenario, mode=QUEUEING, hour=None):
    """
    Spectrum-manager response law.

    Raises:
        InstabilityError: queueing mode with rho >= C
    """
    check_mode(mode)
    if mode == SIMPLE:
        return point_mass(sm_response_simple(scenario), name="spectrum-manager")
    law = response_time_law(queue_model_for(scenario, hour))
    return from_law(law, name="spectrum-manager")


def evacuation_distribution(scenario, mode=QUEUEING, hour=None, step=None, upper=None):
    """Composed t_E distribution of a scenario (grid representation)."""
    return compose_evacuation_delay(
        network_distribution(scenario),
        sm_distribution(scenario, mode, hour),
        handover_distribution(scenario),
        step=step,
        upper=upper,
    )


# =============================================================================
# Scenario Means
# =============================================================================

def mean_evacuation_delay(scenario, mode=SIMPLE, hour=None):
    """
    Mean evacuation delay (ms) of a scenario.

    simple mode adds network mean, per-job estimate and handover mean;
    queueing mode replaces the per-job estimate with the response-time law mean.

    Raises:
        InstabilityError: queueing mode with rho >= C
    """
    check_mode(mode)
    network = network_latency_mean(scenario.distance_x, scenario.net)
    handover = handover_mean(scenario.handover)
    if mode == SIMPLE:
        sm = sm_response_simple(scenario)
    else:
        sm = response_time_law(queue_model_for(scenario, hour)).mean()
    return network + sm + handover


def evacuation_interval(scenario, sm_ms=None):
    """
    Range of evacuation delay (ms): lowest quoted RTT plus the handover
    support start, up to the highest quoted RTT plus the handover support end.
    """
    sm_ms = sm_response_simple(scenario) if sm_ms is None else sm_ms
    net = scenario.net
    if net.rtt_range_ms is not None:
        rtt_lo, rtt_hi = net.rtt_range_ms
    else:
        rtt_lo = rtt_hi = network_latency_mean(scenario.distance_x, net)
    h = scenario.handover
    return rtt_lo + sm_ms + h.f, rtt_hi + sm_ms + h.f + h.l_f


# =============================================================================
# Time-Of-Day Profile
# =============================================================================

@dataclass(frozen=True)
class DiurnalPoint:
    hour: float
    phi: float
    arrival_rate: float
    rho: float
    stable: bool
    p_wait: Optional[float]
    mean_evacuation_ms: Optional[float]
    protection_probability: Optional[float]


def diurnal_profile(scenario, hours=None, req=None):
    """
    Quasi-static queueing evaluation of a scenario across the day.

    Args:
        scenario: ScenarioParams
        hours: Hours of day to evaluate (default 0..23)
        req: ProtectionRequirement (default the scenario's)

    Returns:
        List of DiurnalPoint; unstable hours carry None for the queue metrics
    """
    hours = list(range(24)) if hours is None else list(hours)
    req = scenario.protection if req is None else req
    points = []

    for hour in hours:
        q = queue_model_for(scenario, hour)
        if not q.stable:
            logger.warning(f"{scenario.name}: unstable at hour {hour} (rho={q.rho:.1f}, C={q.C})")
            points.append(DiurnalPoint(hour, scenario.traffic.phi(hour), q.lam, q.rho,
                                       False, None, None, None))
            continue
        d = evacuation_distribution(scenario, QUEUEING, hour)
        points.append(DiurnalPoint(
            hour=hour,
            phi=scenario.traffic.phi(hour),
            arrival_rate=q.lam,
            rho=q.rho,
            stable=True,
            p_wait=erlang_c(q.C, q.rho),
            mean_evacuation_ms=mean_evacuation_delay(scenario, QUEUEING, hour),
            protection_probability=protection_probability(d, req),
        ))

    logger.info(f"{scenario.name}: diurnal profile over {len(points)} hour(s), "
                f"{sum(p.stable for p in points)} stable")
    return points
