"""
Built-in spectrum-manager architectures and the batch evaluations run on them.

Four levels of centralization:
    fully-distributed  one manager per small-cell base station (a single SU)
    regional           one manager per metro area, 32 processors
    national           one manager for the whole country
    semi-national      50 co-located managers, 1 million receivers each
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from config import REALTIME_DEADLINE_MS, SIM_POPULATION_CAP
from distributions import protection_probability
from evacuation import (
    QUEUEING,
    SIMPLE,
    check_mode,
    evacuation_distribution,
    evacuation_interval,
    mean_evacuation_delay,
    sm_response_simple,
)
from latency import network_latency_mean, per_query_time_for_db_size
from models import (
    HandoverParams,
    HutProfile,
    InstabilityError,
    NetworkParams,
    ProtectionRequirement,
    ScenarioParams,
    ScenarioValidationError,
    ServiceTimeParams,
    SpatialParams,
    TrafficParams,
    _require,
    scenario_from_dict,
    scenario_to_dict,
)
from queueing import queue_model_for, response_time_law
from simulator import run_simulation
from spatial import density_for_expected_count, expected_sus_in_guard_zone

logger = logging.getLogger(__name__)

# =============================================================================
# Built-In Constants
# =============================================================================

GUARD_RADIUS_M = 130.0
SUS_IN_GUARD_ZONE = 200         # upper end of "10 to 200 SUs" per guard zone
PUS_IN_RANGE = 10               # mean TV receivers inside one SBS range
P_EVAC = 0.1
OTA_RATE = 0.14                 # share of households watching over the air
METRO_POPULATION = 8.0e6
NATIONAL_POPULATION = 320.0e6
DAILY_HUT = HutProfile(knots=((4.0, 0.05), (20.0, 0.60)))
HANDOVER = HandoverParams(f=20.0, l_f=20.0)

# upper RTT quoted for a co-located manager; the row itself uses 2 ms
FULLY_DISTRIBUTED_TEXT_RTT_MS = 3.0


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class ScenarioSuite:
    """Named scenarios evaluated against one protection requirement."""

    scenarios: tuple
    protection: ProtectionRequirement = field(default_factory=ProtectionRequirement)
    output: dict = field(default_factory=lambda: {"format": "csv", "decimals": 3})

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        names = [s.name for s in self.scenarios]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        _require(not duplicates, f"duplicate scenario name(s): {duplicates}")

    @property
    def names(self):
        return [s.name for s in self.scenarios]

    def get(self, name):
        for scenario in self.scenarios:
            if scenario.name == name:
                return scenario
        raise ScenarioValidationError(f"unknown scenario {name!r}; expected one of {self.names}")

    def to_dict(self):
        return {
            "protection": {"delta_max": self.protection.delta_max, "o_max": self.protection.o_max},
            "output": dict(self.output),
            "scenarios": [scenario_to_dict(s) for s in self.scenarios],
        }

    @classmethod
    def from_dict(cls, data):
        _require(isinstance(data, dict), "scenario suite must be an object")
        _require(isinstance(data.get("scenarios"), list), "suite needs a 'scenarios' list")
        protection = ProtectionRequirement(**data.get("protection", {}))
        return cls(
            scenarios=tuple(scenario_from_dict(s) for s in data["scenarios"]),
            protection=protection,
            output=dict(data.get("output", {"format": "csv", "decimals": 3})),
        )


@dataclass(frozen=True)
class Table1Row:
    """
    Average channel evacuation time of one architecture.

    evacuation_ms is None when the queueing model is unstable; the interval
    bounds are set for rows reported as a range.
    """

    name: str
    processors: int
    tv_receivers: int
    network_latency_ms: float
    sm_response_ms: Optional[float]
    evacuation_ms: Optional[float]
    evacuation_low_ms: Optional[float] = None
    evacuation_high_ms: Optional[float] = None
    mode: str = SIMPLE
    stable: bool = True
    rho: Optional[float] = None
    protection_probability: Optional[float] = None
    handover_min_ms: float = 0.0
    simulated_evacuation_ms: Optional[float] = None

    def __post_init__(self):
        floor = self.network_latency_ms + self.handover_min_ms
        if self.evacuation_ms is not None:
            _require(self.evacuation_ms >= floor - 1e-9,
                     f"{self.name}: evacuation {self.evacuation_ms} below network + handover {floor}")
        if self.evacuation_low_ms is not None:
            _require(self.evacuation_low_ms <= self.evacuation_high_ms,
                     f"{self.name}: evacuation interval is reversed")

    @property
    def is_interval(self):
        return self.evacuation_low_ms is not None

    def evacuation_label(self):
        if not self.stable:
            return "unstable"
        if self.is_interval:
            return f"{self.evacuation_low_ms:.0f} to {self.evacuation_high_ms:.0f}"
        return f"{self.evacuation_ms:.0f}"


@dataclass(frozen=True)
class Verdict:
    name: str
    criterion: str          # "mean" or "protection"
    value: Optional[float]  # mean t_E (ms) or Pr(t_E <= delta_max)
    threshold: float
    passed: bool


@dataclass(frozen=True)
class SweepPoint:
    tv_receivers: int
    per_query_ms: float
    sm_response_ms: Optional[float]
    mean_evacuation_ms: Optional[float]
    protection_probability: Optional[float]
    rho: float
    stable: bool
    queueing_mean_ms: Optional[float]
    mode: str = SIMPLE


# =============================================================================
# Built-In Scenarios
# =============================================================================

def _service(sm_response_ms, per_query_ms, expected_n):
    """Service parameters whose formula and exponential laws share the per-job SM time."""
    return ServiceTimeParams(
        l_mean=sm_response_ms,
        tau=sm_response_ms / expected_n,
        per_query_ms=per_query_ms,
        records_touched=float(SUS_IN_GUARD_ZONE),
    )


def _region_side(M, lambda_p):
    """Square side (m) on which the placed PUs keep density lambda_p."""
    return float(round(math.sqrt(min(M, SIM_POPULATION_CAP) / lambda_p)))


def _build(name, description, processors, M, N, per_query_ms, net, distance_x,
           interval_report=False):
    lambda_p = density_for_expected_count(PUS_IN_RANGE, GUARD_RADIUS_M)
    side = _region_side(M, lambda_p)
    spatial = SpatialParams(
        lambda_s=density_for_expected_count(SUS_IN_GUARD_ZONE, GUARD_RADIUS_M),
        lambda_p=lambda_p,
        r_p=GUARD_RADIUS_M,
        region_width=side,
        region_height=side,
    )
    expected_n = expected_sus_in_guard_zone(spatial)
    sm = per_query_ms * SUS_IN_GUARD_ZONE * P_EVAC
    return ScenarioParams(
        name=name,
        description=description,
        processors=processors,
        spatial=spatial,
        traffic=TrafficParams(M=M, N=N, hut_profile=DAILY_HUT, p_evac=P_EVAC),
        net=net,
        handover=HANDOVER,
        service=_service(sm, per_query_ms, expected_n),
        distance_x=distance_x,
        interval_report=interval_report,
    )


def builtin_scenarios():
    """
    The four centralization levels with their reference parameters.

    Returns:
        ScenarioSuite checked against the REALTIME_DEADLINE_MS deadline
    """
    metro_receivers = int(round(METRO_POPULATION * OTA_RATE))
    national_receivers = 45_000_000  # 320 M x 14 % = 44.8 M, tabulated as 45 M

    scenarios = (
        _build(
            "fully-distributed",
            "Spectrum manager co-located with each small-cell base station",
            # the manager serves only its own base station
            processors=1, M=130, N=1, per_query_ms=0.5,
            net=NetworkParams(fixed_rtt_override=2.0, rtt_range_ms=(2.0, FULLY_DISTRIBUTED_TEXT_RTT_MS)),
            distance_x=0.0, interval_report=True,
        ),
        _build(
            "regional",
            f"One 32-processor manager per metro area ({METRO_POPULATION / 1e6:.0f} M people "
            f"x {OTA_RATE:.0%} OTA)",
            processors=32, M=metro_receivers, N=100_000, per_query_ms=6.0,
            net=NetworkParams(fixed_rtt_override=5.0, rtt_range_ms=(3.0, 5.0)),
            distance_x=20.0,
        ),
        _build(
            "national",
            f"One manager for the country ({NATIONAL_POPULATION / 1e6:.0f} M people "
            f"x {OTA_RATE:.0%} OTA)",
            processors=100_000, M=national_receivers, N=4_000_000, per_query_ms=100.0,
            net=NetworkParams(fixed_rtt_override=25.0, rtt_range_ms=(25.0, 25.0)),
            distance_x=1000.0,
        ),
        _build(
            "semi-national",
            "50 co-located managers, each serving at most 1 million receivers",
            processors=10_000, M=1_000_000, N=100_000, per_query_ms=6.0,
            net=NetworkParams(fixed_rtt_override=25.0, rtt_range_ms=(25.0, 25.0)),
            distance_x=1000.0,
        ),
    )
    return ScenarioSuite(scenarios=scenarios, protection=ProtectionRequirement(delta_max=REALTIME_DEADLINE_MS))


def scenario_by_name(name):
    return builtin_scenarios().get(name)


# =============================================================================
# Table Reproduction
# =============================================================================

def _table_row(scenario, mode, req):
    network = network_latency_mean(scenario.distance_x, scenario.net)
    base = dict(
        name=scenario.name,
        processors=scenario.processors,
        tv_receivers=scenario.traffic.M,
        network_latency_ms=network,
        mode=mode,
        handover_min_ms=scenario.handover.f,
    )

    if mode == SIMPLE:
        sm = sm_response_simple(scenario)
        low = high = None
        if scenario.interval_report:
            low, high = evacuation_interval(scenario, sm)
        return Table1Row(
            **base,
            sm_response_ms=sm,
            evacuation_ms=mean_evacuation_delay(scenario, SIMPLE),
            evacuation_low_ms=low,
            evacuation_high_ms=high,
            protection_probability=protection_probability(
                evacuation_distribution(scenario, SIMPLE), req),
        )

    q = queue_model_for(scenario)
    try:
        sm = response_time_law(q).mean()
    except InstabilityError as e:
        logger.warning(f"{scenario.name}: {e}")
        return Table1Row(**base, sm_response_ms=None, evacuation_ms=None,
                         stable=False, rho=q.rho)
    return Table1Row(
        **base,
        sm_response_ms=sm,
        evacuation_ms=mean_evacuation_delay(scenario, QUEUEING),
        rho=q.rho,
        protection_probability=protection_probability(
            evacuation_distribution(scenario, QUEUEING), req),
    )


def reproduce_table1(mode=SIMPLE, suite=None):
    """
    Average evacuation time of each built-in architecture.

    Args:
        mode: "simple" (per-job estimate) or "queueing" (M/M/C at prime time)
        suite: ScenarioSuite (default builtin_scenarios())

    Returns:
        List of Table1Row in suite order; unstable queueing rows are flagged
    """
    check_mode(mode)
    suite = builtin_scenarios() if suite is None else suite
    rows = [_table_row(s, mode, suite.protection) for s in suite.scenarios]
    logger.info(f"Evacuation table ({mode}): {len(rows)} rows, {sum(not r.stable for r in rows)} unstable")
    return rows


def simulate_table(rows, suite, duration_s, seed, start_hour=None):
    """
    Attach the simulated mean evacuation delay to each row.

    Every row's scenario is simulated for duration_s seconds with the same
    seed; rows whose run evacuates nobody keep None.
    """
    simulated = []
    for row in rows:
        report = run_simulation(suite.get(row.name), duration_s, seed, start_hour=start_hour)
        logger.info(f"{row.name}: {report.evacuated_sus:,} SU(s) evacuated in {duration_s:g} s")
        simulated.append(replace(row, simulated_evacuation_ms=report.mean_evacuation_ms))
    return simulated


def check_realtime(rows, req, distributional=False):
    """
    Real-time verdict per row.

    Mean criterion: evacuation_ms (interval high end for range rows) <= delta_max.
    Distributional criterion: protection_probability >= o_max.
    Unstable rows fail.
    """
    verdicts = []
    for row in rows:
        if distributional:
            value = row.protection_probability
            passed = value is not None and value >= req.o_max
            verdicts.append(Verdict(row.name, "protection", value, req.o_max, passed))
        else:
            value = row.evacuation_high_ms if row.is_interval else row.evacuation_ms
            passed = value is not None and value <= req.delta_max
            verdicts.append(Verdict(row.name, "mean", value, req.delta_max, passed))
    return verdicts


# =============================================================================
# Centralization Sweep
# =============================================================================

def scale_to_receivers(base, M, profile="in-memory"):
    """Copy of a scenario serving M receivers with database-size-dependent query time."""
    if M <= 0:
        raise ScenarioValidationError(f"manager size must be > 0, got {M}")
    per_query = per_query_time_for_db_size(M, profile)
    sm = per_query * base.service.records_touched * base.traffic.p_evac
    expected_n = expected_sus_in_guard_zone(base.spatial)
    service = replace(base.service, per_query_ms=per_query, l_mean=sm, tau=sm / expected_n)
    return base.evolve(
        name=f"{base.name}@{int(M)}",
        traffic=replace(base.traffic, M=int(M)),
        service=service,
    )


def sweep_centralization(base, manager_sizes, profile="in-memory", req=None, mode=SIMPLE):
    """
    Evaluate a scenario at several manager sizes M.

    Args:
        base: ScenarioParams supplying everything except M and query time
        manager_sizes: Receivers per manager (each > 0)
        profile: Database profile for per-query time
        req: ProtectionRequirement (default the base scenario's)
        mode: "simple" fills the SM, mean and protection columns from the
              per-job estimate; "queueing" from the M/M/C law at prime
              time, left empty where the queue is unstable

    Returns:
        List of SweepPoint in input order
    """
    check_mode(mode)
    if not manager_sizes:
        raise ScenarioValidationError("manager_sizes must not be empty")
    req = base.protection if req is None else req
    points = []
    for M in manager_sizes:
        scenario = scale_to_receivers(base, M, profile)
        q = queue_model_for(scenario)
        queueing_mean = None
        if q.stable:
            queueing_mean = mean_evacuation_delay(scenario, QUEUEING)
        else:
            logger.warning(f"{scenario.name}: unstable at prime time (rho={q.rho:.1f}, C={q.C})")

        if mode == SIMPLE:
            sm = sm_response_simple(scenario)
            mean = mean_evacuation_delay(scenario, SIMPLE)
            protection = protection_probability(evacuation_distribution(scenario, SIMPLE), req)
        elif q.stable:
            sm = response_time_law(q).mean()
            mean = queueing_mean
            protection = protection_probability(evacuation_distribution(scenario, QUEUEING), req)
        else:
            sm = mean = protection = None

        points.append(SweepPoint(
            tv_receivers=scenario.traffic.M,
            per_query_ms=scenario.service.per_query_ms,
            sm_response_ms=sm,
            mean_evacuation_ms=mean,
            protection_probability=protection,
            rho=q.rho,
            stable=q.stable,
            queueing_mean_ms=queueing_mean,
            mode=mode,
        ))
        logger.debug(f"Sweep M={M:,} ({mode}): mean {mean} ms")
    return points
