"""
Discrete-event simulation of the evacuation pipeline.

Per replication:
    1. Place min(M, cap) PUs and min(N, cap) SUs uniformly on the region torus
    2. Build the interference relation database
    3. Generate zapping events (inhomogeneous Poisson, thinning on phi(t))
    4. Each event reaches the spectrum manager after one network leg,
       queues FIFO for one of C servers and is served with a general
       service time
    5. On completion the PU's channel is updated; every SU inside the
       guard zone on that channel receives its own command over a second
       network leg, hands over, and is retuned to a free channel (or
       counted as blocked)

One replication is single-threaded and deterministic given its seed.
"""

import heapq
import logging
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from config import (
    MAX_WORKERS,
    PRIME_TIME_HOUR,
    PROTECTION_CURVE_POINTS,
    QUEUE_TRACE_INTERVAL_MS,
    REPORT_DECIMALS,
    SIM_POPULATION_CAP,
)
from interference_db import IDLE, build_interference_db
from latency import (
    clamp_probability,
    network_latency_mean,
    network_latency_variance,
    sample_handover_delay,
    sample_network_latency,
    sample_service_time,
)
from models import ReportError, ScenarioValidationError, config_digest
from rng import SeedStreams, make_rng, spawn_seeds
from spatial import expected_sus_in_guard_zone, sample_uniform_points

logger = logging.getLogger(__name__)

MS_PER_S = 1000.0
S_PER_HOUR = 3600.0

# Columns of SimReport.components, one row per evacuated SU
COMPONENTS = ("net1", "wait", "service", "net2", "handover")

# Per-leg clamp probability above which a run logs a warning
CLAMP_WARN_PROBABILITY = 1e-3

# Event kinds on the heap
_ARRIVAL = "arrival"
_DEPARTURE = "departure"


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class ZappingEvent:
    timestamp: float  # ms from the start of the run
    pu_id: int
    channel: int


@dataclass
class SimReport:
    """Statistics of one replication (or a merge of several)."""

    scenario_name: str
    seed: int
    config_digest: str
    duration_s: float
    evac_samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    components: np.ndarray = field(default_factory=lambda: np.empty((0, len(COMPONENTS))))
    wait_samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    response_samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    jobs_generated: int = 0
    jobs_processed: int = 0
    jobs_evacuating: int = 0
    evacuated_sus: int = 0
    blocked_sus: int = 0
    clamped_draws: int = 0
    clamp_probability: float = 0.0
    busy_fraction: float = 0.0
    max_queue_length: int = 0
    queue_length_at_horizon: int = 0
    queue_trace: list = field(default_factory=list)
    delta_max: float = 200.0
    replication_seeds: tuple = ()

    def protection_probability(self, delta_max=None):
        """Empirical Pr(t_E <= delta_max); None when nothing was evacuated."""
        delta_max = self.delta_max if delta_max is None else delta_max
        if self.evac_samples.size == 0:
            return None
        return float(np.mean(self.evac_samples <= delta_max))

    def protection_curve(self, points=None):
        points = PROTECTION_CURVE_POINTS if points is None else points
        return {float(d): self.protection_probability(d) for d in points}

    @property
    def mean_evacuation_ms(self):
        return float(self.evac_samples.mean()) if self.evac_samples.size else None

    @property
    def mean_response_ms(self):
        return float(self.response_samples.mean()) if self.response_samples.size else None

    @property
    def waiting_fraction(self):
        """Fraction of served jobs that waited for a server."""
        if self.wait_samples.size == 0:
            return None
        return float(np.mean(self.wait_samples > 0))


# =============================================================================
# Zapping Stream
# =============================================================================

def generate_zapping_stream(traffic, duration_s, seed, n_pus=None, start_hour=None):
    """
    Zapping events with rate M * phi(t) / E(B) per second.

    Candidate times come from a homogeneous process at the peak rate and are
    kept with probability phi(t) / peak.

    Args:
        traffic: TrafficParams
        duration_s: Simulated seconds
        seed: Integer seed or numpy Generator
        n_pus: Placed PUs the events are spread over (default min(M, cap))
        start_hour: Time of day at t=0 (default PRIME_TIME_HOUR)

    Returns:
        List of ZappingEvent in nondecreasing timestamp order
    """
    if duration_s <= 0:
        raise ScenarioValidationError(f"duration must be > 0 s, got {duration_s}")
    rng = make_rng(seed)
    start_hour = PRIME_TIME_HOUR if start_hour is None else start_hour
    n_pus = min(traffic.M, SIM_POPULATION_CAP) if n_pus is None else n_pus

    peak = traffic.hut_profile.peak()
    peak_rate = traffic.M * peak / traffic.E_B
    if peak_rate == 0 or n_pus == 0:
        return []

    count = int(rng.poisson(peak_rate * duration_s))
    times_s = np.sort(rng.uniform(0.0, duration_s, size=count))
    if not traffic.hut_profile.is_constant:
        phi = traffic.hut_profile.evaluate(start_hour + times_s / S_PER_HOUR)
        keep = rng.random(size=count) < phi / peak
        times_s = times_s[keep]

    pu_ids = rng.integers(0, n_pus, size=times_s.size)
    weights = traffic.popularity.weights(traffic.n_channels)
    channels = rng.choice(traffic.n_channels, size=times_s.size, p=weights) + 1

    return [ZappingEvent(float(t * MS_PER_S), int(p), int(c))
            for t, p, c in zip(times_s, pu_ids, channels)]


# =============================================================================
# Population
# =============================================================================

def place_population(scenario, rng):
    """
    Place min(M, SIM_POPULATION_CAP) PUs and min(N, SIM_POPULATION_CAP) SUs
    uniformly on the region torus.

    Arrival rates and service times still use the configured M and N; the
    densities only drive the analytic guard-zone counts.
    """
    spatial, traffic = scenario.spatial, scenario.traffic
    pu_count = min(traffic.M, SIM_POPULATION_CAP)
    su_count = min(traffic.N, SIM_POPULATION_CAP)
    if traffic.M > pu_count or traffic.N > su_count:
        logger.info(f"{scenario.name}: placing {pu_count:,} of {traffic.M:,} PUs "
                    f"and {su_count:,} of {traffic.N:,} SUs")
    pus = sample_uniform_points(pu_count, spatial, rng)
    sus = sample_uniform_points(su_count, spatial, rng)
    return pus, sus


def _leg_clamp_probability(scenario):
    """Probability one network leg draw is clamped at 0."""
    net = scenario.net
    return clamp_probability(0.5 * network_latency_mean(scenario.distance_x, net),
                             0.5 * network_latency_variance(net))


def _initial_db(scenario, pu_points, su_points, streams, start_hour):
    traffic = scenario.traffic
    rng = streams["channels"]
    watching = rng.random(size=len(pu_points)) < traffic.phi(start_hour)
    weights = traffic.popularity.weights(traffic.n_channels)
    watched = rng.choice(traffic.n_channels, size=len(pu_points), p=weights) + 1

    pus = [(i, p, int(c) if w else IDLE)
           for i, (p, w, c) in enumerate(zip(pu_points, watching, watched))]
    sus = [(j, s, None) for j, s in enumerate(su_points)]
    db = build_interference_db(pus, sus, scenario.spatial, traffic.n_channels)

    blocked = 0
    for su_id in range(len(su_points)):
        free = sorted(db.free_channels_for(su_id))
        if free:
            db.set_su_channel(su_id, int(free[rng.integers(len(free))]))
        else:
            blocked += 1
    if blocked:
        logger.debug(f"{blocked} SU(s) start without a free channel")
    return db


# =============================================================================
# Simulation
# =============================================================================

def run_simulation(scenario, duration_s, seed, start_hour=None, population=None):
    """
    Simulate one replication of a scenario.

    Args:
        scenario: ScenarioParams
        duration_s: Seconds of zapping arrivals (queued jobs still drain)
        seed: Integer replication seed
        start_hour: Time of day at t=0 (default PRIME_TIME_HOUR)
        population: Optional (pu_points, su_points) replacing random placement

    Returns:
        SimReport
    """
    if duration_s <= 0:
        raise ScenarioValidationError(f"duration must be > 0 s, got {duration_s}")
    start_hour = PRIME_TIME_HOUR if start_hour is None else start_hour
    streams = SeedStreams(seed)
    traffic, service = scenario.traffic, scenario.service
    C = scenario.processors

    if population is None:
        pu_points, su_points = place_population(scenario, streams["placement"])
    else:
        pu_points, su_points = population
    if traffic.M > 0 and not pu_points:
        raise ScenarioValidationError(
            f"{scenario.name}: M={traffic.M:,} receivers but no PU placed to zap")
    db = _initial_db(scenario, pu_points, su_points, streams, start_hour)

    events = generate_zapping_stream(traffic, duration_s, streams["arrivals"],
                                     n_pus=len(pu_points), start_hour=start_hour)
    report = SimReport(
        scenario_name=scenario.name,
        seed=int(seed),
        config_digest=config_digest(scenario),
        duration_s=float(duration_s),
        jobs_generated=len(events),
        delta_max=scenario.protection.delta_max,
        replication_seeds=(int(seed),),
        clamp_probability=_leg_clamp_probability(scenario),
    )
    if report.clamp_probability > CLAMP_WARN_PROBABILITY:
        logger.warning(f"{scenario.name}: network legs clamp at 0 with probability "
                       f"{report.clamp_probability:.3g}; latency moments are biased")
    if not events:
        logger.info(f"{scenario.name}: no zapping events in {duration_s:g} s")
        return report

    net_rng, hand_rng = streams["network"], streams["handover"]
    service_rng, retune_rng = streams["service"], streams["retune"]
    expected_n = expected_sus_in_guard_zone(scenario.spatial)
    clamp_possible = network_latency_variance(scenario.net) > 0

    # First leg: TV -> spectrum manager
    net1 = sample_network_latency(scenario.distance_x, scenario.net, net_rng,
                                  size=len(events), scale=0.5)
    if clamp_possible:
        report.clamped_draws += int(np.sum(net1 == 0.0))

    heap = []
    for seq, (event, leg) in enumerate(zip(events, net1)):
        heapq.heappush(heap, (event.timestamp + leg, seq, _ARRIVAL, seq))
    next_seq = len(events)

    queue = deque()
    busy = 0
    busy_ms = 0.0
    now = 0.0
    horizon_ms = duration_s * MS_PER_S
    horizon_snapshot = None
    next_trace = 0.0
    arrived_at = {}
    jobs = {}

    evac, comps, waits, responses = [], [], [], []

    def start_service(job, t):
        nonlocal next_seq, busy_ms
        event = events[job]
        affected = db.affected_sus(event.pu_id, event.channel)
        n = len(affected)
        m = (int(round(np.mean([len(db.sus[s].interfered) for s in affected])))
             if affected else 0)
        duration = sample_service_time(service, traffic.M, traffic.N, n, m,
                                       service_rng, expected_n=expected_n)
        wait = t - arrived_at.pop(job)
        jobs[job] = (wait, duration)
        busy_ms += duration
        heapq.heappush(heap, (t + duration, next_seq, _DEPARTURE, job))
        next_seq += 1

    while heap:
        now, _, kind, job = heapq.heappop(heap)
        if horizon_snapshot is None and now >= horizon_ms:
            horizon_snapshot = len(queue)
        if now >= next_trace:
            report.queue_trace.append((now, len(queue)))
            next_trace = now + QUEUE_TRACE_INTERVAL_MS

        if kind == _ARRIVAL:
            arrived_at[job] = now
            if busy < C:
                busy += 1
                start_service(job, now)
            else:
                queue.append(job)
                report.max_queue_length = max(report.max_queue_length, len(queue))
            continue

        # Departure: update the PU, then command every affected SU
        event = events[job]
        wait, duration = jobs.pop(job)
        report.jobs_processed += 1
        waits.append(wait)
        responses.append(wait + duration)

        db.set_pu_channel(event.pu_id, event.channel)
        affected = sorted(db.affected_sus(event.pu_id, event.channel))
        if affected:
            report.jobs_evacuating += 1
        else:
            logger.debug(f"Job {job}: PU {event.pu_id} -> ch {event.channel}, no evacuation")

        for su_id in affected:
            net2 = sample_network_latency(scenario.distance_x, scenario.net, net_rng, scale=0.5)
            if clamp_possible and net2 == 0.0:
                report.clamped_draws += 1
            hand = sample_handover_delay(scenario.handover, hand_rng)
            parts = (float(net1[job]), wait, duration, net2, hand)
            comps.append(parts)
            evac.append(sum(parts))

            free = sorted(db.free_channels_for(su_id))
            if free:
                db.set_su_channel(su_id, int(free[retune_rng.integers(len(free))]))
            else:
                db.set_su_channel(su_id, None)
                report.blocked_sus += 1
        report.evacuated_sus += len(affected)

        busy -= 1
        if queue:
            busy += 1
            start_service(queue.popleft(), now)

    report.queue_length_at_horizon = horizon_snapshot or 0
    report.evac_samples = np.asarray(evac, dtype=float)
    report.components = np.asarray(comps, dtype=float).reshape(-1, len(COMPONENTS))
    report.wait_samples = np.asarray(waits, dtype=float)
    report.response_samples = np.asarray(responses, dtype=float)
    span = max(horizon_ms, now)
    report.busy_fraction = min(1.0, busy_ms / (C * span)) if span > 0 else 0.0

    logger.info(f"{scenario.name} seed={seed}: {report.jobs_processed:,} jobs, "
                f"{report.evacuated_sus:,} evacuations, {report.blocked_sus:,} blocked, "
                f"max queue {report.max_queue_length}")
    return report


# =============================================================================
# M/M/C Validation Queue
# =============================================================================

@dataclass(frozen=True)
class MMCResult:
    n_jobs: int
    mean_wait: float
    mean_response: float
    waiting_fraction: float


def simulate_mmc(lam, mu, C, n_jobs, seed, warmup=0.01):
    """
    FIFO C-server queue with Poisson arrivals and exponential service.

    Jobs are assigned in arrival order to the earliest free server, which
    is FIFO for identical servers.

    Args:
        lam: Arrival rate
        mu: Per-server service rate (same time unit as lam)
        C: Servers
        n_jobs: Simulated jobs
        seed: Integer seed or numpy Generator
        warmup: Leading fraction of jobs discarded from the statistics

    Returns:
        MMCResult (times in 1/lam units)
    """
    if lam <= 0 or mu <= 0 or C < 1 or n_jobs < 1:
        raise ScenarioValidationError("simulate_mmc needs lam > 0, mu > 0, C >= 1, n_jobs >= 1")
    rng = make_rng(seed)
    arrivals = np.cumsum(rng.exponential(1.0 / lam, size=n_jobs)).tolist()
    services = rng.exponential(1.0 / mu, size=n_jobs).tolist()

    free_at = [0.0] * int(C)
    waits = np.empty(n_jobs)
    for i, (a, s) in enumerate(zip(arrivals, services)):
        start = max(a, heapq.heappop(free_at))
        waits[i] = start - a
        heapq.heappush(free_at, start + s)

    skip = int(n_jobs * warmup)
    kept_waits = waits[skip:]
    kept_services = np.asarray(services[skip:])
    return MMCResult(
        n_jobs=int(kept_waits.size),
        mean_wait=float(kept_waits.mean()),
        mean_response=float((kept_waits + kept_services).mean()),
        waiting_fraction=float(np.mean(kept_waits > 0)),
    )


# =============================================================================
# Replications
# =============================================================================

def _run_one(args):
    scenario, duration_s, seed, start_hour = args
    return run_simulation(scenario, duration_s, seed, start_hour=start_hour)


def run_replications(scenario, duration_s, seed, reps, workers=None, start_hour=None):
    """
    Independent replications with seeds derived from the run seed.

    Args:
        workers: Worker processes (default MAX_WORKERS; <= 1 runs in-process)

    Returns:
        Merged SimReport
    """
    if reps < 1:
        raise ScenarioValidationError(f"reps must be >= 1, got {reps}")
    workers = MAX_WORKERS if workers is None else workers
    seeds = spawn_seeds(seed, reps) if reps > 1 else [int(seed)]
    tasks = [(scenario, duration_s, s, start_hour) for s in seeds]

    if workers > 1 and reps > 1:
        logger.info(f"Running {reps} replications on {min(workers, reps)} workers")
        with ProcessPoolExecutor(max_workers=min(workers, reps)) as pool:
            reports = list(pool.map(_run_one, tasks))
    else:
        reports = [_run_one(task) for task in tasks]

    merged = merge_reports(reports)
    merged.seed = int(seed)
    return merged


def merge_reports(reports):
    """
    Combine replications; the result does not depend on input order.

    Samples are concatenated in replication-seed order, counts are summed,
    the busy fraction is duration-weighted, and the queue trace of the
    lowest seed is kept.
    """
    if not reports:
        raise ReportError("no reports to merge")
    ordered = sorted(reports, key=lambda r: r.replication_seeds)
    first = ordered[0]
    if len({r.config_digest for r in ordered}) > 1:
        raise ReportError("cannot merge reports of different scenarios")

    total_s = sum(r.duration_s for r in ordered)
    return SimReport(
        scenario_name=first.scenario_name,
        seed=first.seed,
        config_digest=first.config_digest,
        duration_s=total_s,
        evac_samples=np.concatenate([r.evac_samples for r in ordered]),
        components=np.concatenate([r.components for r in ordered]),
        wait_samples=np.concatenate([r.wait_samples for r in ordered]),
        response_samples=np.concatenate([r.response_samples for r in ordered]),
        jobs_generated=sum(r.jobs_generated for r in ordered),
        jobs_processed=sum(r.jobs_processed for r in ordered),
        jobs_evacuating=sum(r.jobs_evacuating for r in ordered),
        evacuated_sus=sum(r.evacuated_sus for r in ordered),
        blocked_sus=sum(r.blocked_sus for r in ordered),
        clamped_draws=sum(r.clamped_draws for r in ordered),
        clamp_probability=first.clamp_probability,
        busy_fraction=sum(r.busy_fraction * r.duration_s for r in ordered) / total_s,
        max_queue_length=max(r.max_queue_length for r in ordered),
        queue_length_at_horizon=max(r.queue_length_at_horizon for r in ordered),
        queue_trace=list(first.queue_trace),
        delta_max=first.delta_max,
        replication_seeds=tuple(s for r in ordered for s in r.replication_seeds),
    )


# =============================================================================
# Serialization
# =============================================================================

def _rounded(value):
    return None if value is None else round(float(value), REPORT_DECIMALS)


def _rounded_probability(value):
    # tiny probabilities keep 3 significant digits
    return float(f"{value:.3g}")


def report_to_dict(report, include_samples=False):
    """JSON-compatible summary of a SimReport with fixed key order."""
    samples = report.evac_samples
    percentiles = {}
    if samples.size:
        for q in (50, 95, 99):
            percentiles[f"p{q}"] = _rounded(np.percentile(samples, q))

    data = {
        "scenario": report.scenario_name,
        "seed": report.seed,
        "replication_seeds": list(report.replication_seeds),
        "config_digest": report.config_digest,
        "duration_s": _rounded(report.duration_s),
        "jobs_generated": report.jobs_generated,
        "jobs_processed": report.jobs_processed,
        "jobs_evacuating": report.jobs_evacuating,
        "evacuated_sus": report.evacuated_sus,
        "blocked_sus": report.blocked_sus,
        "clamped_draws": report.clamped_draws,
        "clamp_probability": _rounded_probability(report.clamp_probability),
        "mean_evacuation_ms": _rounded(report.mean_evacuation_ms),
        "evacuation_percentiles_ms": percentiles,
        "mean_components_ms": {
            name: _rounded(report.components[:, i].mean()) if report.components.size else None
            for i, name in enumerate(COMPONENTS)
        },
        "mean_response_ms": _rounded(report.mean_response_ms),
        "waiting_fraction": _rounded(report.waiting_fraction),
        "busy_fraction": _rounded(report.busy_fraction),
        "max_queue_length": report.max_queue_length,
        "queue_length_at_horizon": report.queue_length_at_horizon,
        "delta_max_ms": _rounded(report.delta_max),
        "protection_probability": _rounded(report.protection_probability()),
        "protection_curve": {f"{d:g}": _rounded(p) for d, p in report.protection_curve().items()},
        "queue_trace": [[_rounded(t), n] for t, n in report.queue_trace],
    }
    if include_samples:
        data["evacuation_samples_ms"] = [_rounded(v) for v in samples]
    return data
